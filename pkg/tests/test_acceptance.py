"""Acceptance checks, one test per criterion, each printing a PASS/FAIL line."""
import math
import random
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

import stencilkit as sk
from conftest import ARCHS, arch_id, grids_for, random_core
from stencilkit.bench import BenchmarkConfig, checksum, run_jacobi, run_weak_scaling
from stencilkit.context import ContextState, LibraryPhase
from stencilkit.decomposition import aspect_ratio
from stencilkit.domain import HaloSpec
from stencilkit.spaces import Space, sweep_space
from test_spaces import column_scan, pascal_op, scan_op


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nacceptance {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


# 1 -------------------------------------------------------------------------


def test_01_fused_matches_baseline(report):
    t0 = time.perf_counter()
    rows = []
    for dim, n in ((2, 256), (3, 64)):
        recs = {v: run_jacobi(BenchmarkConfig(variant=v, dim=dim, extents=(n,), epsilon=1e-6,
                                              arch="sequential", seed=42))
                for v in ("fused", "baseline")}
        f, b = recs["fused"], recs["baseline"]
        rows.append((f.iterations == b.iterations and f.checksum == b.checksum and f.converged,
                     f"{dim}D {n}: {f.iterations}/{b.iterations} iters, {f.checksum}"))
    elapsed = time.perf_counter() - t0
    ok = all(r[0] for r in rows) and elapsed < 10.0
    report(1, ok, "; ".join(r[1] for r in rows) + f"; {elapsed:.2f}s")


# 2 -------------------------------------------------------------------------


def _reduce_trace(variant, data, iters):
    now, before = sk.make_grid(data.shape, 1), sk.make_grid(data.shape, 1)
    now.set_core(data)
    diff, conv = sk.op_diffusion(), sk.op_convergence(1e-6)
    fused = sk.fuse(sk.op_diffusion(), sk.op_convergence(1e-6))
    values = []
    with sk.begin("sequential", [now, before]) as ctx:
        for _ in range(iters):
            sk.swap_grids(now, before)
            if variant == "fused":
                values.append(sk.do_reduce(ctx, (now, before), fused, sk.reduction_and()))
            else:
                sk.do_all(ctx, (now, before), diff)
                values.append(sk.do_reduce(ctx, (now, before), conv, sk.reduction_and()))
    return values, checksum(now.core_array())


def test_02_fusion_halves_the_scans(report):
    recs = {v: run_jacobi(BenchmarkConfig(variant=v, extents=(48, 40), arch="sequential",
                                          epsilon=1e-6, count=True, seed=5))
            for v in ("fused", "two-pass")}
    f, t = recs["fused"], recs["two-pass"]
    cells = 48 * 40
    counts_ok = f.applications == cells * f.iterations and t.applications == 2 * f.applications
    same_run = f.iterations == t.iterations and f.checksum == t.checksum
    data = random_core((48, 40), 5)
    fv, fsum = _reduce_trace("fused", data, f.iterations)
    tv, tsum = _reduce_trace("two-pass", data, f.iterations)
    traces_ok = fv == tv and fsum == tsum and fv[-1]
    report(2, counts_ok and same_run and traces_ok,
           f"fused {f.applications} = {cells}x{f.iterations}, two-pass {t.applications}, "
           f"{len(fv)} reduce values equal")


# 3 -------------------------------------------------------------------------

SPACES_3D = [sweep_space(a, d) for a in (0, 1, 2) for d in ("increasing", "decreasing")]


def _matrix_case(arch, extents, space, data):
    """Grid contents (and reduction values) for one space on one architecture."""
    dim = len(extents)
    if space.kind == "reduce":
        (g,) = grids_for(arch, extents, 1, halo=0)
        g.set_core(data)
        value = sk.StencilOp(lambda a: a(), ("r",), 0, returns=True, vectorized=True)
        bits = sk.StencilOp(lambda a: a() > 0.5, ("r",), 0, returns=True, vectorized=True)
        ints = sk.StencilOp(lambda a: (a() * 1000).astype(np.int64), ("r",), 0, returns=True,
                            vectorized=True)
        with sk.begin(arch, [g]) as ctx:
            return (sk.do_reduce(ctx, (g,), value, sk.reduction_sum()),
                    sk.do_reduce(ctx, (g,), ints, sk.reduction_sum("int64")),
                    sk.do_reduce(ctx, (g,), value, sk.reduction_max()),
                    sk.do_reduce(ctx, (g,), bits, sk.reduction_and()))
    v, u = grids_for(arch, extents, 2)
    u.set_core(data)
    if space.kind == "all":
        op = sk.op_diffusion()
    elif space.kind == "diamond":
        op = pascal_op()
    else:
        op = scan_op(space.axis, dim, -1 if space.forward else 1)
    with sk.begin(arch, [v, u]) as ctx:
        ctx.execute(space, (v, u), op)
    return v.core_array()


def test_03_backend_equivalence_matrix(report):
    t0 = time.perf_counter()
    cases = [((18, 15), s) for s in (Space("all"), Space("reduce"), Space("diamond"))]
    cases += [((18, 15), sweep_space(a, d)) for a in (0, 1) for d in ("increasing", "decreasing")]
    cases += [((9, 8, 7), s) for s in SPACES_3D]
    failures, checked = [], 0
    for extents, space in cases:
        data = random_core(extents, 11)
        ref = _matrix_case(sk.make_arch("sequential"), extents, space, data)
        for levels, workers in ARCHS:
            got = _matrix_case(sk.make_arch(levels, workers), extents, space, data)
            if space.kind == "reduce":
                ok = (abs(got[0] - math.fsum(data.ravel())) <= 1e-12 * abs(ref[0])
                      and got[1:] == ref[1:])
            else:
                ok = np.array_equal(got, ref)
            checked += 1
            if not ok:
                failures.append(f"{arch_id((levels, workers))}/{space}")
    elapsed = time.perf_counter() - t0
    report(3, not failures and elapsed < 60.0,
           f"{checked} arch x space cases, {len(failures)} mismatches {failures[:3]}, "
           f"{elapsed:.1f}s")


# 4 -------------------------------------------------------------------------


def test_04_ordered_spaces_exact(report):
    v, u = grids_for(sk.make_arch("sequential"), (20, 20), 2, role="int64")
    u[0, 0] = 1
    with sk.begin("sequential", [v, u]) as ctx:
        sk.do_diamond(ctx, (v, u), pascal_op())
    got = v.core_array()
    pascal_ok = all(int(got[i, j]) == math.comb(i + j, i) for i in range(20) for j in range(20))
    scans_ok = True
    for axis, forward in product((0, 1, 2), (True, False)):
        data = random_core((8, 8, 8), 7 * axis + forward)
        w, x = sk.make_grid((8, 8, 8), 1), sk.make_grid((8, 8, 8), 1)
        x.set_core(data)
        with sk.begin("sequential", [w, x]) as ctx:
            sk.do_sweep(ctx, (w, x), scan_op(axis, 3, -1 if forward else 1), axis,
                        sk.INCREASING if forward else sk.DECREASING)
        scans_ok &= np.array_equal(w.core_array(), column_scan(data, axis, forward))
    report(4, pascal_ok and scans_ok,
           f"pascal 20x20 {'exact' if pascal_ok else 'wrong'}, 6 sweeps on 8^3 "
           f"{'match' if scans_ok else 'differ'}")


# 5 -------------------------------------------------------------------------


def _figure_program():
    """The annotated begin/end program, one entry per annotated statement."""
    outcomes = {}
    lib = sk.Library()
    lib.init()
    arch = sk.make_arch("device")
    v, u = grids_for(arch, (12, 12), 2)
    u[10, 10] = 36.0
    ctx = lib.begin(arch, [v, u])
    try:
        sk.do_all(ctx, (v, u), sk.op_diffusion())
        outcomes["do_all while active"] = True
    except sk.StencilError:
        outcomes["do_all while active"] = False
    try:
        sk.read(v, (10, 10))
        outcomes["read while active raises"] = False
    except sk.ContextViolation:
        outcomes["read while active raises"] = True
    lib.end(ctx)
    outcomes["read after end"] = sk.read(v, (10, 10)) == 6.0
    try:
        sk.do_all(ctx, (v, u), sk.op_diffusion())
        outcomes["do_all on ended context raises"] = False
    except sk.ContextViolation:
        outcomes["do_all on ended context raises"] = True
    lib.finalize()
    for name, call in (("init after finalize", lib.init), ("finalize twice", lib.finalize)):
        try:
            call()
            outcomes[name] = False
        except sk.PhaseViolation:
            outcomes[name] = lib.phase is LibraryPhase.FINALIZED
    early = sk.Library()
    try:
        early.finalize()
        outcomes["finalize before init"] = False
    except sk.PhaseViolation:
        outcomes["finalize before init"] = early.phase is LibraryPhase.UNINITIALIZED
    return outcomes


U, R, C, F = (LibraryPhase.UNINITIALIZED, LibraryPhase.READY, LibraryPhase.IN_CONTEXT,
              LibraryPhase.FINALIZED)

# (action, phase, context active) -> (next phase, expected error or None)
PHASE_TABLE = {}
for _ph, _act in product((U, R, C, F), (False, True)):
    PHASE_TABLE[("init", _ph, _act)] = (R, None) if _ph is U else (_ph, sk.PhaseViolation)
    PHASE_TABLE[("finalize", _ph, _act)] = (F, None) if _ph is R else (_ph, sk.PhaseViolation)
    PHASE_TABLE[("begin", _ph, _act)] = (C, None) if _ph is R else (_ph, sk.PhaseViolation)
    PHASE_TABLE[("end", _ph, _act)] = (R, None) if _act else (_ph, sk.ContextViolation)
    PHASE_TABLE[("do_all", _ph, _act)] = (_ph, None) if _act else (_ph, sk.ContextViolation)
    PHASE_TABLE[("read", _ph, _act)] = (_ph, sk.ContextViolation) if _act else (_ph, None)
    PHASE_TABLE[("write", _ph, _act)] = (_ph, sk.ContextViolation) if _act else (_ph, None)

ACTIONS = ("init", "finalize", "begin", "end", "do_all", "read", "write")


def _model_check(sequences, length, seed):
    rng = random.Random(seed)
    undefined = []
    for n in range(sequences):
        lib = sk.Library()
        v, u = sk.make_grid((4, 4), 1), sk.make_grid((4, 4), 1)
        ctx = None
        calls = {
            "init": lib.init,
            "finalize": lib.finalize,
            "begin": lambda: lib.begin("sequential", [v, u]),
            "end": lambda: lib.end(ctx),
            "do_all": lambda: sk.do_all(ctx, (v, u), sk.op_diffusion()),
            "read": lambda: sk.read(v, (1, 1)),
            "write": lambda: sk.write(v, (1, 1), 2.0),
        }
        for _ in range(length):
            name = rng.choice(ACTIONS)
            if name in ("end", "do_all") and ctx is None:
                continue  # these need a context handle to exist at all
            active = ctx is not None and ctx.state is ContextState.ACTIVE
            want_phase, want_err = PHASE_TABLE[(name, lib.phase, active)]
            try:
                out = calls[name]()
                err = None
            except sk.StencilError as exc:
                err = type(exc)
            if name == "begin" and err is None:
                ctx = out
            if err is not want_err or lib.phase is not want_phase:
                undefined.append((n, name, err, lib.phase))
        if ctx is not None and ctx.active:
            lib.end(ctx)
    return undefined


def test_05_context_legality(report):
    outcomes = _figure_program()
    undefined = _model_check(10_000, 8, seed=2024)
    bad_lines = [k for k, ok in outcomes.items() if not ok]
    report(5, not bad_lines and not undefined,
           f"{len(outcomes)} annotated statements ({bad_lines or 'all as annotated'}), "
           f"10000 random sequences, {len(undefined)} undefined transitions {undefined[:3]}")


# 6 -------------------------------------------------------------------------


def test_06_device_staging_counters(report):
    details, ok = [], True
    for modes in (None, {"v": "w", "u": "r"}, {"v": "rw", "u": "r"}):
        arch = sk.make_arch("device")
        v, u = grids_for(arch, (16, 16), 2)
        u.set_core(random_core((16, 16), 3))
        m = {v: modes["v"], u: modes["u"]} if modes else None
        ctx = sk.begin(arch, [v, u], modes=m)
        up = ctx.transfers.h2d
        for _ in range(5):
            sk.do_all(ctx, (v, u), sk.op_diffusion())
            sk.do_reduce(ctx, (v, u), sk.op_convergence(1e-3), sk.reduction_and())
        between = (ctx.transfers.h2d - up, ctx.transfers.d2h)
        sk.end(ctx)
        down = ctx.transfers.d2h
        readers = 2 if not modes else sum(mo != "w" for mo in modes.values())
        writers = 2 if not modes else sum(mo != "r" for mo in modes.values())
        ok &= up <= readers and down <= writers and between == (0, 0) and ctx.launches == 10
        details.append(f"up {up}/{readers} down {down}/{writers} between {between}")
    report(6, ok, "; ".join(details))


# 7 -------------------------------------------------------------------------


def _best_ratio(P, d):
    divs = [a for a in range(1, P + 1) if P % a == 0]
    if d == 2:
        return min(Fraction(max(a, P // a), min(a, P // a)) for a in divs)
    return min(aspect_ratio((a, b, P // (a * b))) for a in divs for b in divs if (P // a) % b == 0)


def _cover_ok(extents, workers):
    dec = sk.decompose(extents, workers, HaloSpec.uniform(len(extents), 0))
    cover = np.zeros(extents, int)
    for t in dec.tiles:
        cover[tuple(slice(o, s) for o, s in zip(t.origin, t.stop))] += 1
    return (cover == 1).all() and len(dec.tiles) == math.prod(workers)


def _ghosts_ok(extents, workers, halo):
    arch = sk.make_arch("tiled,sequential", workers)
    data = random_core(extents, workers + halo)
    g = sk.make_grid(extents, halo, storage=sk.default_storage(arch))
    g.set_core(data)
    dec = g.storage.decomp
    sk.exchange_halos(dec, g)
    ref = sk.make_grid(extents, halo)
    ref.set_core(data)
    glob, m = ref.padded_array(), g.halo.minus
    for t, b in zip(dec.tiles, g.storage.blocks):
        # the block spans [origin - minus, stop + plus) in global coordinates;
        # clip it to the global core and compare with the owner values there
        lo = [max(o - mk, 0) for o, mk in zip(t.origin, m)]
        hi = [min(s + p, n) for s, p, n in zip(t.stop, g.halo.plus, extents)]
        local = tuple(slice(l - o + mk, h - o + mk) for l, h, o, mk in zip(lo, hi, t.origin, m))
        gl = tuple(slice(l + mk, h + mk) for l, h, mk in zip(lo, hi, m))
        if not np.array_equal(b.host[local], glob[gl]):
            return False
    return True


def test_07_decomposition_suite(report):
    fact_bad = [(P, d) for P in range(1, 1025) for d in (2, 3)
                if aspect_ratio(sk.factorize_workers(P, d)) != _best_ratio(P, d)
                or math.prod(sk.factorize_workers(P, d)) != P]
    cover_bad, covers = [], 0
    for n0, P in product(range(1, 33), range(1, 17)):
        if P <= n0:
            covers += 1
            if not _cover_ok((n0,), (P,)):
                cover_bad.append((n0, P))
    for n0, n1, P in product(range(1, 33), range(1, 33), range(1, 17)):
        wg = sk.factorize_workers(P, 2)
        if wg[0] <= n0 and wg[1] <= n1:
            covers += 1
            if not _cover_ok((n0, n1), wg):
                cover_bad.append((n0, n1, P))
    ghost_bad, ghosts = [], 0
    shapes = [(n,) for n in range(2, 13)] + [(a, b) for a in range(2, 10) for b in (3, 7, 10)]
    shapes += [(4, 5, 6), (6, 6, 6), (3, 7, 5)]
    for extents, P, halo in product(shapes, range(1, 7), (1, 2)):
        try:
            ok = _ghosts_ok(extents, P, halo)
        except sk.OverDecomposed:
            continue
        ghosts += 1
        if not ok:
            ghost_bad.append((extents, P, halo))
    report(7, not (fact_bad or cover_bad or ghost_bad),
           f"factorize P<=1024 in 2D/3D ({len(fact_bad)} bad), {covers} covers "
           f"({len(cover_bad)} bad), {ghosts} exchanges ({len(ghost_bad)} bad)")


# 8 -------------------------------------------------------------------------

N_RB = 33
H2 = (1.0 / (N_RB + 1)) ** 2


def red_black_op(parity):
    """In-place Gauss-Seidel update of the cells with ``(i + j) % 2 == parity``."""

    def body(u, f):
        i, j = u.index()
        new = (u(-1, 0) + u(1, 0) + u(0, -1) + u(0, 1) + H2 * f()) / 4.0
        u.set(np.where((i + j) % 2 == parity, new, u()))

    return sk.StencilOp(body, ("rw", "r"), [1, 0], vectorized=True, stateful=True,
                        name=f"red_black_{parity}")


def red_black_oracle(u, f):
    """One sequential red-black sweep on a zero-bordered array ``u``."""
    i, j = np.indices(f.shape)
    for parity in (0, 1):
        core = u[1:-1, 1:-1]
        new = (u[:-2, 1:-1] + u[2:, 1:-1] + u[1:-1, :-2] + u[1:-1, 2:] + H2 * f) / 4.0
        mask = (i + j) % 2 == parity
        core[mask] = new[mask]


def poisson_residual(u, f):
    lap = (u[:-2, 1:-1] + u[2:, 1:-1] + u[1:-1, :-2] + u[1:-1, 2:] - 4 * u[1:-1, 1:-1]) / H2
    return float(np.abs(f + lap).max())


def _red_black_run(arch, f, tol, max_sweeps):
    u, rhs = grids_for(arch, (N_RB, N_RB), 2)
    rhs.set_core(f)
    ref = np.zeros((N_RB + 2, N_RB + 2))
    red, black = red_black_op(0), red_black_op(1)
    sweeps, matched = 0, True
    while sweeps < max_sweeps:
        with sk.begin(arch, [u, rhs]) as ctx:
            sk.do_all(ctx, (u, rhs), red)
            sk.do_all(ctx, (u, rhs), black)
        red_black_oracle(ref, f)
        sweeps += 1
        matched &= np.array_equal(u.core_array(), ref[1:-1, 1:-1])
        if poisson_residual(ref, f) < tol:
            break
    return sweeps, matched, poisson_residual(np.pad(u.core_array(), 1), f)


def test_08_red_black_gauss_seidel(report):
    x = (np.arange(N_RB) + 1.0) / (N_RB + 1)
    f = np.outer(np.sin(np.pi * x), np.sin(2 * np.pi * x)) + 1.0
    seq = _red_black_run(sk.make_arch("sequential"), f, 1e-6, 5000)
    par = _red_black_run(sk.make_arch("tiled,threaded,sequential", 2), f, 1e-6, 5000)
    ok = seq[1] and par[1] and seq[2] < 1e-6 and par[2] < 1e-6 and seq[0] == par[0]
    report(8, ok, f"{seq[0]} sweeps, bitwise per sweep: sequential {seq[1]}, "
                  f"tiled+threaded {par[1]}, residual {seq[2]:.2e}")


# 9 -------------------------------------------------------------------------


def test_09_cost_of_abstraction(report):
    sk.set_kernel_mode("numba")
    cfg = dict(extents=(2000, 2000), arch="sequential", reps=7, fixed_iters=10)
    fused = run_jacobi(BenchmarkConfig(variant="fused", **cfg))
    base = run_jacobi(BenchmarkConfig(variant="baseline", **cfg))
    ratio = fused.per_element_s / base.per_element_s
    report(9, ratio <= 1.25 and fused.checksum == base.checksum,
           f"fused {fused.per_element_s:.3e} s/elem, baseline {base.per_element_s:.3e} s/elem, "
           f"ratio {ratio:.3f} (bound 1.25)")


# 10 ------------------------------------------------------------------------


def test_10_weak_scaling(report):
    recs = run_weak_scaling((256, 256), [1, 2, 4], iterations=100)
    same = []
    for r in recs:
        seq = run_jacobi(BenchmarkConfig(extents=r.config.extents, arch="sequential",
                                         fixed_iters=100))
        same.append(seq.checksum == r.checksum)
    ratio = recs[2].per_element_s / recs[0].per_element_s
    report(10, all(same) and ratio <= 3.0,
           f"extents {[r.config.extents for r in recs]}, checksums equal {same}, "
           f"4-worker/1-worker per-element {ratio:.2f} (bound 3)")
