"""Jacobi benchmark: fused and two-pass library loops against a hand-written baseline.

Every variant starts from the same seeded grid (uniform ``[0, 1)`` interior,
zero halo) and iterates ``now = diffusion(before)`` until every element moved
by at most ``epsilon``. Timing covers the iteration loop only.
"""

import statistics
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .. import _jit
from ..arch import Architecture, LevelTag, make_arch
from ..context import default_storage, library
from ..decomposition import factorize_workers
from ..errors import UnsupportedVariantArch
from ..grid import make_grid, swap_grids
from ..operators import counting, fuse, op_convergence, op_diffusion, reduction_and
from ..spaces import do_all, do_reduce

VARIANTS = ("fused", "two-pass", "baseline")


@dataclass(frozen=True)
class BenchmarkConfig:
    """One benchmark run.

    ``arch`` is a level list, a comma separated string, an Architecture, or
    None for the library default (the baseline always runs sequentially).
    ``fixed_iters`` runs exactly that many iterations instead of stopping at
    convergence. ``count`` wraps the operators in application counters.
    """

    variant: str = "fused"
    dim: int = 2
    extents: tuple = (64, 64)
    epsilon: float = 1e-6
    max_iters: int = 10000
    arch: object = None
    workers: int = None
    reps: int = 1
    seed: int = 0
    fixed_iters: int = None
    count: bool = False

    def __post_init__(self):
        ext = tuple(int(n) for n in self.extents)
        if len(ext) == 1:
            ext = ext * self.dim
        object.__setattr__(self, "extents", ext)
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.dim not in (2, 3) or len(ext) != self.dim:
            raise ValueError(f"need 2 or 3 extents matching dim={self.dim}, got {ext}")
        if any(n < 1 for n in ext):
            raise ValueError(f"extents must be positive, got {ext}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1 or (self.fixed_iters is not None and self.fixed_iters < 1):
            raise ValueError("iteration limits must be positive")

    @property
    def cells(self):
        return int(np.prod(self.extents))


@dataclass
class BenchmarkRecord:
    config: BenchmarkConfig
    arch: str
    workers: int
    iterations: int
    total_s: float
    converged: bool
    checksum: str
    applications: int = None
    times: list = field(default_factory=list)

    @property
    def per_element_s(self):
        return self.total_s / (self.config.cells * self.iterations)


# --- checksum -------------------------------------------------------------

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix(x):
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def checksum(core):
    """Order-independent digest of ``(flat index, bit pattern)`` pairs, as 16 hex digits.

    Each pair is hashed on its own and the hashes are summed modulo 2**64, so
    the order cells are visited in (or tiles gathered in) cannot matter.
    """
    core = np.ascontiguousarray(core)
    bits = core.view(f"u{core.dtype.itemsize}").ravel().astype(np.uint64)
    idx = np.arange(bits.size, dtype=np.uint64)
    h = _mix(_mix(idx) ^ bits)
    return f"{int(h.sum(dtype=np.uint64)):016x}"


# --- hand-written baseline ------------------------------------------------


@_jit.njit(cache=True)
def _baseline2(now, before, eps):
    n0, n1 = now.shape
    converged = True
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            now[i, j] = 1.0 / 36.0 * (6 * before[i, j] - before[i + 1, j] - before[i - 1, j]
                                      - before[i, j + 1] - before[i, j - 1])
            if abs(now[i, j] - before[i, j]) > eps:
                converged = False
    return converged


@_jit.njit(cache=True)
def _baseline3(now, before, eps):
    n0, n1, n2 = now.shape
    converged = True
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            for k in range(1, n2 - 1):
                now[i, j, k] = 1.0 / 36.0 * (
                    6 * before[i, j, k] - before[i + 1, j, k] - before[i - 1, j, k]
                    - before[i, j + 1, k] - before[i, j - 1, k]
                    - before[i, j, k + 1] - before[i, j, k - 1])
                if abs(now[i, j, k] - before[i, j, k]) > eps:
                    converged = False
    return converged


def _baseline_numpy(now, before, eps):
    c = tuple(slice(1, -1) for _ in range(now.ndim))
    acc = 6 * before[c]
    for axis in range(now.ndim):
        for shift in (2, 0):
            s = list(c)
            s[axis] = slice(shift, now.shape[axis] - 2 + shift)
            acc = acc - before[tuple(s)]
    now[c] = 1.0 / 36.0 * acc
    return bool(np.all(np.abs(now[c] - before[c]) <= eps))


def baseline_step(now, before, eps):
    """One fused Jacobi step on plain padded arrays; True once converged."""
    if _jit.kernel_mode() == "numba":
        return (_baseline2 if now.ndim == 2 else _baseline3)(now, before, eps)
    return _baseline_numpy(now, before, eps)


# --- runs -----------------------------------------------------------------


def initial_core(cfg):
    return np.random.default_rng(cfg.seed).random(cfg.extents)


def resolve_arch(cfg):
    if isinstance(cfg.arch, Architecture):
        return cfg.arch
    if cfg.arch is None:
        if cfg.variant == "baseline":
            return make_arch([LevelTag.SEQUENTIAL])
        arch = library().default_arch()
        return arch if cfg.workers is None else make_arch(list(arch.levels), cfg.workers)
    return make_arch(cfg.arch, cfg.workers)


def _iterations(cfg):
    return cfg.fixed_iters if cfg.fixed_iters is not None else cfg.max_iters


def _run_baseline(cfg, data):
    now = np.zeros(tuple(n + 2 for n in cfg.extents))
    before = np.zeros_like(now)
    now[tuple(slice(1, -1) for _ in cfg.extents)] = data
    limit, it, res = _iterations(cfg), 0, False
    t0 = time.perf_counter()
    while True:
        now, before = before, now
        res = baseline_step(now, before, cfg.epsilon)
        it += 1
        if it >= limit or (res and cfg.fixed_iters is None):
            break
    elapsed = time.perf_counter() - t0
    return it, res, elapsed, now[tuple(slice(1, -1) for _ in cfg.extents)], None


def _run_library(cfg, arch, data):
    store = default_storage(arch, "float64")
    now = make_grid(cfg.extents, 1, storage=store)
    before = make_grid(cfg.extents, 1, storage=store)
    now.set_core(data)
    conv = op_convergence(cfg.epsilon)
    land = reduction_and()
    counters = []
    if cfg.variant == "fused":
        step_op = fuse(op_diffusion(), conv)
        if cfg.count:
            step_op = counting(step_op)
            counters.append(step_op)
    else:
        diff = op_diffusion()
        if cfg.count:
            diff, conv = counting(diff), counting(conv)
            counters += [diff, conv]
    limit, it, res = _iterations(cfg), 0, False
    ctx = library().begin(arch, [now, before])
    try:
        t0 = time.perf_counter()
        while True:
            swap_grids(now, before)
            if cfg.variant == "fused":
                res = do_reduce(ctx, (now, before), step_op, land)
            else:
                do_all(ctx, (now, before), diff)
                res = do_reduce(ctx, (now, before), conv, land)
            it += 1
            if it >= limit or (res and cfg.fixed_iters is None):
                break
        elapsed = time.perf_counter() - t0
    finally:
        if ctx.active:
            ctx.end()
    apps = sum(c.applications for c in counters) if counters else None
    return it, bool(res), elapsed, now.core_array(), apps


_warm = set()


def _warmup(cfg, arch):
    """Run a tiny instance once so compilation stays out of the timings."""
    key = (cfg.variant, cfg.dim, arch.describe(), arch.tiled_workers, _jit.kernel_mode())
    if key in _warm or cfg.count:
        return
    _warm.add(key)
    small = replace(cfg, extents=(16,) * cfg.dim, reps=1, fixed_iters=2, arch=arch)
    _run_once(small, arch)


def _run_once(cfg, arch):
    data = initial_core(cfg)
    if cfg.variant == "baseline":
        return _run_baseline(cfg, data)
    return _run_library(cfg, arch, data)


def run_jacobi(cfg):
    """Run one benchmark configuration ``cfg.reps`` times.

    ``total_s`` is the median loop time over the repetitions; the other fields
    come from the last repetition (all repetitions compute the same result).
    """
    arch = resolve_arch(cfg)
    if cfg.variant == "baseline" and arch.levels != (LevelTag.SEQUENTIAL,):
        raise UnsupportedVariantArch(
            f"the baseline runs sequentially only, not on {arch.describe()}")
    _warmup(cfg, arch)
    times = []
    for _ in range(cfg.reps):
        it, res, elapsed, core, apps = _run_once(cfg, arch)
        times.append(elapsed)
    workers = arch.tiled_workers if LevelTag.TILED in arch.levels else arch.threads
    return BenchmarkRecord(cfg, arch.describe(), workers, it, statistics.median(times), res,
                           checksum(core), apps, times)


def weak_extents(tile, workers):
    """Global extents for ``workers`` tiles of size ``tile`` on the most square worker grid."""
    wg = factorize_workers(workers, len(tile))
    order = sorted(range(len(tile)), key=lambda a: -tile[a])
    ext = list(tile)
    for count, axis in zip(wg, order):
        ext[axis] = tile[axis] * count
    return tuple(ext)


def run_weak_scaling(tile, workers_list, base=None, iterations=100):
    """Fused Jacobi with a fixed iteration count, one tile of ``tile`` per worker."""
    base = base or BenchmarkConfig(dim=len(tile), extents=tuple(tile))
    arch_levels = base.arch if base.arch is not None else "tiled,sequential"
    if isinstance(arch_levels, Architecture):
        arch_levels = list(arch_levels.levels)
    out = []
    for w in workers_list:
        cfg = replace(base, variant="fused", dim=len(tile), extents=weak_extents(tuple(tile), w),
                      arch=make_arch(arch_levels, w), workers=w, fixed_iters=iterations)
        out.append(run_jacobi(cfg))
    return out


# --- verification ---------------------------------------------------------


@dataclass
class VerifyReport:
    records: dict
    pairs: list

    @property
    def ok(self):
        return all(p[2] for p in self.pairs)

    def lines(self):
        out = []
        for a, b, ok in self.pairs:
            ra, rb = self.records[a], self.records[b]
            out.append(f"{'PASS' if ok else 'FAIL'} {a} vs {b}: iterations {ra.iterations}/"
                       f"{rb.iterations} checksum {ra.checksum}/{rb.checksum}")
        return out


def verify(cfg):
    """Run every variant (and a sequential fused run when ``cfg.arch`` is parallel)
    and compare iteration counts and checksums pairwise against the fused run."""
    arch = resolve_arch(replace(cfg, variant="fused"))
    seq = make_arch([LevelTag.SEQUENTIAL])
    records = {
        "fused": run_jacobi(replace(cfg, variant="fused", arch=arch, reps=1)),
        "two-pass": run_jacobi(replace(cfg, variant="two-pass", arch=arch, reps=1)),
        "baseline": run_jacobi(replace(cfg, variant="baseline", arch=seq, reps=1)),
    }
    if arch.levels != seq.levels:
        records["sequential-fused"] = run_jacobi(replace(cfg, variant="fused", arch=seq, reps=1))
    ref = records["fused"]
    pairs = []
    for name, rec in records.items():
        if name == "fused":
            continue
        same = rec.checksum == ref.checksum and rec.iterations == ref.iterations
        pairs.append(("fused", name, same))
    return VerifyReport(records, pairs)
