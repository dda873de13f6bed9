import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import stencilkit as sk
from conftest import ARCHS, arch_id, grids_for, random_core
from stencilkit.spaces import Space, predecessors, sweep_space

SPACES_2D = [Space("all"), Space("reduce"), Space("diamond")] + [
    sweep_space(a, d) for a in (0, 1) for d in ("increasing", "decreasing")]


def _arch(item):
    levels, w = item
    return sk.make_arch(levels, w)


def completion_logger():
    """Stateful operator recording the global index of every application, in order."""
    log, lock = [], threading.Lock()

    def body(g):
        with lock:
            log.append(tuple(int(i) for i in g.index()))
        return 1

    return sk.StencilOp(body, ("r",), 0, returns=True, stateful=True, name="logger"), log


def _run(ctx, space, grids, op, red=None):
    if space.kind == "reduce":
        return sk.do_reduce(ctx, grids, op, red or sk.reduction_sum("int64"))
    return ctx.execute(space, grids, op)


def test_do_all_single_cell_invoked_once():
    counted = sk.counting(sk.op_identity(1))
    g = sk.make_grid((1, 1), 0)
    with sk.begin("sequential", [g]) as ctx:
        sk.do_all(ctx, (g,), counted)
    assert counted.applications == 1


def test_do_all_constant_gives_zero_v():
    arch = sk.make_arch("sequential")
    v, u = grids_for(arch, (4, 4, 4), 2, fill=1.0)
    with sk.begin(arch, [v, u]) as ctx:
        sk.do_all(ctx, (v, u), sk.op_diffusion())
    assert not v.core_array().any()


def test_reduce_ones_sum_100():
    one = sk.StencilOp(lambda g: 1, ("r",), 0, returns=True)
    g = sk.make_grid((10, 10), 0)
    with sk.begin("sequential", [g]) as ctx:
        assert sk.do_reduce(ctx, (g,), one, sk.reduction_sum("int64")) == 100


@pytest.mark.parametrize("item", ARCHS, ids=arch_id)
@pytest.mark.parametrize("space", SPACES_2D, ids=str)
def test_exactly_once_and_linear_extension(item, space):
    arch = _arch(item)
    ext = (5, 6)
    (g,) = grids_for(arch, ext, 1, halo=0)
    op, log = completion_logger()
    with sk.begin(arch, [g]) as ctx:
        _run(ctx, space, (g,), op)
    assert sorted(log) == sorted(np.ndindex(*ext))
    seen = set()
    for idx in log:
        assert predecessors(space, idx, ext) <= seen
        seen.add(idx)


@pytest.mark.parametrize("item", [("sequential", None), ("threaded,sequential", 3),
                                  ("tiled,sequential", 4)], ids=arch_id)
@pytest.mark.parametrize("axis", [0, 1, 2])
@pytest.mark.parametrize("direction", ["increasing", "decreasing"])
def test_sweep_linear_extension_3d(item, axis, direction):
    arch = _arch(item)
    space = sweep_space(axis, direction)
    ext = (3, 4, 5)
    (g,) = grids_for(arch, ext, 1, halo=0)
    op, log = completion_logger()
    with sk.begin(arch, [g]) as ctx:
        _run(ctx, space, (g,), op)
    assert len(log) == 60 and len(set(log)) == 60
    seen = set()
    for idx in log:
        assert predecessors(space, idx, ext) <= seen
        seen.add(idx)


def test_predecessors_sets():
    assert predecessors(Space("all"), (1, 1), (3, 3)) == set()
    assert predecessors(Space("diamond"), (1, 1), (3, 3)) == {(0, 1), (1, 0)}
    assert predecessors(Space("diamond"), (0, 0), (3, 3)) == set()
    assert predecessors(sweep_space(1, "decreasing"), (0, 1), (3, 3)) == {(0, 2)}
    assert predecessors(sweep_space(0), (0, 2), (3, 3)) == set()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_do_all_order_free_under_permutations(seed):
    rng = np.random.default_rng(seed)
    data = rng.random((6, 7))
    v, u = sk.make_grid((6, 7), 1), sk.make_grid((6, 7), 1)
    u.set_core(data)
    with sk.begin("sequential", [v, u]) as ctx:
        sk.do_all(ctx, (v, u), sk.op_diffusion())
    ref = v.core_array()
    w = sk.make_grid((6, 7), 1)
    cells = list(np.ndindex(6, 7))
    op = sk.op_diffusion()
    for k in rng.permutation(len(cells)):
        op(sk.accessor_at(w, cells[k]), sk.accessor_at(u, cells[k]))
    assert np.array_equal(w.core_array(), ref)


def pascal_op():
    # v() = u() + v(-1, 0) + v(0, -1), reading the written grid at ordered offsets
    return sk.StencilOp(lambda v, u: v.set(u() + v(-1, 0) + v(0, -1)), ("w", "r"),
                        [((1, 1), (0, 0)), 0], vectorized=True, name="pascal")


def scan_op(axis, dim, step):
    off = [0] * dim
    off[axis] = step
    off = tuple(off)
    fp = ([0] * dim, [0] * dim)
    fp[0 if step < 0 else 1][axis] = 1
    fp = (tuple(fp[0]), tuple(fp[1]))
    return sk.StencilOp(lambda v, u: v.set(u() + v(*off)), ("w", "r"), [fp, 0],
                        vectorized=True, name="scan")


@pytest.mark.parametrize("item", ARCHS, ids=arch_id)
def test_pascal_diamond_matches_binomials(item, kernel_mode):
    arch = _arch(item)
    v, u = grids_for(arch, (20, 20), 2, role="int64")
    u[0, 0] = 1
    with sk.begin(arch, [v, u]) as ctx:
        sk.do_diamond(ctx, (v, u), pascal_op())
    got = v.core_array()
    for i in range(20):
        for j in range(20):
            assert int(got[i, j]) == math.comb(i + j, i)


def test_diamond_zeros_stay_zero():
    v, u = sk.make_grid((6, 6), 1), sk.make_grid((6, 6), 1)
    with sk.begin("sequential", [v, u]) as ctx:
        sk.do_diamond(ctx, (v, u), pascal_op())
    assert not v.core_array().any()


def test_prefix_and_suffix_sums_1d(kernel_mode):
    v, u = sk.make_grid((5,), 1), sk.make_grid((5,), 1, 1.0)
    u.fill_halo(0.0)
    with sk.begin("sequential", [v, u]) as ctx:
        sk.do_i_inc(ctx, (v, u), scan_op(0, 1, -1))
    assert v.core_array().tolist() == [1, 2, 3, 4, 5]
    w = sk.make_grid((5,), 1)
    with sk.begin("sequential", [w, u]) as ctx:
        sk.do_sweep(ctx, (w, u), scan_op(0, 1, 1), 0, "decreasing")
    assert w.core_array().tolist() == [5, 4, 3, 2, 1]


def column_scan(data, axis, forward):
    out = np.zeros_like(data)
    moved = np.moveaxis(data, axis, -1)
    res = np.moveaxis(out, axis, -1)
    for col in np.ndindex(*moved.shape[:-1]):
        order = range(moved.shape[-1]) if forward else range(moved.shape[-1] - 1, -1, -1)
        acc = 0.0
        for k in order:
            acc = moved[col][k] + acc
            res[col + (k,)] = acc
    return out


ALIASES = {(0, True): sk.do_i_inc, (0, False): sk.do_i_dec, (1, True): sk.do_j_inc,
           (1, False): sk.do_j_dec, (2, True): sk.do_k_inc, (2, False): sk.do_k_dec}


@pytest.mark.parametrize("axis", [0, 1, 2])
@pytest.mark.parametrize("forward", [True, False])
def test_sweep_3d_matches_column_scan(axis, forward, kernel_mode):
    data = random_core((8, 8, 8), 100 + axis)
    v, u = sk.make_grid((8, 8, 8), 1), sk.make_grid((8, 8, 8), 1)
    u.set_core(data)
    with sk.begin("sequential", [v, u]) as ctx:
        ALIASES[(axis, forward)](ctx, (v, u), scan_op(axis, 3, -1 if forward else 1))
    assert np.array_equal(v.core_array(), column_scan(data, axis, forward))


def test_diamond_needs_2d():
    v, u = sk.make_grid((3, 3, 3), 1), sk.make_grid((3, 3, 3), 1)
    with sk.begin("sequential", [v, u]) as ctx:
        with pytest.raises(sk.UnsupportedDimension):
            sk.do_diamond(ctx, (v, u), sk.op_diffusion())


def test_sweep_axis_out_of_range():
    v, u = sk.make_grid((3, 3), 1), sk.make_grid((3, 3), 1)
    with sk.begin("sequential", [v, u]) as ctx:
        with pytest.raises(sk.InvalidAxis):
            sk.do_k_inc(ctx, (v, u), sk.op_identity())
        with pytest.raises(sk.InvalidAxis):
            sk.do_sweep(ctx, (v, u), sk.op_identity(), -1)


def test_arity_mismatch():
    v, u = sk.make_grid((3, 3), 1), sk.make_grid((3, 3), 1)
    with sk.begin("sequential", [v, u]) as ctx:
        with pytest.raises(sk.ArityMismatch):
            sk.do_all(ctx, (v,), sk.op_diffusion())


def test_halo_narrower_than_footprint():
    v, u = sk.make_grid((3, 3), 0), sk.make_grid((3, 3), 0)
    with sk.begin("sequential", [v, u]) as ctx:
        with pytest.raises(sk.HaloViolation):
            sk.do_all(ctx, (v, u), sk.op_diffusion())


def test_unregistered_grid_rejected():
    v, u = sk.make_grid((3, 3), 1), sk.make_grid((3, 3), 1)
    other = sk.make_grid((3, 3), 1)
    with sk.begin("sequential", [v, u]) as ctx:
        with pytest.raises(sk.ContextViolation):
            sk.do_all(ctx, (v, other), sk.op_diffusion())
        other[0, 0] = 1.0  # unregistered grids stay directly accessible


def test_mismatched_domains_rejected():
    v, u = sk.make_grid((3, 3), 1), sk.make_grid((3, 4), 1)
    with sk.begin("sequential", [v, u]) as ctx:
        with pytest.raises(sk.ShapeMismatch):
            sk.do_all(ctx, (v, u), sk.op_diffusion())


def test_reduce_needs_returning_op():
    v, u = sk.make_grid((3, 3), 1), sk.make_grid((3, 3), 1)
    with sk.begin("sequential", [v, u]) as ctx:
        with pytest.raises(TypeError):
            sk.do_reduce(ctx, (v, u), sk.op_diffusion(), sk.reduction_and())


@pytest.mark.parametrize("mode", ["checked", "numpy"])
def test_diamond_rejects_unordered_read_of_written_grid(mode):
    sk.set_kernel_mode(mode)
    bad = sk.StencilOp(lambda v, u: v.set(u() + v(1, 0)), ("w", "r"), [1, 0], vectorized=True)
    v, u = sk.make_grid((4, 4), 1), sk.make_grid((4, 4), 1)
    with sk.begin("sequential", [v, u]) as ctx:
        with pytest.raises(sk.AccessModeViolation):
            sk.do_diamond(ctx, (v, u), bad)


def test_space_descriptions():
    assert str(Space("all")) == "all"
    assert str(sweep_space(2, "decreasing")) == "sweep(axis=2, decreasing)"
    with pytest.raises(ValueError):
        sweep_space(0, "sideways")
