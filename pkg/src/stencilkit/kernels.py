"""Hot loops: application of an operator over a box of core elements.

Three interchangeable paths compute identical grid contents:

* numba - compiled loop drivers calling the operator's point kernel. The
  drivers take views pre-sliced so that loop bounds start at compile-time
  constants (the operator footprint); that lets LLVM drop negative-index
  wraparound and vectorize.
* block - numpy evaluation of the operator body over a whole box (do_all,
  do_reduce), one anti-diagonal at a time (do_diamond) or one slab at a time
  (do_sweep).
* scalar - one body call per element with fully checked accessors.

Reductions always produce one partial per line along the last axis, in
row-major line order; callers concatenate partials in canonical chunk order and
combine them with :func:`tree_reduce`.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from . import _jit
from .accessors import (Accessor, BlockAccessor, StatefulAccessor, StatefulBlockAccessor,
                        _Bounds)
from .errors import AccessModeViolation


@dataclass
class Patch:
    """Buffers one worker operates on.

    ``arrays`` are padded buffers, one per grid, all sharing the core extents
    ``shape``; ``minus``/``plus`` are each grid's halo widths and ``origin`` the
    global coordinates of local core element 0.
    """

    arrays: tuple
    minus: tuple
    plus: tuple
    shape: tuple
    origin: tuple

    @property
    def dim(self):
        return len(self.shape)


ALL, REDUCE, DIAMOND, SWEEP = "all", "reduce", "diamond", "sweep"


# --- compiled drivers -----------------------------------------------------

njit = _jit.njit


@lru_cache(maxsize=None)
def _all_driver(d, m, p):
    if d == 1:
        m0, = m
        p0, = p

        @njit(nogil=True)
        def run(point, arrs):
            n0 = arrs[0].shape[0]
            for i in range(m0, n0 - p0):
                point(arrs, (i,))
    elif d == 2:
        m0, m1 = m
        p0, p1 = p

        @njit(nogil=True)
        def run(point, arrs):
            n0, n1 = arrs[0].shape
            for i in range(m0, n0 - p0):
                for j in range(m1, n1 - p1):
                    point(arrs, (i, j))
    else:
        m0, m1, m2 = m
        p0, p1, p2 = p

        @njit(nogil=True)
        def run(point, arrs):
            n0, n1, n2 = arrs[0].shape
            for i in range(m0, n0 - p0):
                for j in range(m1, n1 - p1):
                    for k in range(m2, n2 - p2):
                        point(arrs, (i, j, k))
    return run


@lru_cache(maxsize=None)
def _reduce_driver(d, m, p):
    if d == 1:
        m0, = m
        p0, = p

        @njit(nogil=True)
        def run(point, combine, identity, arrs):
            n0 = arrs[0].shape[0]
            out = np.full(1, identity)
            acc = identity
            for i in range(m0, n0 - p0):
                acc = combine(acc, point(arrs, (i,)))
            out[0] = acc
            return out
    elif d == 2:
        m0, m1 = m
        p0, p1 = p

        @njit(nogil=True)
        def run(point, combine, identity, arrs):
            n0, n1 = arrs[0].shape
            out = np.full(n0 - m0 - p0, identity)
            for i in range(m0, n0 - p0):
                acc = identity
                for j in range(m1, n1 - p1):
                    acc = combine(acc, point(arrs, (i, j)))
                out[i - m0] = acc
            return out
    else:
        m0, m1, m2 = m
        p0, p1, p2 = p

        @njit(nogil=True)
        def run(point, combine, identity, arrs):
            n0, n1, n2 = arrs[0].shape
            w1 = n1 - m1 - p1
            out = np.full((n0 - m0 - p0) * w1, identity)
            for i in range(m0, n0 - p0):
                for j in range(m1, n1 - p1):
                    acc = identity
                    for k in range(m2, n2 - p2):
                        acc = combine(acc, point(arrs, (i, j, k)))
                    out[(i - m0) * w1 + (j - m1)] = acc
            return out
    return run


@njit(nogil=True, cache=True)
def _ordered1(point, arrs, b0, e0, s0):
    for i in range(b0, e0, s0):
        point(arrs, (i,))


@njit(nogil=True, cache=True)
def _ordered2(point, arrs, b0, e0, s0, b1, e1, s1):
    for i in range(b0, e0, s0):
        for j in range(b1, e1, s1):
            point(arrs, (i, j))


@njit(nogil=True, cache=True)
def _ordered3(point, arrs, b0, e0, s0, b1, e1, s1, b2, e2, s2):
    for i in range(b0, e0, s0):
        for j in range(b1, e1, s1):
            for k in range(b2, e2, s2):
                point(arrs, (i, j, k))


_ORDERED = {1: _ordered1, 2: _ordered2, 3: _ordered3}


@njit(nogil=True, cache=True)
def _tree_jit(combine, vals):
    buf = vals.copy()
    n = buf.shape[0]
    while n > 1:
        half = n // 2
        for k in range(half):
            buf[k] = combine(buf[2 * k], buf[2 * k + 1])
        if n % 2:
            buf[half] = buf[n - 1]
            n = half + 1
        else:
            n = half
    return buf[0]


def _tree_py(combine, vals):
    buf = list(vals)
    while len(buf) > 1:
        nxt = [combine(buf[k], buf[k + 1]) for k in range(0, len(buf) - 1, 2)]
        if len(buf) % 2:
            nxt.append(buf[-1])
        buf = nxt
    return buf[0]


def tree_reduce(partials, red):
    """Combine partials with a fixed pairwise tree (adjacent pairs, level by level)."""
    chunks = [np.asarray(p) for p in partials if np.size(p)]
    if not chunks:
        return red.identity
    vals = chunks[0] if len(chunks) == 1 else np.concatenate(chunks)
    if vals.dtype == object or red.jit is None or _jit.kernel_mode() != "numba":
        out = _tree_py(red.combine, vals.tolist())
    else:
        out = _tree_jit(red.jit, vals)
    return out.item() if isinstance(out, np.generic) else out


# --- path selection -------------------------------------------------------


def _footprints(op, d):
    return [op.footprint_for(k, d) for k in range(op.arity)]


def _margins(op, patch):
    """Common loop margins for the numba path, or None when grids can't share them."""
    d = patch.dim
    fps = _footprints(op, d)
    m = tuple(max(fp[0][k] for fp in fps) for k in range(d))
    p = tuple(max(fp[1][k] for fp in fps) for k in range(d))
    for gm, gp in zip(patch.minus, patch.plus):
        if any(a < b for a, b in zip(gm, m)) or any(a < b for a, b in zip(gp, p)):
            return None
    return m, p


def select_path(op, patch, space, red=None):
    mode = _jit.kernel_mode()
    if mode == "checked":
        return "scalar"
    if (mode == "numba" and patch.dim in op.points and not op.stateful
            and (space != REDUCE or red is not None and red.jit is not None)
            and _margins(op, patch) is not None):
        return "numba"
    if op.vectorized:
        return "block"
    return "scalar"


def _order_guard(space, name):
    if space.kind == DIAMOND:
        allowed = {(-1, 0), (0, -1)}
    elif space.kind == SWEEP:
        step = -1 if space.forward else 1
        allowed = set()
        for d in (1, 2, 3):
            if space.axis < d:
                off = [0] * d
                off[space.axis] = step
                allowed.add(tuple(off))
    else:
        return None

    def guard(off):
        if tuple(off) not in allowed:
            raise AccessModeViolation(
                f"{name}: written grid read at offset {tuple(off)}, which is not ordered "
                f"before the core element in a {space.kind} iteration space")

    return guard


def _bounds(op, patch, space):
    d = patch.dim
    out = []
    for k, mode in enumerate(op.access):
        fm, fp = op.footprint_for(k, d)
        guard = _order_guard(space, f"grid {k}") if mode.writes else None
        out.append(_Bounds(d, patch.minus[k], patch.plus[k], fm, fp,
                           readable=mode.reads,
                           writable=mode.writes, order_guard=guard, name=f"grid {k}"))
    return out


# --- entry point ----------------------------------------------------------


def apply(space, op, patch, lo=None, hi=None, red=None):
    """Apply ``op`` over the box ``[lo, hi)`` of ``patch`` (local core coordinates).

    Returns the list of line partials for ``do_reduce`` and None otherwise.
    """
    d = patch.dim
    lo = tuple(lo) if lo is not None else (0,) * d
    hi = tuple(hi) if hi is not None else tuple(patch.shape)
    if any(h <= l for l, h in zip(lo, hi)):
        return [] if space.kind == REDUCE else None
    path = select_path(op, patch, space.kind, red)
    if path == "numba":
        return _apply_numba(space, op, patch, lo, hi, red)
    if path == "block":
        return _apply_block(space, op, patch, lo, hi, red)
    return _apply_scalar(space, op, patch, lo, hi, red)


def _apply_numba(space, op, patch, lo, hi, red):
    d = patch.dim
    point = op.points[d]
    if space.kind in (ALL, REDUCE):
        m, p = _margins(op, patch)
        views = tuple(
            arr[tuple(slice(l + gm - mk, h + gm + pk)
                      for l, h, gm, mk, pk in zip(lo, hi, gmin, m, p))]
            for arr, gmin in zip(patch.arrays, patch.minus))
        if space.kind == ALL:
            _all_driver(d, m, p)(point, views)
            return None
        return [_reduce_driver(d, m, p)(point, red.jit, red.identity, views)]
    # ordered spaces: row-major (with the swept axis reversed for decreasing
    # sweeps) is a linear extension of both the diamond and the sweep orders
    if len({tuple(m) for m in patch.minus}) != 1:
        return _apply_block(space, op, patch, lo, hi, red) if op.vectorized else \
            _apply_scalar(space, op, patch, lo, hi, red)
    gm = patch.minus[0]
    args = []
    for k in range(d):
        b, e, s = lo[k] + gm[k], hi[k] + gm[k], 1
        if space.kind == SWEEP and k == space.axis and not space.forward:
            b, e, s = e - 1, b - 1, -1
        args += [b, e, s]
    _ORDERED[d](point, tuple(patch.arrays), *args)
    return None


def _box_shape(lo, hi):
    return tuple(h - l for l, h in zip(lo, hi))


def _apply_block(space, op, patch, lo, hi, red):
    bounds = _bounds(op, patch, space)
    cls = StatefulBlockAccessor if op.stateful else BlockAccessor
    body = op.body

    def rect(blo, bhi):
        return [cls(arr, b, m, patch.origin, blo, bhi)
                for arr, b, m in zip(patch.arrays, bounds, patch.minus)]

    kind = space.kind
    if kind == ALL:
        body(*rect(lo, hi))
        return None
    if kind == REDUCE:
        vals = body(*rect(lo, hi))
        vals = np.broadcast_to(np.asarray(vals), _box_shape(lo, hi))
        return [red.line_partials(vals)]
    if kind == DIAMOND:
        n0, n1 = _box_shape(lo, hi)
        for t in range(n0 + n1 - 1):
            i = np.arange(max(0, t - n1 + 1), min(t, n0 - 1) + 1)
            coords = (i + lo[0], (t - i) + lo[1])
            body(*[cls(arr, b, m, patch.origin, coords=coords)
                   for arr, b, m in zip(patch.arrays, bounds, patch.minus)])
        return None
    # sweep: one slab per position along the axis
    a = space.axis
    steps = range(lo[a], hi[a]) if space.forward else range(hi[a] - 1, lo[a] - 1, -1)
    for s in steps:
        blo = list(lo)
        bhi = list(hi)
        blo[a], bhi[a] = s, s + 1
        body(*rect(blo, bhi))
    return None


def _scalar_order(space, lo, hi):
    ranges = [range(l, h) for l, h in zip(lo, hi)]
    if space.kind == SWEEP:
        a = space.axis
        if not space.forward:
            ranges[a] = range(hi[a] - 1, lo[a] - 1, -1)
        outer = ranges[a]
        rest = ranges[:a] + ranges[a + 1:]
        for s in outer:
            for r in product(*rest):
                yield r[:a] + (s,) + r[a:]
        return
    yield from product(*ranges)


def _apply_scalar(space, op, patch, lo, hi, red):
    bounds = _bounds(op, patch, space)
    cls = StatefulAccessor if op.stateful else Accessor
    accs = [cls(arr, b, m, patch.origin) for arr, b, m in zip(patch.arrays, bounds, patch.minus)]
    body = op.body
    if space.kind != REDUCE:
        for idx in _scalar_order(space, lo, hi):
            for acc in accs:
                acc._move(idx)
            body(*accs)
        return None
    combine = red.combine
    partials = []
    lead = [range(l, h) for l, h in zip(lo[:-1], hi[:-1])]
    for head in product(*lead):
        acc_val = red.identity
        for j in range(lo[-1], hi[-1]):
            idx = head + (j,)
            for acc in accs:
                acc._move(idx)
            acc_val = combine(acc_val, body(*accs))
        partials.append(acc_val)
    return [np.asarray(partials)]
