"""Iteration spaces: how an operator is applied over the core domain.

``do_all`` and ``do_reduce`` impose no order. ``do_diamond`` processes
``(i-1, j)`` and ``(i, j-1)`` before ``(i, j)`` (2D only). ``do_sweep`` orders
elements strictly along one axis, increasing or decreasing, and leaves the other
axes unordered.

The sequential reference order is row-major ascending for all, reduce and
diamond, and axis-major for sweeps (the swept axis varies slowest).
"""

from dataclasses import dataclass

from .errors import InvalidAxis, UnsupportedDimension
from .kernels import ALL, DIAMOND, REDUCE, SWEEP

INCREASING = "increasing"
DECREASING = "decreasing"


@dataclass(frozen=True)
class Space:
    """An iteration-space kind; ``axis``/``forward`` matter for sweeps only."""

    kind: str
    axis: int = 0
    forward: bool = True

    @property
    def direction(self):
        return INCREASING if self.forward else DECREASING

    def check(self, dim):
        if self.kind == DIAMOND and dim != 2:
            raise UnsupportedDimension(f"do_diamond is available for 2D grids only, got {dim}D")
        if self.kind == SWEEP and not 0 <= self.axis < dim:
            raise InvalidAxis(f"sweep axis {self.axis} out of range for a {dim}D grid")

    def __str__(self):
        if self.kind == SWEEP:
            return f"sweep(axis={self.axis}, {self.direction})"
        return self.kind


def sweep_space(axis, direction=INCREASING):
    if isinstance(direction, str):
        if direction not in (INCREASING, DECREASING, "inc", "dec"):
            raise ValueError(f"direction must be 'increasing' or 'decreasing', got {direction!r}")
        forward = direction in (INCREASING, "inc")
    else:
        forward = bool(direction)
    if not isinstance(axis, (int,)) or axis < 0:
        raise InvalidAxis(f"invalid sweep axis {axis!r}")
    return Space(SWEEP, int(axis), forward)


def predecessors(space, index, extents):
    """Core elements that must be processed before ``index`` under ``space``."""
    index = tuple(index)
    if space.kind in (ALL, REDUCE):
        return set()
    if space.kind == DIAMOND:
        cand = [(index[0] - 1, index[1]), (index[0], index[1] - 1)]
    else:
        step = -1 if space.forward else 1
        c = list(index)
        c[space.axis] += step
        cand = [tuple(c)]
    return {c for c in cand if all(0 <= i < n for i, n in zip(c, extents))}


def do_all(ctx, grids, op):
    """Apply ``op`` exactly once per core element, in no guaranteed order."""
    ctx.execute(Space(ALL), grids, op)


def do_reduce(ctx, grids, op, red):
    """Apply ``op`` everywhere and reduce its return values with ``red``.

    Writes made by ``op`` take effect as with :func:`do_all`.
    """
    return ctx.execute(Space(REDUCE), grids, op, red)


def do_diamond(ctx, grids, op):
    """2D wavefront: ``(i-1, j)`` and ``(i, j-1)`` are processed before ``(i, j)``."""
    ctx.execute(Space(DIAMOND), grids, op)


def do_sweep(ctx, grids, op, axis, direction=INCREASING):
    """Strictly ordered along ``axis``; unordered across the others."""
    ctx.execute(sweep_space(axis, direction), grids, op)


def do_i_inc(ctx, grids, op):
    do_sweep(ctx, grids, op, 0, INCREASING)


def do_i_dec(ctx, grids, op):
    do_sweep(ctx, grids, op, 0, DECREASING)


def do_j_inc(ctx, grids, op):
    do_sweep(ctx, grids, op, 1, INCREASING)


def do_j_dec(ctx, grids, op):
    do_sweep(ctx, grids, op, 1, DECREASING)


def do_k_inc(ctx, grids, op):
    do_sweep(ctx, grids, op, 2, INCREASING)


def do_k_dec(ctx, grids, op):
    do_sweep(ctx, grids, op, 2, DECREASING)
