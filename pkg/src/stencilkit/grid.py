"""Grids: storage plus halo plus core domain, and direct element access."""

import csv
import io

import numpy as np

from .accessors import Accessor, StatefulAccessor, _Bounds
from .domain import as_domain, as_halo
from .errors import ContextViolation, OutOfBounds, ShapeMismatch
from .storage import StorageSelector, role_dtype, role_of_fill


class Grid:
    """A d-dimensional regular grid.

    The storage holds ``core + minus + plus`` cells per dimension in row-major
    order. Core indices run from 0 to ``extent - 1``; halo cells are addressed
    with the same coordinates shifted past either end (``-1``, ``extent``...).
    """

    def __init__(self, domain, halo, storage):
        self.domain = domain
        self.halo = halo
        self.storage = storage

    @property
    def dim(self):
        return self.domain.dim

    @property
    def dtype(self):
        return self.storage.dtype

    @property
    def token(self):
        return self.storage.token

    @property
    def allocated(self):
        return self.domain.allocated(self.halo)

    def __getitem__(self, index):
        return read(self, _as_index(index))

    def __setitem__(self, index, value):
        write(self, _as_index(index), value)

    def core_array(self):
        """Copy of the core cells as a numpy array."""
        _check_direct(self)
        return np.array(self.storage.padded()[self.storage.core_slices()])

    def padded_array(self):
        """The padded buffer including halo cells (a stitched copy for tiled storage)."""
        _check_direct(self)
        return self.storage.padded()

    def set_core(self, values):
        _check_direct(self)
        values = np.asarray(values)
        if values.shape != self.domain.extents:
            raise ShapeMismatch(f"expected core shape {self.domain.extents}, got {values.shape}")
        padded = np.array(self.storage.padded())
        padded[self.storage.core_slices()] = values
        self.storage.load_padded(padded)

    def fill_halo(self, value):
        """Set every halo cell (the boundary condition) to ``value``."""
        _check_direct(self)
        padded = np.array(self.storage.padded())
        core = padded[self.storage.core_slices()].copy()
        padded[...] = value
        padded[self.storage.core_slices()] = core
        self.storage.load_padded(padded)

    def __repr__(self):
        return (f"Grid(extents={self.domain.extents}, halo={self.halo.minus}/{self.halo.plus}, "
                f"dtype={self.dtype}, storage={self.storage.kind})")


def _as_index(index):
    return index if isinstance(index, tuple) else (index,)


def _check_direct(grid):
    ctx = grid.storage.context
    if ctx is not None and ctx.active:
        raise ContextViolation(
            "direct data access to a grid owned by an active context; call end() first")


def make_grid(domain, halo, fill=0.0, *, dtype=None, storage=None):
    """Allocate a grid with every cell, core and halo, set to ``fill``.

    Parameters
    ----------
    domain : Domain or sequence of int
        Core extents, 1 to 3 dimensions.
    halo : HaloSpec, int, or (minus, plus)
        Halo widths; an int is used on both sides of every dimension.
    fill : scalar
        Initial value.
    dtype : optional
        Element role (``float64``, ``float32``, ``int64``, ``bool``). Defaults to
        the storage selector's role, then to the type of ``fill``.
    storage : StorageSelector, optional
        Buffer strategy, normally ``default_storage(arch, role)``.
    """
    domain = as_domain(domain)
    halo = as_halo(halo, domain.dim)
    selector = storage if storage is not None else StorageSelector()
    if dtype is not None:
        dt = role_dtype(dtype)
    elif selector.role is not None:
        dt = role_dtype(selector.role)
    else:
        dt = role_of_fill(fill)
    return Grid(domain, halo, selector.allocate(domain, halo, fill, dt))


def read(grid, index):
    """Value stored at a core or halo index."""
    _check_direct(grid)
    return grid.storage.read(tuple(index))


def write(grid, index, value):
    """Store a value at a core or halo index; halo writes set boundary conditions."""
    _check_direct(grid)
    grid.storage.write(tuple(index), value)


def same_layout(a, b):
    if a.domain != b.domain or a.halo != b.halo or a.dtype != b.dtype:
        return False
    sa, sb = a.storage, b.storage
    if sa.kind != sb.kind:
        return False
    if sa.kind == "tiled":
        return sa.tile_kind == sb.tile_kind and sa.decomp.compatible(sb.decomp)
    return True


def swap_grids(a, b):
    """Exchange the buffers of two grids in constant time.

    Identity tokens travel with the buffers. Swapping is allowed inside a
    context as long as both grids belong to the same one.
    """
    if not same_layout(a, b):
        raise ShapeMismatch(
            f"cannot swap {a!r} with {b!r}: domain, halo, role and storage must match")
    if a.storage.context is not b.storage.context:
        raise ContextViolation("cannot swap grids registered to different contexts")
    a.storage, b.storage = b.storage, a.storage


def accessor_at(grid, core, flavor="plain"):
    """Accessor bound to ``grid`` at core element ``core``.

    Offset reads are checked against the grid's halo. ``flavor='stateful'``
    returns an accessor whose ``index()`` reports ``core``.
    """
    _check_direct(grid)
    core = tuple(core)
    if len(core) != grid.dim or any(not 0 <= c < n for c, n in zip(core, grid.domain.extents)):
        raise OutOfBounds(f"core element {core} outside the core domain {grid.domain.extents}")
    if grid.storage.kind == "tiled":
        raise TypeError("accessor_at needs monolithic storage; gather() a tiled grid first")
    bounds = _Bounds(grid.dim, grid.halo.minus, grid.halo.plus)
    cls = StatefulAccessor if flavor == "stateful" else Accessor
    if flavor not in ("plain", "stateful"):
        raise ValueError(f"flavor must be 'plain' or 'stateful', got {flavor!r}")
    acc = cls(grid.storage.padded(), bounds, grid.halo.minus)
    acc._move(core)
    return acc


def dump_csv(grid, dest=None):
    """Write the core of ``grid`` as CSV; returns the text when ``dest`` is None.

    The header is ``dim,extent_0,...``; each following row is one line of cells
    along the last axis, lines in row-major order.
    """
    core = grid.core_array()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([grid.dim, *grid.domain.extents])
    for line in core.reshape(-1, core.shape[-1]):
        w.writerow([repr(x.item()) if core.dtype.kind == "f" else x.item() for x in line])
    text = buf.getvalue()
    if dest is None:
        return text
    with open(dest, "w") as fh:
        fh.write(text)
    return None
