"""Buffer strategies behind a grid.

* :class:`HostBlock` - one padded numpy buffer (sequential and threaded levels).
* :class:`DeviceBlock` - host buffer plus a distinct staging buffer standing in
  for accelerator memory, with explicit copies and transfer counters.
* :class:`TiledStorage` - one block per tile of a :class:`TileDecomposition`,
  each with its own ghost frame.

Indices handed to ``read``/``write`` are core coordinates; halo cells sit at
negative indices or at ``extent + k``.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .decomposition import decompose, factorize_workers
from .errors import ContextViolation, OutOfBounds

_tokens = itertools.count(1)

ROLES = {
    "float64": np.float64,
    "float32": np.float32,
    "int64": np.int64,
    "bool": np.bool_,
}


def role_dtype(role):
    if role is None:
        return np.dtype(np.float64)
    if isinstance(role, str) and role in ROLES:
        return np.dtype(ROLES[role])
    dt = np.dtype(role)
    if dt == np.dtype(int):
        dt = np.dtype(np.int64)
    if dt.type not in ROLES.values():
        raise TypeError(f"unsupported element role {dt}; use one of {sorted(ROLES)}")
    return dt


def role_of_fill(fill):
    if isinstance(fill, (bool, np.bool_)):
        return np.dtype(np.bool_)
    if isinstance(fill, (int, np.integer)):
        return np.dtype(np.int64)
    if isinstance(fill, np.floating):
        return role_dtype(fill.dtype)
    return np.dtype(np.float64)


def _padded_index(index, extents, minus, plus):
    if len(index) != len(extents):
        raise OutOfBounds(f"index {tuple(index)} has wrong length for a {len(extents)}-d grid")
    out = []
    for i, n, m, p in zip(index, extents, minus, plus):
        i = int(i)
        if not -m <= i < n + p:
            raise OutOfBounds(f"index {tuple(index)} outside allocated range")
        out.append(i + m)
    return tuple(out)


class HostBlock:
    kind = "host"

    def __init__(self, array):
        self.host = array

    def compute_array(self):
        return self.host

    def stage(self, mode, log):
        pass

    def unstage(self, mode, log, core):
        pass


class DeviceBlock:
    """Host buffer paired with a simulated device buffer.

    The device buffer is never aliased with the host buffer; data moves only
    through :meth:`stage` and :meth:`unstage`, each counted in the transfer log.
    """

    kind = "device"

    def __init__(self, array):
        self.host = array
        self.device = None
        self.resident = False

    def compute_array(self):
        if not self.resident:
            raise ContextViolation("grid is not staged on the device; register it with begin()")
        return self.device

    def stage(self, mode, log):
        if self.device is None:
            self.device = np.empty_like(self.host)
        if mode.reads:
            np.copyto(self.device, self.host)
            log.h2d += 1
        self.resident = True

    def unstage(self, mode, log, core):
        if mode.writes:
            if mode.reads:
                np.copyto(self.host, self.device)
            else:
                # halo of a write-only grid never went up; bring back the core only
                self.host[core] = self.device[core]
            log.d2h += 1
        self.resident = False


@dataclass
class TransferLog:
    h2d: int = 0
    d2h: int = 0

    @property
    def total(self):
        return self.h2d + self.d2h


class _Storage:
    """Common bookkeeping: identity token and context registration."""

    def __init__(self, dtype, extents, minus, plus):
        self.token = next(_tokens)
        self.dtype = dtype
        self.extents = extents
        self.minus = minus
        self.plus = plus
        self.context = None

    @property
    def shape(self):
        return tuple(n + m + p for n, m, p in zip(self.extents, self.minus, self.plus))

    def core_slices(self):
        return tuple(slice(m, m + n) for m, n in zip(self.minus, self.extents))


class MonolithicStorage(_Storage):
    def __init__(self, block_cls, dtype, extents, minus, plus, fill):
        super().__init__(dtype, extents, minus, plus)
        self.block = block_cls(np.full(self.shape, fill, dtype=dtype))
        self.kind = block_cls.kind

    @property
    def blocks(self):
        return [self.block]

    def read(self, index):
        return self.block.host[_padded_index(index, self.extents, self.minus, self.plus)]

    def write(self, index, value):
        self.block.host[_padded_index(index, self.extents, self.minus, self.plus)] = value

    def padded(self):
        return self.block.host

    def load_padded(self, array):
        np.copyto(self.block.host, array)


class TiledStorage(_Storage):
    """Per-tile padded blocks; no buffer is shared between tiles."""

    kind = "tiled"

    def __init__(self, block_cls, dtype, extents, minus, plus, fill, decomp):
        super().__init__(dtype, extents, minus, plus)
        self.decomp = decomp
        self.tile_kind = block_cls.kind
        self.blocks = []
        for tile in decomp.tiles:
            shape = tuple(e + m + p for e, m, p in zip(tile.extents, minus, plus))
            self.blocks.append(block_cls(np.full(shape, fill, dtype=dtype)))

    def _tile_window(self, tile):
        """Slices of the global padded array covered by a tile's padded block."""
        return tuple(slice(o, o + e + m + p) for o, e, m, p
                     in zip(tile.origin, tile.extents, self.minus, self.plus))

    def read(self, index):
        _padded_index(index, self.extents, self.minus, self.plus)
        tile = self.decomp.owner(index)
        if tile is None:
            tile = next(t for t in self.decomp.tiles if self._contains(t, index))
        local = tuple(i - o + m for i, o, m in zip(index, tile.origin, self.minus))
        return self.blocks[tile.id].host[local]

    def _contains(self, tile, index):
        return all(o - m <= i < o + e + p for i, o, e, m, p
                   in zip(index, tile.origin, tile.extents, self.minus, self.plus))

    def write(self, index, value):
        _padded_index(index, self.extents, self.minus, self.plus)
        for tile in self.decomp.tiles:
            if self._contains(tile, index):
                local = tuple(i - o + m for i, o, m in zip(index, tile.origin, self.minus))
                self.blocks[tile.id].host[local] = value

    def padded(self):
        """Stitched global padded array (a copy)."""
        out = np.empty(self.shape, dtype=self.dtype)
        for tile in self.decomp.tiles:
            out[self._tile_window(tile)] = self.blocks[tile.id].host
        # tile cores win over neighbor ghost copies
        for tile in self.decomp.tiles:
            glob = tuple(slice(o + m, o + m + e) for o, e, m
                         in zip(tile.origin, tile.extents, self.minus))
            loc = tuple(slice(m, m + e) for e, m in zip(tile.extents, self.minus))
            out[glob] = self.blocks[tile.id].host[loc]
        return out

    def load_padded(self, array):
        for tile in self.decomp.tiles:
            np.copyto(self.blocks[tile.id].host, array[self._tile_window(tile)])


@dataclass(frozen=True)
class StorageSelector:
    """Buffer strategy chosen for an architecture; the result of ``default_storage``.

    ``kind`` is ``host``, ``device`` or ``tiled``; tiled selectors also name the
    per-tile block kind and the number of tiles.
    """

    kind: str = "host"
    role: object = None
    workers: int = 1
    tile_kind: str = "host"

    def allocate(self, domain, halo, fill, dtype):
        blocks = {"host": HostBlock, "device": DeviceBlock}
        if self.kind == "tiled":
            wg = factorize_workers(self.workers, domain.dim)
            wg = _fit_workers(wg, domain.extents)
            decomp = decompose(domain, wg, halo)
            return TiledStorage(blocks[self.tile_kind], dtype, domain.extents,
                                halo.minus, halo.plus, fill, decomp)
        return MonolithicStorage(blocks[self.kind], dtype, domain.extents,
                                 halo.minus, halo.plus, fill)


def _fit_workers(wg, extents):
    """Orient a descending worker grid so larger counts land on longer axes."""
    order = sorted(range(len(extents)), key=lambda a: -extents[a])
    out = [1] * len(extents)
    for count, axis in zip(wg, order):
        out[axis] = count
    return tuple(out)
