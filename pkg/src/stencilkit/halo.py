"""Ghost-cell exchange between tiles and gathering of tiled grids.

Tiles behave like isolated workers: the only data moving between them are
value-copy messages carrying a face slab, posted to the receiving tile's inbox
and unpacked into its ghost frame. Axes are exchanged one after the other and
each slab spans the full allocated range of the other axes, so ghost cells at
edges and corners are forwarded through the intermediate tile.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DecompositionMismatch
from .operators import READ_WRITE, AccessMode
from .storage import MonolithicStorage, HostBlock


@dataclass
class Message:
    source: int
    dest: int
    axis: int
    side: int  # side of the receiving tile the ghost slab belongs to
    payload: np.ndarray


class Transport:
    """Per-tile inboxes and a message counter."""

    def __init__(self, ntiles):
        self.inboxes = [deque() for _ in range(ntiles)]
        self.sent = 0

    def post(self, msg):
        self.inboxes[msg.dest].append(msg)
        self.sent += 1

    def drain(self, tile_id):
        box = self.inboxes[tile_id]
        while box:
            yield box.popleft()


def tile_arrays(storage):
    """Buffers a computation would touch: device buffers while staged, host otherwise."""
    ctx = storage.context
    if ctx is not None and ctx.active:
        return [b.compute_array() for b in storage.blocks]
    return [b.host for b in storage.blocks]


def _check(decomp, grid):
    storage = grid.storage
    if storage.kind != "tiled":
        raise DecompositionMismatch("grid does not have tiled storage")
    if not storage.decomp.compatible(decomp) or storage.decomp.halo != grid.halo:
        raise DecompositionMismatch("grid is tiled with a different decomposition")
    return storage


def exchange_halos(decomp, grid, mode=READ_WRITE, transport=None, arrays=None):
    """Refresh every interior ghost cell of a tiled grid from its owning tile.

    Physical-boundary ghosts keep their boundary values. Write-only grids are
    skipped. Returns the number of messages sent.
    """
    storage = _check(decomp, grid)
    if not AccessMode.parse(mode).reads:
        return 0
    arrays = tile_arrays(storage) if arrays is None else arrays
    transport = transport or Transport(decomp.size)
    before = transport.sent
    minus, plus = grid.halo.minus, grid.halo.plus
    for axis in range(grid.dim):
        for tile in decomp.tiles:
            src = arrays[tile.id]
            m, e = minus[axis], tile.extents[axis]
            for side in (-1, 1):
                nb = tile.neighbors[(axis, side)]
                if nb is None:
                    continue
                # receiver sits on our `side`; it needs ghosts on its opposite side
                depth = minus[axis] if side > 0 else plus[axis]
                if depth == 0:
                    continue
                lo = m + e - depth if side > 0 else m
                sl = [slice(None)] * grid.dim
                sl[axis] = slice(lo, lo + depth)
                transport.post(Message(tile.id, nb, axis, -side, src[tuple(sl)].copy()))
        for tile in decomp.tiles:
            dst = arrays[tile.id]
            for msg in transport.drain(tile.id):
                m, e = minus[msg.axis], tile.extents[msg.axis]
                depth = msg.payload.shape[msg.axis]
                lo = m - depth if msg.side < 0 else m + e
                sl = [slice(None)] * grid.dim
                sl[msg.axis] = slice(lo, lo + depth)
                dst[tuple(sl)] = msg.payload
    return transport.sent - before


def gather(decomp, grid):
    """Monolithic host grid holding the stitched tile cores and boundary halo."""
    from .grid import Grid, _check_direct

    storage = _check(decomp, grid)
    _check_direct(grid)
    out = MonolithicStorage(HostBlock, storage.dtype, storage.extents, storage.minus,
                            storage.plus, 0)
    out.load_padded(storage.padded())
    return Grid(grid.domain, grid.halo, out)
