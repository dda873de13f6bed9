"""Execution engines behind each architecture level.

An engine receives an iteration space, an operator and the grids, and returns
the reduction partials (or None). Leaf engines work on a single
:class:`~stencilkit.kernels.Patch`; the tiled engine splits the grids into
per-tile patches, exchanges ghosts, and hands each tile to its own inner engine.
"""

from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor

from . import kernels
from .arch import LevelTag
from .decomposition import split_extent
from .errors import DecompositionMismatch
from .halo import Transport, exchange_halos, tile_arrays
from .kernels import ALL, DIAMOND, REDUCE, SWEEP, Patch
from .operators import READ_WRITE


class SequentialEngine:
    name = "sequential"

    def run(self, space, patch, op, red):
        return kernels.apply(space, op, patch, red=red)

    def close(self):
        pass


class DeviceEngine(SequentialEngine):
    """Simulated accelerator: kernels run on the staged device buffers only."""

    name = "device"

    def __init__(self):
        self.launches = 0

    def run(self, space, patch, op, red):
        self.launches += 1
        return kernels.apply(space, op, patch, red=red)


def _chunks(lo, hi, parts):
    starts, sizes = split_extent(hi - lo, min(parts, hi - lo))
    return [(lo + s, lo + s + n) for s, n in zip(starts, sizes)]


class ThreadedEngine:
    """Worker threads over disjoint parts of one patch.

    ``do_all``/``do_reduce`` split axis 0 into contiguous chunks; line partials
    come back in chunk order, so reductions match the sequential line order.
    ``do_diamond`` runs a block wavefront, ``do_sweep`` splits a non-swept axis.
    """

    name = "threaded"

    def __init__(self, workers):
        self.workers = workers
        self._pool = None

    @property
    def pool(self):
        if self._pool is None:
            self._pool = ThreadPoolExecutor(self.workers, thread_name_prefix="stencil-worker")
        return self._pool

    def close(self):
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def _map(self, space, op, patch, boxes, red):
        if len(boxes) == 1:
            lo, hi = boxes[0]
            return [kernels.apply(space, op, patch, lo, hi, red)]
        futures = [self.pool.submit(kernels.apply, space, op, patch, lo, hi, red)
                   for lo, hi in boxes]
        return [f.result() for f in futures]

    def run(self, space, patch, op, red):
        shape = patch.shape
        d = len(shape)
        full_lo = (0,) * d
        if self.workers == 1:
            return kernels.apply(space, op, patch, red=red)
        if space.kind in (ALL, REDUCE):
            boxes = [((a,) + full_lo[1:], (b,) + shape[1:])
                     for a, b in _chunks(0, shape[0], self.workers)]
            results = self._map(space, op, patch, boxes, red)
            if space.kind == ALL:
                return None
            return [p for r in results for p in r]
        if space.kind == DIAMOND:
            rows = _chunks(0, shape[0], self.workers)
            cols = _chunks(0, shape[1], self.workers)
            for t in range(len(rows) + len(cols) - 1):
                boxes = [((rows[bi][0], cols[t - bi][0]), (rows[bi][1], cols[t - bi][1]))
                         for bi in range(len(rows)) if 0 <= t - bi < len(cols)]
                self._map(space, op, patch, boxes, red)
            return None
        # sweep: lines along the swept axis are independent of each other
        others = [k for k in range(d) if k != space.axis and shape[k] > 1]
        if not others:
            return kernels.apply(space, op, patch, red=red)
        k = others[0]
        boxes = []
        for a, b in _chunks(0, shape[k], self.workers):
            lo, hi = list(full_lo), list(shape)
            lo[k], hi[k] = a, b
            boxes.append((tuple(lo), tuple(hi)))
        self._map(space, op, patch, boxes, red)
        return None


def build_leaf(levels, arch):
    """Engine for a hierarchy without a tiled level."""
    if not levels or levels[0] is LevelTag.SEQUENTIAL:
        return SequentialEngine()
    if levels[0] is LevelTag.THREADED:
        return ThreadedEngine(arch.threads)
    if levels[0] is LevelTag.DEVICE:
        return DeviceEngine()
    raise ValueError(f"no leaf engine for {levels[0]}")


def monolithic_patch(grids):
    arrays = tuple(g.storage.block.compute_array() for g in grids)
    return Patch(arrays, tuple(g.halo.minus for g in grids), tuple(g.halo.plus for g in grids),
                 grids[0].domain.extents, (0,) * grids[0].dim)


class LeafExecutor:
    """Top of a hierarchy whose outermost level works on whole grids."""

    def __init__(self, engine):
        self.engine = engine

    def execute(self, space, grids, op, red):
        out = self.engine.run(space, monolithic_patch(grids), op, red)
        return out

    def close(self):
        self.engine.close()


class TiledEngine:
    """Tiled level: per-tile workers with halo exchange before computing.

    Each tile has its own inner engine and only ever touches its own buffers;
    the controller exchanges ghosts (a barrier) before every wave of tiles.
    """

    name = "tiled"

    def __init__(self, workers, inner_levels, arch):
        self.workers = workers
        self._inner_levels = inner_levels
        self._arch = arch
        self.inner = {}
        self.transport = None
        self._pool = None

    def _inner(self, tile_id):
        if tile_id not in self.inner:
            self.inner[tile_id] = build_leaf(self._inner_levels, self._arch)
        return self.inner[tile_id]

    @property
    def messages(self):
        return self.transport.sent if self.transport else 0

    def close(self):
        for eng in self.inner.values():
            eng.close()
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def _waves(self, space, decomp):
        if space.kind in (ALL, REDUCE):
            return [list(decomp.tiles)]
        groups = defaultdict(list)
        if space.kind == DIAMOND:
            for t in decomp.tiles:
                groups[sum(t.coords)].append(t)
            keys = sorted(groups)
        else:
            for t in decomp.tiles:
                groups[t.coords[space.axis]].append(t)
            keys = sorted(groups, reverse=not space.forward)
        return [groups[k] for k in keys]

    def execute(self, space, grids, op, red):
        storages = [g.storage for g in grids]
        decomp = storages[0].decomp
        for s in storages[1:]:
            if not s.decomp.compatible(decomp):
                raise DecompositionMismatch("grids of one call must share a decomposition")
        if self.transport is None:
            self.transport = Transport(decomp.size)
        arrays = [tile_arrays(s) for s in storages]
        d = grids[0].dim
        ordered = space.kind in (DIAMOND, SWEEP)
        exchange = []
        for k, g in enumerate(grids):
            fm, fp = op.footprint_for(k, d)
            # ordered spaces read the written grid at earlier-processed offsets
            if (op.access[k].reads or ordered) and (any(fm) or any(fp)):
                exchange.append(k)

        def run_tile(tile):
            patch = Patch(tuple(a[tile.id] for a in arrays),
                          tuple(g.halo.minus for g in grids), tuple(g.halo.plus for g in grids),
                          tile.extents, tile.origin)
            return self._inner(tile.id).run(space, patch, op, red)

        results = {}
        for wave in self._waves(space, decomp):
            for k in exchange:
                exchange_halos(decomp, grids[k], READ_WRITE, self.transport, arrays[k])
            if len(wave) == 1:
                results[wave[0].id] = run_tile(wave[0])
                continue
            if self._pool is None:
                self._pool = ThreadPoolExecutor(max(1, self.workers),
                                                thread_name_prefix="stencil-tile")
            futures = {t.id: self._pool.submit(run_tile, t) for t in wave}
            for tid, f in futures.items():
                results[tid] = f.result()
        if space.kind != REDUCE:
            return None
        return [p for tid in sorted(results) for p in results[tid]]


def build_executor(arch):
    levels = arch.levels
    if levels[0] is LevelTag.TILED:
        return TiledEngine(arch.tiled_workers, levels[1:], arch)
    return LeafExecutor(build_leaf(levels, arch))
