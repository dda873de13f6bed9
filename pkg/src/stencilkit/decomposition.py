"""Worker-grid factorization and balanced block decomposition of a core domain."""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .domain import HaloSpec, as_domain
from .errors import InvalidWorkerCount, OverDecomposed, UnsupportedDimension


def _descending_factorizations(n, parts, cap=None):
    """Yield non-increasing ``parts``-tuples of positive ints with product ``n``."""
    cap = n if cap is None else cap
    if parts == 1:
        if n <= cap:
            yield (n,)
        return
    for first in range(min(n, cap), 0, -1):
        if n % first == 0:
            for rest in _descending_factorizations(n // first, parts - 1, first):
                yield (first,) + rest


def aspect_ratio(shape):
    return Fraction(max(shape), min(shape))


def factorize_workers(P, d):
    """Worker grid of ``P`` workers in ``d`` dimensions with aspect ratio closest to 1.

    Parameters
    ----------
    P : int
        Total number of workers, at least 1.
    d : int
        Dimension of the worker grid.

    Returns
    -------
    tuple of int
        Counts per dimension, sorted descending. Ties in aspect ratio go to the
        lexicographically largest tuple, so ``factorize_workers(12, 2) == (4, 3)``.
    """
    if not isinstance(P, int) or P < 1:
        raise InvalidWorkerCount(f"worker count must be a positive integer, got {P!r}")
    if d not in (1, 2, 3):
        raise UnsupportedDimension(f"dimension must be 1, 2 or 3, got {d}")
    best = None
    for cand in _descending_factorizations(P, d):
        key = (aspect_ratio(cand), tuple(-c for c in cand))
        if best is None or key < best[0]:
            best = (key, cand)
    return best[1]


def split_extent(n, p):
    """Balanced split of ``n`` cells over ``p`` parts; the first ``n % p`` parts get one more."""
    base, extra = divmod(n, p)
    sizes = [base + 1 if k < extra else base for k in range(p)]
    starts = [0]
    for s in sizes[:-1]:
        starts.append(starts[-1] + s)
    return starts, sizes


@dataclass(frozen=True)
class Tile:
    id: int
    coords: tuple
    origin: tuple
    extents: tuple
    # (axis, side) -> neighbor tile id or None at the physical boundary; side is -1 or +1
    neighbors: dict = field(compare=False, hash=False)

    @property
    def stop(self):
        return tuple(o + e for o, e in zip(self.origin, self.extents))

    def owns(self, index):
        return all(o <= i < o + e for i, o, e in zip(index, self.origin, self.extents))


@dataclass(frozen=True)
class TileDecomposition:
    domain: object
    workers: tuple
    halo: HaloSpec
    tiles: tuple

    @property
    def size(self):
        return len(self.tiles)

    def tile_at(self, coords):
        return self.tiles[_ravel(coords, self.workers)]

    def owner(self, index):
        """Tile owning a core index."""
        coords = []
        for axis, i in enumerate(index):
            starts, sizes = split_extent(self.domain.extents[axis], self.workers[axis])
            for k, (s, n) in enumerate(zip(starts, sizes)):
                if s <= i < s + n:
                    coords.append(k)
                    break
            else:
                return None
        return self.tile_at(tuple(coords))

    def interior_faces(self):
        return sum(1 for t in self.tiles for (axis, side), nb in t.neighbors.items()
                   if side > 0 and nb is not None)

    def compatible(self, other):
        return (self.domain == other.domain and self.workers == other.workers)


def _ravel(coords, shape):
    idx = 0
    for c, n in zip(coords, shape):
        idx = idx * n + c
    return idx


def decompose(domain, workers, halo):
    """Balanced block decomposition of ``domain`` over a worker grid.

    Every tile carries the grid's halo as its ghost frame. Neighbors are found by
    worker-grid adjacency without wraparound.
    """
    domain = as_domain(domain)
    workers = tuple(int(w) for w in workers)
    if len(workers) != domain.dim:
        raise InvalidWorkerCount(
            f"worker grid {workers} does not match a {domain.dim}-dimensional domain")
    if any(w < 1 for w in workers):
        raise InvalidWorkerCount(f"worker counts must be positive, got {workers}")
    for axis, (n, p) in enumerate(zip(domain.extents, workers)):
        if p > n:
            raise OverDecomposed(f"{p} workers along axis {axis} but only {n} cells")
    splits = [split_extent(n, p) for n, p in zip(domain.extents, workers)]
    for axis, (p, (_, sizes)) in enumerate(zip(workers, splits)):
        depth = max(halo.minus[axis], halo.plus[axis])
        if p > 1 and min(sizes) < depth:
            raise OverDecomposed(
                f"tiles of {min(sizes)} cells along axis {axis} are thinner than the halo ({depth})")
    tiles = []
    for coords in product(*(range(p) for p in workers)):
        origin = tuple(splits[a][0][c] for a, c in enumerate(coords))
        extents = tuple(splits[a][1][c] for a, c in enumerate(coords))
        neighbors = {}
        for axis in range(domain.dim):
            for side in (-1, 1):
                c = coords[axis] + side
                if 0 <= c < workers[axis]:
                    nb = list(coords)
                    nb[axis] = c
                    neighbors[(axis, side)] = _ravel(nb, workers)
                else:
                    neighbors[(axis, side)] = None
        tiles.append(Tile(len(tiles), coords, origin, extents, neighbors))
    return TileDecomposition(domain, workers, halo, tuple(tiles))
