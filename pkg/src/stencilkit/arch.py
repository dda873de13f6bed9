"""Architecture hierarchies: which execution model runs at each level."""

import configparser
import enum
import os
from dataclasses import dataclass

from .errors import InvalidHierarchy, InvalidWorkerCount


class LevelTag(str, enum.Enum):
    TILED = "tiled"
    THREADED = "threaded"
    DEVICE = "device"
    SEQUENTIAL = "sequential"


# message passing, shared-memory threads, accelerator
_ALIASES = {"mpi": "tiled", "openmp": "threaded", "omp": "threaded", "cuda": "device",
            "gpu": "device", "seq": "sequential"}

EDGES = {
    LevelTag.TILED: {LevelTag.THREADED, LevelTag.DEVICE, LevelTag.SEQUENTIAL},
    LevelTag.THREADED: {LevelTag.SEQUENTIAL},
    LevelTag.DEVICE: set(),
    LevelTag.SEQUENTIAL: set(),
}


def parse_tag(tag):
    if isinstance(tag, LevelTag):
        return tag
    name = str(tag).strip().lower()
    name = _ALIASES.get(name, name)
    try:
        return LevelTag(name)
    except ValueError:
        raise InvalidHierarchy(f"unknown level {tag!r}") from None


def hardware_workers():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def env_workers():
    raw = os.environ.get("GSCL_WORKERS")
    if raw is None or not raw.strip():
        return None
    try:
        n = int(raw)
    except ValueError:
        raise InvalidWorkerCount(f"GSCL_WORKERS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InvalidWorkerCount(f"GSCL_WORKERS must be a positive integer, got {raw!r}")
    return n


@dataclass(frozen=True)
class Architecture:
    """Validated hierarchy of execution levels, outermost first.

    ``tiled_workers`` is the number of tiles at a tiled level and
    ``threads`` the worker count of a threaded level.
    """

    levels: tuple
    tiled_workers: int = 1
    threads: int = 1

    def __contains__(self, tag):
        return parse_tag(tag) in self.levels

    @property
    def outermost(self):
        return self.levels[0]

    def describe(self):
        return "+".join(t.value for t in self.levels)

    def report(self):
        """The resolved hierarchy, one tag per line, outermost first."""
        return "\n".join(t.value for t in self.levels)

    def __str__(self):
        return self.describe()


def _validate(levels):
    if not levels:
        raise InvalidHierarchy("an architecture needs at least one level")
    for upper, lower in zip(levels, levels[1:]):
        if lower not in EDGES[upper]:
            raise InvalidHierarchy(f"{lower.value} cannot run under {upper.value}")


def make_arch(levels, workers=None):
    """Build and validate an architecture.

    Parameters
    ----------
    levels : sequence of str or LevelTag, or a comma separated string
        Outermost level first, e.g. ``["tiled", "threaded", "sequential"]``.
    workers : int or dict, optional
        Worker count for the tiled and threaded levels (a dict may set them
        separately, keyed by tag). Defaults to ``GSCL_WORKERS``, then to the
        hardware concurrency.
    """
    if isinstance(levels, str):
        levels = [t for t in levels.split(",") if t.strip()]
    tags = tuple(parse_tag(t) for t in levels)
    _validate(tags)
    default = env_workers() or hardware_workers()
    if isinstance(workers, dict):
        per = {parse_tag(k): int(v) for k, v in workers.items()}
        tiled = per.get(LevelTag.TILED, default)
        threads = per.get(LevelTag.THREADED, default)
    else:
        tiled = threads = int(workers) if workers is not None else default
    if tiled < 1 or threads < 1:
        raise InvalidWorkerCount(f"worker counts must be positive, got {workers!r}")
    return Architecture(tags, tiled_workers=tiled if LevelTag.TILED in tags else 1,
                        threads=threads if LevelTag.THREADED in tags else 1)


def config_path():
    return os.environ.get("GSCL_CONFIG", "gscl.ini")


def resolve_default_arch():
    """Environment override, then configuration file, then a machine probe."""
    override = os.environ.get("GSCL_ARCH")
    if override is not None and override.strip():
        return make_arch(override)
    path = config_path()
    if os.path.exists(path):
        cfg = configparser.ConfigParser()
        cfg.read(path)
        if cfg.has_option("arch", "levels"):
            workers = cfg.getint("arch", "workers", fallback=None)
            return make_arch(cfg.get("arch", "levels"), workers)
    if hardware_workers() >= 2:
        return make_arch([LevelTag.THREADED, LevelTag.SEQUENTIAL])
    return make_arch([LevelTag.SEQUENTIAL])
