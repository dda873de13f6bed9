"""Library lifecycle and execution contexts.

The library moves through ``Uninitialized -> Ready <-> InContext``, and ends
in ``Finalized``. ``begin`` hands a set of grids to the backend. While the
returned context is active, direct reads and writes on those grids raise
:class:`ContextViolation`. ``end`` gives them back, copying device-resident
data to the host first.

Module-level functions act on a process-wide default :class:`Library`.
"""

import enum
import weakref

from . import kernels
from .arch import Architecture, LevelTag, make_arch, resolve_default_arch
from .engines import build_executor
from .errors import (
    ArityMismatch,
    ContextViolation,
    HaloViolation,
    PhaseViolation,
    ShapeMismatch,
    StorageMismatch,
)
from .kernels import REDUCE
from .operators import READ_WRITE, AccessMode
from .storage import StorageSelector, TransferLog


class LibraryPhase(enum.Enum):
    UNINITIALIZED = "uninitialized"
    READY = "ready"
    IN_CONTEXT = "in_context"
    FINALIZED = "finalized"


class ContextState(enum.Enum):
    ACTIVE = "active"
    INVALID = "invalid"


def default_storage(arch, role=None):
    """Buffer strategy for grids used under ``arch``.

    Tiled outermost gives one block per tile (device-staged blocks if a device
    level sits under it); a device level alone gives a host buffer paired with
    a staging buffer; everything else uses a plain host buffer.
    """
    if not isinstance(arch, Architecture):
        arch = make_arch(arch)
    device = LevelTag.DEVICE in arch.levels
    if arch.outermost is LevelTag.TILED:
        return StorageSelector("tiled", role, arch.tiled_workers, "device" if device else "host")
    return StorageSelector("device" if device else "host", role)


def _block_cores(storage):
    if storage.kind == "tiled":
        return [tuple(slice(m, m + e) for m, e in zip(storage.minus, t.extents))
                for t in storage.decomp.tiles]
    return [storage.core_slices()]


class Context:
    """An execution context obtained from :meth:`Library.begin`."""

    def __init__(self, library, arch, grids, modes):
        self.library = library
        self.architecture = arch
        self.grids = tuple(grids)
        self.state = ContextState.ACTIVE
        self.transfers = TransferLog()
        self.engine = build_executor(arch)
        # storages, not grids: swapping moves buffers between registered grids
        self._storages = [g.storage for g in self.grids]
        self._modes = {g.storage.token: modes.get(id(g), READ_WRITE) for g in self.grids}

    @property
    def active(self):
        return self.state is ContextState.ACTIVE

    def residency(self, grid):
        blocks = grid.storage.blocks
        if all(getattr(b, "resident", False) for b in blocks):
            return "device"
        return "host"

    @property
    def messages(self):
        """Halo-exchange messages sent so far (tiled architectures)."""
        return getattr(self.engine, "messages", 0)

    @property
    def launches(self):
        eng = getattr(self.engine, "engine", None)
        if eng is not None:
            return getattr(eng, "launches", 0)
        return sum(getattr(e, "launches", 0) for e in getattr(self.engine, "inner", {}).values())

    def _stage(self):
        for s in self._storages:
            mode = self._modes[s.token]
            for b in s.blocks:
                b.stage(mode, self.transfers)

    def _unstage(self):
        for s in self._storages:
            mode = self._modes[s.token]
            for b, core in zip(s.blocks, _block_cores(s)):
                b.unstage(mode, self.transfers, core)

    def _validate(self, space, grids, op, red):
        if not self.active:
            raise ContextViolation("context is invalid; iteration spaces need an active context")
        grids = tuple(grids)
        if len(grids) != op.arity:
            raise ArityMismatch(f"{op.name} takes {op.arity} grids, got {len(grids)}")
        for g in grids:
            if g.storage.context is not self:
                raise ContextViolation(f"{g!r} is not registered with this context")
        dom = grids[0].domain
        for g in grids[1:]:
            if g.domain != dom:
                raise ShapeMismatch(f"grids span different domains: {dom.extents} vs "
                                    f"{g.domain.extents}")
        space.check(dom.dim)
        for k, g in enumerate(grids):
            fm, fp = op.footprint_for(k, g.dim)
            if any(f > h for f, h in zip(fm, g.halo.minus)) or \
                    any(f > h for f, h in zip(fp, g.halo.plus)):
                raise HaloViolation(f"grid {k} halo {g.halo.minus}/{g.halo.plus} is narrower "
                                    f"than the footprint {fm}/{fp} of {op.name}")
        if space.kind == REDUCE:
            if red is None:
                raise TypeError("do_reduce needs a reduction operator")
            if not op.returns:
                raise TypeError(f"{op.name} does not return a value; do_reduce needs one")
        return grids

    def execute(self, space, grids, op, red=None):
        """Dispatch one iteration-space call through the architecture's engines."""
        grids = self._validate(space, grids, op, red)
        partials = self.engine.execute(space, grids, op, red)
        if space.kind == REDUCE:
            return kernels.tree_reduce(partials, red)
        return None

    def end(self):
        self.library.end(self)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        if self.active:
            self.library.end(self)
        return False

    def __repr__(self):
        return f"<Context {self.architecture.describe()} {self.state.value}>"


class Library:
    """The phase machine of one library instance."""

    def __init__(self):
        self.phase = LibraryPhase.UNINITIALIZED
        self.context = None
        self._staged = weakref.WeakSet()

    def _require(self, phase, what):
        if self.phase is not phase:
            raise PhaseViolation(f"{what} needs phase {phase.value}, library is {self.phase.value}")

    def init(self):
        self._require(LibraryPhase.UNINITIALIZED, "init")
        self.phase = LibraryPhase.READY

    def finalize(self):
        self._require(LibraryPhase.READY, "finalize")
        for s in list(self._staged):
            for b in s.blocks:
                if hasattr(b, "device"):
                    b.device = None
        self._staged = weakref.WeakSet()
        self.phase = LibraryPhase.FINALIZED

    def default_arch(self):
        if self.phase not in (LibraryPhase.READY, LibraryPhase.IN_CONTEXT):
            raise PhaseViolation(f"default_arch needs an initialized library, "
                                 f"library is {self.phase.value}")
        return resolve_default_arch()

    def begin(self, arch, grids, modes=None):
        """Open a context over ``grids``.

        Parameters
        ----------
        arch : Architecture or level list
        grids : iterable of Grid
            Grids built with ``default_storage(arch)``.
        modes : dict, optional
            Access mode per grid (keyed by the grid object), used to skip
            uploads of write-only grids and downloads of read-only ones.
            Grids not listed are treated as read-write.
        """
        self._require(LibraryPhase.READY, "begin")
        if not isinstance(arch, Architecture):
            arch = make_arch(arch)
        grids = list(dict.fromkeys(grids))
        want = default_storage(arch)
        for g in grids:
            _check_storage(g, want)
        mode_map = {id(g): AccessMode.parse(m) for g, m in (modes or {}).items()}
        ctx = Context(self, arch, grids, mode_map)
        for g in grids:
            g.storage.context = ctx
            self._staged.add(g.storage)
        ctx._stage()
        self.context = ctx
        self.phase = LibraryPhase.IN_CONTEXT
        return ctx

    def end(self, ctx):
        if not ctx.active or ctx.library is not self:
            raise ContextViolation("context already ended")
        ctx._unstage()
        ctx.state = ContextState.INVALID
        ctx.engine.close()
        self.context = None
        self.phase = LibraryPhase.READY


def _check_storage(grid, want):
    s = grid.storage
    if s.context is not None and s.context.active:
        raise StorageMismatch(f"{grid!r} is already registered with an active context")
    if s.kind != want.kind:
        raise StorageMismatch(f"{grid!r} has {s.kind} storage; this architecture needs "
                              f"{want.kind} storage")
    if want.kind == "tiled" and (s.decomp.size != want.workers or s.tile_kind != want.tile_kind):
        raise StorageMismatch(f"{grid!r} is tiled over {s.decomp.size} {s.tile_kind} blocks; this "
                              f"architecture needs {want.workers} {want.tile_kind} blocks")


_library = Library()


def library():
    return _library


def set_library(lib):
    """Install ``lib`` as the default library; returns the previous one."""
    global _library
    prev, _library = _library, lib
    return prev


def gscl_init():
    _library.init()


def gscl_finalize():
    _library.finalize()


def begin(arch, grids, modes=None):
    return _library.begin(arch, grids, modes)


def end(ctx):
    ctx.library.end(ctx)


def default_arch():
    return _library.default_arch()


def execute(ctx, space, grids, op, red=None):
    return ctx.execute(space, grids, op, red)
