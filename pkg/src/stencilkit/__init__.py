"""Generic stencil computations over regular grids with interchangeable backends.

Typical use::

    import stencilkit as sk

    sk.gscl_init()
    arch = sk.make_arch(["threaded", "sequential"])
    store = sk.default_storage(arch, "float64")
    u = sk.make_grid((64, 64), 1, storage=store)
    v = sk.make_grid((64, 64), 1, storage=store)
    with sk.begin(arch, [v, u]) as ctx:
        sk.do_all(ctx, (v, u), sk.op_diffusion())
    sk.gscl_finalize()
"""

from ._jit import kernel_mode, set_kernel_mode
from .arch import Architecture, LevelTag, make_arch
from .context import (
    Context,
    ContextState,
    Library,
    LibraryPhase,
    begin,
    default_arch,
    default_storage,
    end,
    execute,
    gscl_finalize,
    gscl_init,
    library,
    set_library,
)
from .decomposition import TileDecomposition, decompose, factorize_workers, split_extent
from .domain import Domain, HaloSpec
from .errors import *  # noqa: F401,F403
from .grid import Grid, accessor_at, dump_csv, make_grid, read, swap_grids, write
from .halo import exchange_halos, gather
from .operators import (
    READ_ONLY,
    READ_WRITE,
    WRITE_ONLY,
    AccessMode,
    ReductionOp,
    StencilOp,
    counting,
    fuse,
    op_convergence,
    op_diffusion,
    op_identity,
    reduction_and,
    reduction_max,
    reduction_sum,
    stencil_op,
)
from .spaces import (
    DECREASING,
    INCREASING,
    Space,
    do_all,
    do_diamond,
    do_i_dec,
    do_i_inc,
    do_j_dec,
    do_j_inc,
    do_k_dec,
    do_k_inc,
    do_reduce,
    do_sweep,
    predecessors,
)
from .storage import StorageSelector, TransferLog

__version__ = "0.1.0"
