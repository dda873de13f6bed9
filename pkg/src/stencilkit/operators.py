"""Stencil operators, reductions, and operator fusion.

A stencil operator is a Python callable taking one accessor per grid. It reads
neighbors through ``acc(*offset)``, writes its own core element through
``acc.set(value)``, and may return a value for ``do_reduce``. Operators that
are written with plain arithmetic (no branching on element values) can be
flagged ``vectorized`` and are then evaluated a whole block at a time. Built-in
operators also carry compiled point kernels used on the numba path.
"""

import enum
import inspect
import threading
from functools import lru_cache

import numpy as np

from ._jit import HAVE_NUMBA, njit
from .domain import HaloSpec
from .errors import FusionArityMismatch, FusionConflict


class AccessMode(enum.Enum):
    READ_ONLY = "r"
    WRITE_ONLY = "w"
    READ_WRITE = "rw"

    @property
    def reads(self):
        return self is not AccessMode.WRITE_ONLY

    @property
    def writes(self):
        return self is not AccessMode.READ_ONLY

    def join(self, other):
        return self if self is other else AccessMode.READ_WRITE

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"r": "r", "read": "r", "w": "w", "write": "w", "rw": "rw", "readwrite": "rw"}
        return cls(aliases[str(value).lower().replace("_", "").replace("-", "")])


READ_ONLY = AccessMode.READ_ONLY
WRITE_ONLY = AccessMode.WRITE_ONLY
READ_WRITE = AccessMode.READ_WRITE


def _as_footprint(fp, dim):
    if fp is None:
        fp = 0
    if isinstance(fp, int):
        return (fp,) * dim, (fp,) * dim
    if isinstance(fp, HaloSpec):
        return fp.minus, fp.plus
    minus, plus = fp
    if isinstance(minus, int):
        minus = (minus,) * dim
    if isinstance(plus, int):
        plus = (plus,) * dim
    return tuple(minus), tuple(plus)


class StencilOp:
    """A stencil operator over a tuple of grids.

    Parameters
    ----------
    body : callable
        ``body(*accessors)``; may return a value.
    access : sequence of AccessMode or str, optional
        One mode per grid (``"r"``, ``"w"``, ``"rw"``). Without it every grid is
        treated as read-write and the arity is taken from ``body``'s signature.
    footprint : int, HaloSpec, (minus, plus), or list of those
        Largest offsets the body reads. A list gives one entry per grid.
    returns : bool
        Whether the body returns a value (required by ``do_reduce``).
    vectorized : bool
        Body is valid when accessors yield arrays instead of scalars.
    stateful : bool
        Body calls ``index()`` on its accessors.
    points : dict, optional
        Compiled point kernels keyed by dimension, ``point(arrays, idx)``.
    """

    def __init__(self, body, access=None, footprint=0, *, returns=False, vectorized=False,
                 stateful=False, points=None, name=None):
        self.body = body
        if access is None:
            arity = len(inspect.signature(body).parameters)
            self.access = (READ_WRITE,) * arity
            self.declared_access = False
        else:
            self.access = tuple(AccessMode.parse(a) for a in access)
            self.declared_access = True
        self.footprint = footprint
        self.returns = returns
        self.vectorized = vectorized
        self.stateful = stateful
        self.points = dict(points or {})
        self.name = name or getattr(body, "__name__", "op")

    @property
    def arity(self):
        return len(self.access)

    def footprint_for(self, k, dim):
        """(minus, plus) offsets the body may read on grid ``k``."""
        fp = self.footprint
        if isinstance(fp, list):
            fp = fp[k]
        return _as_footprint(fp, dim)

    def __call__(self, *accessors):
        return self.body(*accessors)

    def __repr__(self):
        modes = ",".join(m.value for m in self.access)
        return f"<StencilOp {self.name} ({modes})>"


def stencil_op(access=None, footprint=0, **kwargs):
    """Decorator turning a function into a :class:`StencilOp`."""

    def wrap(fn):
        return StencilOp(fn, access, footprint, **kwargs)

    return wrap


class FusedOp(StencilOp):
    """Two operators applied back to back at each core element in one pass."""

    def __init__(self, first, second):
        self.first = first
        self.second = second
        access = tuple(a.join(b) for a, b in zip(first.access, second.access))
        fps = [self._join_fp(k) for k in range(first.arity)]
        points = {}
        for d in set(first.points) & set(second.points):
            points[d] = _fused_point(first.points[d], second.points[d])
        super().__init__(self._body, access, fps, returns=second.returns,
                         vectorized=first.vectorized and second.vectorized,
                         stateful=first.stateful or second.stateful, points=points,
                         name=f"fuse({first.name}, {second.name})")
        self.declared_access = first.declared_access and second.declared_access

    def _join_fp(self, k):
        a, b = self.first, self.second

        def fp(dim):
            am, ap = a.footprint_for(k, dim)
            bm, bp = b.footprint_for(k, dim)
            return (tuple(map(max, am, bm)), tuple(map(max, ap, bp)))

        return _LazyFootprint(fp)

    def footprint_for(self, k, dim):
        return self.footprint[k](dim)

    def _body(self, *accessors):
        self.first.body(*accessors)
        return self.second.body(*accessors)


class _LazyFootprint:
    __slots__ = ("fn",)

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, dim):
        return self.fn(dim)


def _fp_is_zero(op, k):
    for dim in (1, 2, 3):
        minus, plus = op.footprint_for(k, dim)
        if any(minus) or any(plus):
            return False
    return True


def fuse(a, b):
    """Fuse two operators over the same grid tuple.

    Per core element the fused operator runs ``a`` then ``b`` and returns
    ``b``'s value. ``b`` may read grids that ``a`` writes only at the zero
    offset, which keeps the fused operator a single pass.
    """
    if a.arity != b.arity:
        raise FusionArityMismatch(f"cannot fuse arity {a.arity} with arity {b.arity}")
    for k, mode in enumerate(a.access):
        if mode.writes and b.access[k].reads and not _fp_is_zero(b, k):
            raise FusionConflict(
                f"{b.name} reads grid {k} off-center but {a.name} writes it")
    return FusedOp(a, b)


@lru_cache(maxsize=None)
def _fused_point(pa, pb):
    @njit(nogil=True)
    def point(arrs, idx):
        pa(arrs, idx)
        return pb(arrs, idx)

    return point


class CountingOp(StencilOp):
    """Wrapper counting how many core elements an operator was applied to."""

    def __init__(self, op):
        self.inner = op
        self.applications = 0
        self._lock = threading.Lock()
        super().__init__(self._body, op.access, op.footprint, returns=op.returns,
                         vectorized=op.vectorized, stateful=op.stateful,
                         name=f"counting({op.name})")
        self.declared_access = op.declared_access

    def footprint_for(self, k, dim):
        return self.inner.footprint_for(k, dim)

    def _body(self, *accessors):
        with self._lock:
            self.applications += accessors[0].count
        return self.inner.body(*accessors)


def counting(op):
    return CountingOp(op)


# --- reductions -----------------------------------------------------------


class ReductionOp:
    """Commutative, associative combine with an identity element.

    ``ufunc`` (optional) reduces a whole array line at a time on the vectorized
    path; ``jit`` (optional) is a compiled combine for the numba path.
    """

    def __init__(self, combine, identity, *, ufunc=None, jit=None, name=None):
        self.combine = combine
        self.identity = identity
        self.ufunc = ufunc
        self.jit = jit
        self.name = name or getattr(combine, "__name__", "reduce")

    def line_partials(self, values):
        """Reduce each line along the last axis; one partial per line, row-major."""
        values = np.asarray(values)
        if self.ufunc is not None:
            return np.atleast_1d(self.ufunc.reduce(values, axis=-1)).ravel()
        lines = values.reshape(-1, values.shape[-1])
        out = []
        for line in lines:
            acc = self.identity
            for x in line:
                acc = self.combine(acc, x)
            out.append(acc)
        return out

    def __repr__(self):
        return f"<ReductionOp {self.name}>"


def _and(a, b):
    return a & b


def _sum(a, b):
    return a + b


def _max(a, b):
    return a if a >= b else b


def _jitted(fn):
    return njit(nogil=True, cache=True)(fn) if HAVE_NUMBA else None


_and_jit = _jitted(_and)
_sum_jit = _jitted(_sum)
_max_jit = _jitted(_max)


def reduction_and():
    return ReductionOp(lambda a, b: bool(a) and bool(b), True, ufunc=np.logical_and,
                       jit=_and_jit, name="and")


def reduction_sum(role="float64"):
    identity = 0 if np.dtype(role).kind in "iub" else 0.0
    return ReductionOp(_sum, identity, ufunc=np.add, jit=_sum_jit, name="sum")


def reduction_max(role="float64"):
    dt = np.dtype(role)
    identity = int(np.iinfo(dt).min) if dt.kind in "iu" else float("-inf")
    return ReductionOp(_max, identity, ufunc=np.maximum, jit=_max_jit, name="max")


# --- built-in operators ----------------------------------------------------


@njit(nogil=True, cache=True)
def _diffusion_point1(arrs, idx):
    v = arrs[0]
    u = arrs[1]
    i = idx[0]
    v[i] = 1.0 / 36.0 * (6 * u[i] - u[i + 1] - u[i - 1])


@njit(nogil=True, cache=True)
def _diffusion_point2(arrs, idx):
    v = arrs[0]
    u = arrs[1]
    i, j = idx
    v[i, j] = 1.0 / 36.0 * (6 * u[i, j] - u[i + 1, j] - u[i - 1, j] - u[i, j + 1] - u[i, j - 1])


@njit(nogil=True, cache=True)
def _diffusion_point3(arrs, idx):
    v = arrs[0]
    u = arrs[1]
    i, j, k = idx
    v[i, j, k] = 1.0 / 36.0 * (6 * u[i, j, k]
                               - u[i + 1, j, k] - u[i - 1, j, k]
                               - u[i, j + 1, k] - u[i, j - 1, k]
                               - u[i, j, k + 1] - u[i, j, k - 1])


def _diffusion_body(v, u):
    d = u.ndim
    if d == 3:
        v.set(1.0 / 36.0 * (6 * u()
                            - u(1, 0, 0) - u(-1, 0, 0)
                            - u(0, 1, 0) - u(0, -1, 0)
                            - u(0, 0, 1) - u(0, 0, -1)))
    elif d == 2:
        v.set(1.0 / 36.0 * (6 * u() - u(1, 0) - u(-1, 0) - u(0, 1) - u(0, -1)))
    else:
        v.set(1.0 / 36.0 * (6 * u() - u(1) - u(-1)))


def op_diffusion():
    """Averaging operator ``v = (6 u - sum of face neighbors of u) / 36``.

    Grids are ``(v, u)`` with ``v`` write-only and ``u`` read-only. In 2D and
    1D the missing axes' neighbor terms are dropped.
    """
    points = {}
    if HAVE_NUMBA:
        points = {1: _diffusion_point1, 2: _diffusion_point2, 3: _diffusion_point3}
    return StencilOp(_diffusion_body, (WRITE_ONLY, READ_ONLY), [0, 1], vectorized=True,
                     points=points, name="diffusion")


@lru_cache(maxsize=None)
def _convergence_point(epsilon):
    @njit(nogil=True)
    def point(arrs, idx):
        return abs(arrs[0][idx] - arrs[1][idx]) <= epsilon

    return point


def op_convergence(epsilon):
    """``|now() - before()| <= epsilon`` at the core element, over grids ``(now, before)``."""
    epsilon = float(epsilon)

    def convergence(now, before):
        return abs(now() - before()) <= epsilon

    points = {}
    if HAVE_NUMBA:
        p = _convergence_point(epsilon)
        points = {1: p, 2: p, 3: p}
    op = StencilOp(convergence, (READ_ONLY, READ_ONLY), 0, returns=True, vectorized=True,
                   points=points, name=f"convergence({epsilon:g})")
    op.epsilon = epsilon
    return op


@njit(nogil=True, cache=True)
def _noop_point(arrs, idx):
    pass


def op_identity(arity=2):
    """Operator that touches nothing; fusing it in front of another is a no-op."""

    def identity(*accessors):
        return None

    points = {1: _noop_point, 2: _noop_point, 3: _noop_point} if HAVE_NUMBA else {}
    return StencilOp(identity, (READ_ONLY,) * arity, 0, vectorized=True, points=points,
                     name="identity")
