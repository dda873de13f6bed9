"""Accessors: the views stencil operators use to touch grid elements.

An accessor is bound to one grid and one core element (or, for the vectorized
path, a block of core elements). ``acc(*offset)`` reads at a fixed offset from
the core element, ``acc()`` reads the core element itself, and
``acc.set(value)`` writes the core element. Stateful accessors additionally
report the global core index through :meth:`StatefulAccessor.index`.
"""

import numpy as np

from .errors import AccessModeViolation, HaloViolation


class _Bounds:
    """Offset limits and access rights shared by point and block accessors."""

    __slots__ = ("ndim", "halo_minus", "halo_plus", "fp_minus", "fp_plus",
                 "readable", "writable", "order_guard", "name")

    def __init__(self, ndim, halo_minus, halo_plus, fp_minus=None, fp_plus=None,
                 readable=True, writable=True, order_guard=None, name="grid"):
        self.ndim = ndim
        self.halo_minus = halo_minus
        self.halo_plus = halo_plus
        self.fp_minus = fp_minus
        self.fp_plus = fp_plus
        self.readable = readable
        self.writable = writable
        self.order_guard = order_guard
        self.name = name

    def check_read(self, off):
        if len(off) != self.ndim:
            raise HaloViolation(f"{self.name}: offset {off} has {len(off)} components, "
                                f"grid is {self.ndim}-dimensional")
        # ordered spaces may read a written grid at the offsets processed earlier
        if not self.readable and not (self.order_guard is not None and any(off)):
            raise AccessModeViolation(f"{self.name} is declared write-only but was read")
        for k, o in enumerate(off):
            if o < -self.halo_minus[k] or o > self.halo_plus[k]:
                raise HaloViolation(f"{self.name}: offset {off} exceeds the grid halo")
            if self.fp_minus is not None and (o < -self.fp_minus[k] or o > self.fp_plus[k]):
                raise HaloViolation(f"{self.name}: offset {off} exceeds the operator footprint")
        if self.order_guard is not None and any(off):
            self.order_guard(off)

    def check_write(self):
        if not self.writable:
            raise AccessModeViolation(f"{self.name} is declared read-only but was written")


class Accessor:
    """Per-element accessor (plain flavor)."""

    __slots__ = ("_array", "_pos", "_bounds", "_origin", "_minus", "count")

    def __init__(self, array, bounds, minus, origin=None):
        self._array = array
        self._bounds = bounds
        self._minus = tuple(minus)
        self._origin = tuple(origin) if origin is not None else (0,) * len(minus)
        self._pos = None
        self.count = 1

    @property
    def ndim(self):
        return self._bounds.ndim

    def _move(self, local_core):
        self._pos = tuple(c + m for c, m in zip(local_core, self._minus))

    def __call__(self, *off):
        if not off:
            off = (0,) * self._bounds.ndim
        self._bounds.check_read(off)
        return self._array[tuple(p + o for p, o in zip(self._pos, off))]

    def set(self, value):
        self._bounds.check_write()
        self._array[self._pos] = value


class StatefulAccessor(Accessor):
    """Accessor that can also report the global index of its core element."""

    __slots__ = ()

    def index(self):
        return tuple(p - m + o for p, m, o in zip(self._pos, self._minus, self._origin))


class BlockAccessor:
    """Vectorized accessor over a box or an arbitrary set of core elements.

    Reads return numpy arrays aligned with the block, so operator bodies written
    with plain arithmetic evaluate all elements of the block at once.
    """

    __slots__ = ("_array", "_bounds", "_minus", "_origin", "_lo", "_hi", "_coords", "count")

    def __init__(self, array, bounds, minus, origin, lo=None, hi=None, coords=None):
        self._array = array
        self._bounds = bounds
        self._minus = tuple(minus)
        self._origin = tuple(origin)
        self._lo, self._hi, self._coords = lo, hi, coords
        if coords is not None:
            self.count = int(np.size(coords[0]))
        else:
            self.count = int(np.prod([h - l for l, h in zip(lo, hi)]))

    @property
    def ndim(self):
        return self._bounds.ndim

    def _where(self, off):
        if self._coords is not None:
            return tuple(c + m + o for c, m, o in zip(self._coords, self._minus, off))
        return tuple(slice(l + m + o, h + m + o)
                     for l, h, m, o in zip(self._lo, self._hi, self._minus, off))

    def __call__(self, *off):
        if not off:
            off = (0,) * self._bounds.ndim
        self._bounds.check_read(off)
        return self._array[self._where(off)]

    def set(self, value):
        self._bounds.check_write()
        self._array[self._where((0,) * self._bounds.ndim)] = value


class StatefulBlockAccessor(BlockAccessor):
    __slots__ = ()

    def index(self):
        if self._coords is not None:
            return tuple(c + o for c, o in zip(self._coords, self._origin))
        d = len(self._lo)
        out = []
        for k, (l, h, o) in enumerate(zip(self._lo, self._hi, self._origin)):
            shape = [1] * d
            shape[k] = h - l
            out.append(np.arange(l + o, h + o).reshape(shape))
        return tuple(out)
