"""Index-space descriptions: core domains and halo extents."""

from dataclasses import dataclass
from math import prod

from .errors import InvalidDomain, UnsupportedDimension

MAX_DIM = 3


def _check_dim(d):
    if d not in (1, 2, 3):
        raise UnsupportedDimension(f"dimension must be 1, 2 or 3, got {d}")


@dataclass(frozen=True)
class Domain:
    """Core extents of a regular grid, one positive integer per dimension."""

    extents: tuple

    def __post_init__(self):
        ext = tuple(int(e) for e in self.extents)
        _check_dim(len(ext))
        if any(e <= 0 for e in ext):
            raise InvalidDomain(f"core extents must be positive, got {ext}")
        object.__setattr__(self, "extents", ext)

    @property
    def dim(self):
        return len(self.extents)

    @property
    def cells(self):
        return prod(self.extents)

    def allocated(self, halo):
        return tuple(n + m + p for n, m, p in zip(self.extents, halo.minus, halo.plus))

    def __len__(self):
        return len(self.extents)


@dataclass(frozen=True)
class HaloSpec:
    """Maximum negative (``minus``) and positive (``plus``) offsets per dimension."""

    minus: tuple
    plus: tuple

    def __post_init__(self):
        minus = tuple(int(m) for m in self.minus)
        plus = tuple(int(p) for p in self.plus)
        if len(minus) != len(plus):
            raise InvalidDomain("halo minus and plus must have the same length")
        _check_dim(len(minus))
        if any(m < 0 for m in minus) or any(p < 0 for p in plus):
            raise InvalidDomain(f"halo widths must be non-negative, got {minus}/{plus}")
        object.__setattr__(self, "minus", minus)
        object.__setattr__(self, "plus", plus)

    @classmethod
    def uniform(cls, dim, width=1):
        return cls((width,) * dim, (width,) * dim)

    @property
    def dim(self):
        return len(self.minus)

    def covers(self, other):
        """True when every width of ``other`` fits inside this halo."""
        return all(a >= b for a, b in zip(self.minus, other.minus)) and all(
            a >= b for a, b in zip(self.plus, other.plus)
        )

    def is_zero(self):
        return not any(self.minus) and not any(self.plus)


def as_domain(domain):
    if isinstance(domain, Domain):
        return domain
    if isinstance(domain, int):
        return Domain((domain,))
    return Domain(tuple(domain))


def as_halo(halo, dim):
    """Accept a HaloSpec, a single width, or a (minus, plus) pair."""
    if isinstance(halo, HaloSpec):
        if halo.dim != dim:
            raise InvalidDomain(f"halo is {halo.dim}-dimensional, domain is {dim}-dimensional")
        return halo
    if isinstance(halo, int):
        return HaloSpec.uniform(dim, halo)
    minus, plus = halo
    if isinstance(minus, int):
        minus = (minus,) * dim
    if isinstance(plus, int):
        plus = (plus,) * dim
    spec = HaloSpec(tuple(minus), tuple(plus))
    if spec.dim != dim:
        raise InvalidDomain(f"halo is {spec.dim}-dimensional, domain is {dim}-dimensional")
    return spec
