"""Spatial unrollings (SUs) of a PE array and their enumeration."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, fields
from typing import Optional

# Fixed dimension order used for enumeration, rendering and tie-breaking.
DIMS = ("ox", "oy", "fx", "fy", "g", "c", "k")
_TEXT_NAMES = {"OX": "ox", "OY": "oy", "FX": "fx", "FY": "fy", "G": "g", "C": "c", "K": "k"}


class SuError(ValueError):
    pass


def is_pow2(n: int) -> bool:
    return isinstance(n, int) and n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True, order=True)
class SpatialUnrolling:
    """Unroll factors per loop dimension; their product is the PE count."""

    ox: int = 1
    oy: int = 1
    fx: int = 1
    fy: int = 1
    g: int = 1
    c: int = 1
    k: int = 1

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise SuError(f"unroll factor {f.name.upper()} must be a positive integer, got {value!r}")

    @property
    def nb_pes(self) -> int:
        return math.prod(self.factors())

    def factors(self) -> tuple[int, ...]:
        return tuple(getattr(self, d) for d in DIMS)

    def is_pow2(self) -> bool:
        return all(is_pow2(f) for f in self.factors())

    @property
    def o_sum(self) -> int:
        return self.c * self.fx * self.fy

    @property
    def w_u(self) -> int:
        return self.g * self.c * self.k * self.fx * self.fy

    @property
    def a_u(self) -> int:
        return self.g * self.c * self.ox * self.fx * self.oy * self.fy

    def text(self) -> str:
        """Canonical text form, e.g. ``OX=2,C=2,K=2``; empty for all-ones."""
        names = {v: k for k, v in _TEXT_NAMES.items()}
        return ",".join(f"{names[d]}={getattr(self, d)}" for d in DIMS if getattr(self, d) > 1)

    def __str__(self):
        return f"[{self.text()}]"


@dataclass(frozen=True)
class SuDerived:
    o_sum: int
    w_u: int
    a_u: int


@dataclass(frozen=True)
class SuConstraints:
    """Optional limits applied during enumeration.

    ``max_factors`` maps a dimension name (``ox``, ``fx``, ...) to the
    largest allowed unroll factor. With ``g_exclusive`` set, SUs that unroll
    G together with C or K are skipped: such SUs waste PEs on every layer.
    """

    max_factors: Optional[dict] = None
    g_exclusive: bool = True

    def __post_init__(self):
        for dim, limit in (self.max_factors or {}).items():
            if dim not in DIMS:
                raise SuError(f"unknown dimension {dim!r} in constraints")
            if not is_pow2(limit):
                raise SuError(f"maximum for {dim.upper()} must be a power of 2, got {limit!r}")

    def allows(self, su: SpatialUnrolling) -> bool:
        if self.g_exclusive and su.g > 1 and (su.c > 1 or su.k > 1):
            return False
        for dim, limit in (self.max_factors or {}).items():
            if getattr(su, dim) > limit:
                return False
        return True

    def to_dict(self) -> dict:
        return {"max_factors": dict(sorted((self.max_factors or {}).items())),
                "g_exclusive": self.g_exclusive}


def su_derived(su: SpatialUnrolling) -> SuDerived:
    return SuDerived(o_sum=su.o_sum, w_u=su.w_u, a_u=su.a_u)


def _compositions(total: int, parts: int):
    """Non-negative integer tuples of length ``parts`` summing to ``total``, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_sus(nb_pes: int, constraints: Optional[SuConstraints] = None) -> list[SpatialUnrolling]:
    """All power-of-2 SUs with the given PE count, in lexicographic factor order."""
    if not is_pow2(nb_pes):
        raise SuError(f"nb_PEs must be a power of 2, got {nb_pes!r}")
    constraints = constraints or SuConstraints(g_exclusive=False)
    exponent = nb_pes.bit_length() - 1
    sus = []
    for exps in _compositions(exponent, len(DIMS)):
        su = SpatialUnrolling(*(1 << e for e in exps))
        if constraints.allows(su):
            sus.append(su)
    return sus


_TERM = re.compile(r"^\s*([A-Za-z]+)\s*=\s*(\d+)\s*$")


def parse_su(text: str) -> SpatialUnrolling:
    """Parse ``DIM=FACTOR(,DIM=FACTOR)*``; omitted dimensions default to 1."""
    factors = {}
    text = text.strip().strip("[]")
    if text:
        for term in text.split(","):
            match = _TERM.match(term)
            if not match:
                raise SuError(f"malformed SU term {term!r}")
            name, value = match.group(1).upper(), int(match.group(2))
            if name not in _TEXT_NAMES:
                raise SuError(f"unknown dimension {name!r}; expected one of {', '.join(_TEXT_NAMES)}")
            dim = _TEXT_NAMES[name]
            if dim in factors:
                raise SuError(f"dimension {name} given twice")
            if not is_pow2(value):
                raise SuError(f"factor for {name} must be a power of 2, got {value}")
            factors[dim] = value
    return SpatialUnrolling(**factors)


def composition_count(nb_pes: int) -> int:
    """Number of unconstrained power-of-2 SUs for a power-of-2 PE count."""
    e = nb_pes.bit_length() - 1
    return math.comb(e + len(DIMS) - 1, len(DIMS) - 1)


def check_same_size(sus) -> int:
    sizes = {su.nb_pes for su in sus}
    if len(sizes) != 1:
        raise SuError(f"SUs must share one PE count, got {sorted(sizes)}")
    return sizes.pop()


def powerset_sizes(items, sizes):
    """Combinations of ``items`` for each size in ``sizes``, in lexicographic order."""
    for n in sizes:
        yield from itertools.combinations(items, n)
