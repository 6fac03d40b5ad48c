"""Product maps F(z, w) = (P(z), Q(w)) and skew products F(z, w) = (P(z), Q(z, w)).

Both families fix the origin.  Points of C^2 are ``(z, w)`` tuples.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .polycore import Polynomial, all_roots, derivative_at, evaluate, preimages_of_value

ORIGIN_TOL = 1e-14
MULTIPLIER_TOL = 1e-12
ESCAPE_RADIUS = 1e6
ROUND_TRIP_TOL = 1e-8


class FixedPointKind(str, enum.Enum):
    SUPERATTRACTING = "SUPERATTRACTING"
    GEOMETRIC = "GEOMETRIC"
    PARABOLIC = "PARABOLIC"
    OTHER = "OTHER"


@dataclass(frozen=True)
class FixedPointClass:
    multiplier: complex
    kind: FixedPointKind


def classify_fixed_point(p: Polynomial) -> FixedPointClass:
    """Classify the fixed point 0 of p by its multiplier p'(0)."""
    if abs(evaluate(p, 0j)) > ORIGIN_TOL:
        raise ValueError(f"{p} does not fix the origin")
    lam = complex(derivative_at(p, 0j))
    r = abs(lam)
    if r <= MULTIPLIER_TOL:
        kind = FixedPointKind.SUPERATTRACTING
    elif abs(lam - 1) <= MULTIPLIER_TOL:
        kind = FixedPointKind.PARABOLIC
    elif r < 1 - MULTIPLIER_TOL:
        kind = FixedPointKind.GEOMETRIC
    else:
        kind = FixedPointKind.OTHER
    return FixedPointClass(lam, kind)


@dataclass(frozen=True)
class ProductMap:
    P: Polynomial
    Q: Polynomial

    def __post_init__(self):
        for name, p in (("P", self.P), ("Q", self.Q)):
            if abs(p.coeffs[0]) > ORIGIN_TOL:
                raise ValueError(f"{name} must fix the origin")

    def __call__(self, z, w):
        return evaluate(self.P, z), evaluate(self.Q, w)


class SkewFamily(str, enum.Enum):
    W2_PLUS_AZ = "W2_PLUS_AZ"
    W2_CW_BZ = "W2_CW_BZ"
    GENERIC = "GENERIC"


@dataclass(frozen=True)
class SkewMap:
    """F(z, w) = (P(z), Q(z, w)).

    ``qcoeffs`` maps exponent pairs (i, j) to the coefficient of z^i w^j.  Use
    the constructors :meth:`w2_plus_az` and :meth:`w2_cw_bz` for the two
    studied families; ``params`` keeps their parameters.
    """

    P: Polynomial
    qcoeffs: Mapping[tuple[int, int], complex]
    family: SkewFamily = SkewFamily.GENERIC
    params: Mapping[str, complex] = field(default_factory=dict)

    def __post_init__(self):
        if abs(self.P.coeffs[0]) > ORIGIN_TOL or abs(self.qcoeffs.get((0, 0), 0)) > ORIGIN_TOL:
            raise ValueError("skew map must fix the origin")
        if max(j for (_, j), c in self.qcoeffs.items() if c != 0) < 1:
            raise ValueError("Q must depend on w")

    @classmethod
    def w2_plus_az(cls, a: complex) -> "SkewMap":
        """(z^2, w^2 + a z)."""
        if a == 0:
            raise ValueError("a must be nonzero")
        return cls(Polynomial([0, 0, 1]), {(0, 2): 1, (1, 0): complex(a)}, SkewFamily.W2_PLUS_AZ, {"a": complex(a)})

    @classmethod
    def w2_cw_bz(cls, a: complex, b: complex, c: complex, *, warn: bool = True) -> "SkewMap":
        """(a z + z^2, w^2 + c w + b z) with the small-parameter hierarchy."""
        if 0 in (a, b, c):
            raise ValueError("a, b, c must be nonzero")
        fm = cls(
            Polynomial([0, a, 1]),
            {(0, 2): 1, (0, 1): complex(c), (1, 0): complex(b)},
            SkewFamily.W2_CW_BZ,
            {"a": complex(a), "b": complex(b), "c": complex(c)},
        )
        if warn:
            failed = [k for k, ok in fm.hierarchy_flags().items() if not ok]
            if failed:
                warnings.warn(f"parameter hierarchy violated: {', '.join(failed)}", stacklevel=2)
        return fm

    def hierarchy_flags(self) -> dict[str, bool]:
        """Factor-10 reading of |a| >> |c|, |a| >> |b|, |c| >> |ab|."""
        if self.family is not SkewFamily.W2_CW_BZ:
            return {}
        a, b, c = (abs(self.params[k]) for k in "abc")
        return {"a>>c": a >= 10 * c, "a>>b": a >= 10 * b, "c>>ab": c >= 10 * a * b}

    def q(self, z, w):
        with np.errstate(over="ignore", invalid="ignore"):
            acc = 0 * z + 0 * w
            for (i, j), c in self.qcoeffs.items():
                acc = acc + c * z**i * w**j
        return acc

    def q_in_w(self, z: complex) -> Polynomial:
        """Q(z, .) as a polynomial in w for fixed z."""
        deg = max(j for (_, j) in self.qcoeffs)
        cs = [0j] * (deg + 1)
        for (i, j), c in self.qcoeffs.items():
            cs[j] += c * z**i
        return Polynomial(cs)

    def __call__(self, z, w):
        return evaluate(self.P, z), self.q(z, w)


Map = Union[ProductMap, SkewMap]


@dataclass
class Orbit:
    points: list[tuple[complex, complex]]
    escaped: bool = False

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]


def forward_orbit(fmap: Map, start: tuple[complex, complex], n: int, escape_radius: float = ESCAPE_RADIUS) -> Orbit:
    """Orbit start, F(start), ..., F^n(start); stops early on escape."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    z, w = complex(start[0]), complex(start[1])
    pts = [(z, w)]
    for _ in range(n):
        z, w = (complex(v) for v in fmap(z, w))
        if not (np.isfinite(z) and np.isfinite(w)) or max(abs(z), abs(w)) > escape_radius:
            return Orbit(pts, escaped=True)
        pts.append((z, w))
    return Orbit(pts)


def inverse_step(fmap: Map, target: tuple[complex, complex]) -> list[tuple[complex, complex]]:
    """All preimages of target under one application of the map."""
    zt, wt = complex(target[0]), complex(target[1])
    if isinstance(fmap, ProductMap):
        zs = preimages_of_value(fmap.P, zt)
        ws = preimages_of_value(fmap.Q, wt)
        out = [(z, w) for z in zs for w in ws]
    else:
        out = []
        for z in preimages_of_value(fmap.P, zt):
            out.extend((z, w) for w in all_roots(fmap.q_in_w(z).shifted(wt)))
    for z, w in out:
        fz, fw = fmap(z, w)
        if abs(fz - zt) > ROUND_TRIP_TOL * (1 + abs(zt)) or abs(fw - wt) > ROUND_TRIP_TOL * (1 + abs(wt)):
            raise ArithmeticError(f"preimage {(z, w)} misses target {target}")
    return out
