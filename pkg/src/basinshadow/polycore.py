"""One-variable complex polynomials: evaluation, derivatives and complete root
extraction.

Roots come from an Aberth-Ehrlich simultaneous iteration with a Durand-Kerner
fallback.  Exact zero roots (vanishing low-order coefficients) are split off
before iterating so that superattracting preimages of 0 come back exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

LEADING_TOL = 1e-14
MAX_ITER = 500
CLUSTER_TOL = 1e-7


class RootFindingError(RuntimeError):
    """Raised when the simultaneous iteration fails to converge."""

    def __init__(self, message: str, poly: "Polynomial | None" = None):
        super().__init__(message)
        self.poly = poly


@dataclass(frozen=True)
class Polynomial:
    """Polynomial sum c_i z^i with coefficients in ascending order of power."""

    coeffs: tuple[complex, ...]

    def __init__(self, coeffs: Sequence[complex]):
        cs = [complex(c) for c in coeffs]
        while len(cs) > 1 and abs(cs[-1]) <= LEADING_TOL:
            cs.pop()
        if not cs or abs(cs[-1]) <= LEADING_TOL and len(cs) > 1:
            raise ValueError("polynomial needs a nonzero leading coefficient")
        if not all(np.isfinite(c) for c in cs):
            raise ValueError("polynomial coefficients must be finite")
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def monomial(cls, m: int) -> "Polynomial":
        return cls([0] * m + [1])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        return evaluate(self, z)

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial([0])
        return Polynomial([i * c for i, c in enumerate(self.coeffs) if i > 0])

    def shifted(self, v: complex) -> "Polynomial":
        """Return p - v."""
        cs = list(self.coeffs)
        cs[0] -= v
        return Polynomial(cs)

    def __str__(self) -> str:
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            cs = f"{c.real:g}" if c.imag == 0 else f"({c.real:g}{c.imag:+g}j)"
            terms.append(cs if i == 0 else f"{cs}*z" if i == 1 else f"{cs}*z^{i}")
        return " + ".join(reversed(terms)) or "0"


def evaluate(p: Polynomial, z):
    """Horner evaluation; accepts scalars or numpy arrays.

    Overflow is not trapped: the result is inf/nan, which callers read as
    escape.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        acc = p.coeffs[-1] + 0 * z
        for c in reversed(p.coeffs[:-1]):
            acc = acc * z + c
    return acc


def derivative_at(p: Polynomial, z):
    return evaluate(p.derivative(), z)


def _aberth(cs: np.ndarray, z: np.ndarray, tol: float) -> tuple[np.ndarray, bool]:
    d = len(cs) - 1
    dcs = cs[1:] * np.arange(1, d + 1)
    for _ in range(MAX_ITER):
        pv = np.polyval(cs[::-1], z)
        dv = np.polyval(dcs[::-1], z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pv / dv
            step = ratio / (1.0 - ratio * inv.sum(axis=1))
        step = np.where(pv == 0, 0, step)
        if not np.all(np.isfinite(step)):
            return z, False
        z = z - step
        if np.all(np.abs(step) <= tol * (1 + np.abs(z))):
            return z, True
    return z, False


def _durand_kerner(cs: np.ndarray, z: np.ndarray, tol: float) -> tuple[np.ndarray, bool]:
    for _ in range(MAX_ITER):
        pv = np.polyval(cs[::-1], z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        step = pv / diff.prod(axis=1)
        if not np.all(np.isfinite(step)):
            return z, False
        z = z - step
        if np.all(np.abs(step) <= tol * (1 + np.abs(z))):
            return z, True
    return z, False


def _cluster(roots: np.ndarray) -> list[complex]:
    # Replace tight clusters (multiple roots) by their centroid, keeping multiplicity.
    out = np.array(roots, dtype=complex)
    used = np.zeros(len(out), dtype=bool)
    for i in range(len(out)):
        if used[i]:
            continue
        members = [j for j in range(i, len(out)) if not used[j] and abs(out[j] - out[i]) < CLUSTER_TOL]
        if len(members) > 1:
            out[members] = out[members].mean()
        used[members] = True
    return [complex(r) for r in out]


def all_roots(p: Polynomial) -> list[complex]:
    """All d roots of p, repeated according to multiplicity.

    Every returned root r satisfies |p(r)| <= 1e-10 * (1 + max|c_i|), otherwise
    RootFindingError is raised.
    """
    if p.degree < 1:
        raise ValueError("all_roots needs degree >= 1")
    cs = np.array(p.coeffs, dtype=complex)
    nzero = 0
    while nzero < len(cs) - 1 and cs[nzero] == 0:
        nzero += 1
    roots: list[complex] = [0j] * nzero
    red = cs[nzero:] / cs[-1]
    d = len(red) - 1
    if d == 1:
        roots.append(complex(-red[0]))
    elif d > 1:
        radius = 1.0 + np.max(np.abs(red[:-1]))
        angles = 2 * np.pi * np.arange(d) / d + 0.4
        z0 = radius * np.exp(1j * angles)
        z, ok = _aberth(red, z0.copy(), 1e-15)
        if not ok:
            z, ok = _durand_kerner(red, z0.copy(), 1e-15)
        if not ok:
            raise RootFindingError(f"no convergence after {MAX_ITER} iterations for {p}", p)
        # Newton polish on the original coefficients sharpens residuals of simple roots.
        dred = red[1:] * np.arange(1, d + 1)
        for _ in range(3):
            dv = np.polyval(dred[::-1], z)
            pv = np.polyval(red[::-1], z)
            safe = np.abs(dv) > 1e-8
            z = np.where(safe, z - np.where(safe, pv / np.where(safe, dv, 1), 0), z)
        roots.extend(_cluster(z))
    scale = 1e-10 * (1 + max(abs(c) for c in p.coeffs))
    bad = [r for r in roots if not abs(evaluate(p, r)) <= scale]
    if bad:
        raise RootFindingError(f"root residual too large for {p}: {bad}", p)
    return roots


def preimages_of_value(p: Polynomial, v: complex) -> list[complex]:
    """All solutions z of p(z) = v, with multiplicity."""
    return all_roots(p.shifted(v))
