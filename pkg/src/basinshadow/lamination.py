"""Backward transport of boundary graphs for the skew products (z^2, w^2 + a z) and
(a z + z^2, w^2 + c w + b z), their limit leaves, the region inequalities behind
the invariant domains, and punctured-disk certificates through h = w - f(z).

A graph family is stored as the chain of transports applied to a constant start
graph, so any generation can be evaluated at arbitrary points by running the
chain down to the start value.  Square-root branches are pinned at z = 0 and
continued by picking, at every point, the root closer to the value at 0; this
is the continuous branch as long as the radicand stays in the open half-plane
around its value at 0, which is checked on every evaluation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .basin import Membership, classify_pairs
from .dynsys import SkewMap
from .hypmetric import Certificate, DistanceBound, DomainError, punctured_lower_bound_log

COLLAPSE_TOL = 1e-9
N_RADII = 64
N_ANGLES = 256
LIMIT_DEPTH = 64
MAX_SHEETS = 2 ** 10
START_VALUE = 2.0 / 3.0


class LaminationError(ArithmeticError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class Transport:
    """One backward step.  kind is "sqrt" (w^2 + a z) or "quadratic" (w^2 + c w + b z over a z + z^2)."""

    kind: str
    a: complex
    b: complex = 0j
    c: complex = 0j
    branch: str = "POSITIVE_AT_ZERO"

    def inner(self, z):
        return z * z if self.kind == "sqrt" else z * z + self.a * z

    def radicand(self, z, f_inner):
        if self.kind == "sqrt":
            return f_inner - self.a * z
        return self.c * self.c - 4 * self.b * z + 4 * f_inner

    def finish(self, s):
        if self.kind == "sqrt":
            return s
        sign = 1 if self.branch == "PLUS" else -1
        return (-self.c + sign * s) / 2


def polar_samples(radius: float, n_radii: int = N_RADII, n_angles: int = N_ANGLES,
                  inner_ratio: float = 1e-3) -> np.ndarray:
    """Centre plus n_radii geometric circles from radius*inner_ratio to radius, n_angles each.

    Layout: index 0 is the centre, then rows of n_angles points, innermost first.
    """
    radii = radius * np.geomspace(inner_ratio, 1.0, n_radii)
    ang = 2 * np.pi * np.arange(n_angles) / n_angles
    ring = (radii[:, None] * np.exp(1j * ang)[None, :]).ravel()
    return np.concatenate([[0j], ring])


@dataclass
class GraphFamily:
    """Sampled graphs w = f_n(z), n = 0..generation, over a disk of radius ``radius``."""

    z_samples: np.ndarray
    values: list[np.ndarray]
    branch_choice: list[str]
    base: complex
    steps: list[Transport] = field(default_factory=list)
    radius: float = 1.0
    theta: float = 0.0

    @property
    def generation(self) -> int:
        return len(self.steps)

    @property
    def current(self) -> np.ndarray:
        return self.values[-1]

    def origin_values(self, n: Optional[int] = None) -> list[complex]:
        """f_0(0), ..., f_n(0); each square root here is the principal one (the pinned branch)."""
        n = self.generation if n is None else n
        out = [complex(self.base)]
        for st in self.steps[:n]:
            s = np.sqrt(complex(st.radicand(0j, out[-1])))
            out.append(complex(st.finish(s)))
        return out

    def evaluate(self, z, n: Optional[int] = None, check: bool = True):
        """f_n(z) at arbitrary points by running the transport chain down to the start graph."""
        n = self.generation if n is None else n
        z = np.asarray(z, dtype=complex)
        chain = [z]
        for st in reversed(self.steps[:n]):
            chain.append(st.inner(chain[-1]))
        v = np.full(z.shape, complex(self.base))
        origin = self.origin_values(n)
        for k in range(1, n + 1):
            st = self.steps[k - 1]
            pts = chain[n - k]
            d = st.radicand(pts, v)
            d0 = st.radicand(0j, origin[k - 1])
            if check and np.any((d * np.conj(d0)).real <= 0):
                raise LaminationError("BRANCH", f"radicand leaves the half-plane of its value at 0 (generation {k})")
            s = np.sqrt(d)
            s0 = np.sqrt(complex(d0))
            s = np.where((s * np.conj(s0)).real < 0, -s, s)
            v = st.finish(s)
        return v

    def with_step(self, st: Transport, values: np.ndarray) -> "GraphFamily":
        return replace(self, values=self.values + [values], branch_choice=self.branch_choice + [st.branch],
                       steps=self.steps + [st])


def start_family(radius: float = 1.0, value: complex = START_VALUE, theta: float = 0.0,
                 n_radii: int = N_RADII, n_angles: int = N_ANGLES) -> GraphFamily:
    """Constant graph w = value * e^{i theta} sampled on a polar grid."""
    z = polar_samples(radius, n_radii, n_angles)
    base = complex(value) * complex(math.cos(theta), math.sin(theta))
    return GraphFamily(z, [np.full(z.shape, base)], ["START"], base, [], radius, theta)


def transport_sqrt(f: GraphFamily, a: complex) -> GraphFamily:
    """f_{n+1}(z) = sqrt(f_n(z^2) - a z), positive at z = 0."""
    if any(st.kind != "sqrt" for st in f.steps):
        raise ValueError("family was built by a different transport")
    st = Transport("sqrt", complex(a))
    rad = st.radicand(f.z_samples, f.evaluate(st.inner(f.z_samples)))
    if np.min(np.abs(rad)) < COLLAPSE_TOL:
        raise LaminationError("ZERO_CROSSING", f"f_n(z^2) - a z vanishes at generation {f.generation + 1}")
    if not f.origin_values()[-1].real > 0 or abs(f.origin_values()[-1].imag) > 0:
        raise LaminationError("BRANCH", "f_n(0) is not real and positive")
    nxt = f.with_step(st, np.empty(0))
    nxt.values[-1] = nxt.evaluate(f.z_samples)
    return nxt


def transport_quadratic(f: GraphFamily, a: complex, b: complex, c: complex) -> tuple[GraphFamily, GraphFamily]:
    """Both preimage graphs W = (-c +- sqrt(c^2 - 4 b Z + 4 f_j(Z^2 + a Z))) / 2."""
    if any(st.kind != "quadratic" for st in f.steps):
        raise ValueError("family was built by a different transport")
    out = []
    for branch in ("PLUS", "MINUS"):
        st = Transport("quadratic", complex(a), complex(b), complex(c), branch)
        if branch == "PLUS":
            disc = st.radicand(f.z_samples, f.evaluate(st.inner(f.z_samples)))
            if np.min(np.abs(disc)) < COLLAPSE_TOL:
                raise LaminationError("DISCRIMINANT_COLLAPSE",
                                      f"discriminant vanishes at generation {f.generation + 1}")
        nxt = f.with_step(st, np.empty(0))
        nxt.values[-1] = nxt.evaluate(f.z_samples)
        out.append(nxt)
    return out[0], out[1]


def discriminant(f: GraphFamily, a: complex, b: complex, c: complex) -> np.ndarray:
    st = Transport("quadratic", complex(a), complex(b), complex(c))
    return st.radicand(f.z_samples, f.evaluate(st.inner(f.z_samples)))


def iterate_sqrt(a: complex, generations: int, radius: float = 0.99, **kw) -> GraphFamily:
    f = start_family(radius, **kw)
    for _ in range(generations):
        f = transport_sqrt(f, a)
    return f


def iterate_quadratic(a: complex, b: complex, c: complex, generations: int, radius: float = 0.85,
                      branches: Union[str, Sequence[str]] = "PLUS", theta: float = 0.0, **kw) -> GraphFamily:
    """Follow one branch per generation (a single tag repeats)."""
    tags = [branches] * generations if isinstance(branches, str) else list(branches)
    f = start_family(radius, theta=theta, **kw)
    for tag in tags:
        plus, minus = transport_quadratic(f, a, b, c)
        f = plus if tag == "PLUS" else minus
    return f


@dataclass
class LimitReport:
    family: GraphFamily
    movements: list[float]
    converged: bool


def limit_graph(fs: Union[GraphFamily, Sequence[GraphFamily]], tol: float) -> LimitReport:
    """Last generation once consecutive generations move by less than ``tol`` (max over samples)."""
    if isinstance(fs, GraphFamily):
        fam, vals = fs, fs.values
    else:
        fam, vals = fs[-1], [g.current for g in fs]
    if len(vals) < 3:
        raise ValueError("need at least three generations")
    moves = [float(np.max(np.abs(v1 - v0))) for v0, v1 in zip(vals, vals[1:])]
    if moves[-1] < tol:
        return LimitReport(fam, moves, True)
    tail = moves[-5:]
    if len(tail) == 5 and all(y >= x for x, y in zip(tail, tail[1:])):
        raise LaminationError("NO_CONVERGENCE", f"movement not decreasing: {tail}")
    raise LaminationError("NO_CONVERGENCE", f"last movement {moves[-1]:.3g} above tol {tol:.3g}")


def limit_family(template: GraphFamily, depth: int = LIMIT_DEPTH) -> GraphFamily:
    """The limit leaf, evaluated from its functional equation.

    The chain of ``template``'s last transport is repeated ``depth`` times on
    top of the constant seed equal to the fixed value of the map at z = 0
    (1 for the square-root family, 1 - c for the quadratic PLUS branch).  Inner
    points z^(2^k) or P^k(z) collapse to 0 long before the seed is reached.
    """
    if not template.steps:
        raise ValueError("template needs at least one transport")
    st = template.steps[-1]
    if st.kind == "sqrt":
        seed = 1.0 + 0j
    elif st.branch == "PLUS":
        seed = 1.0 - st.c
    else:
        raise ValueError("only the PLUS leaf has a fixed value at 0")
    fam = GraphFamily(template.z_samples, [np.full(template.z_samples.shape, seed)], ["SEED"], seed,
                      [], template.radius, template.theta)
    fam.steps = [st] * depth
    fam.branch_choice = ["SEED"] + [st.branch] * depth
    fam.values = fam.values + [fam.evaluate(template.z_samples)]
    return fam


# ---- punctured-disk certificate ------------------------------------------------------

@dataclass(frozen=True)
class LeafOffset:
    """The point (z, f(z) + offset): h = offset exactly, even below double spacing near f(z)."""

    z: complex
    offset: complex


Point = Union[tuple, LeafOffset]


def leaf_probe(z: complex, delta: float) -> LeafOffset:
    """(z, f(z) - delta); at z = 0 on the square-root leaf this is (0, 1 - delta)."""
    return LeafOffset(complex(z), complex(-delta))


def h_value(fam: GraphFamily, p: Point) -> complex:
    if isinstance(p, LeafOffset):
        return p.offset
    z, w = complex(p[0]), complex(p[1])
    if abs(z) > fam.radius:
        raise DomainError(f"z = {z} is outside the leaf's disk")
    return w - complex(fam.evaluate(np.array([z]))[0])


def _log_abs(h: complex) -> float:
    # log|h| without forming |h| for offsets near the double underflow
    return math.log(abs(h)) if h != 0 else -math.inf


def punctured_certificate(fam: GraphFamily, p: Point, q: Point, R: float = 2.0) -> DistanceBound:
    """Lower bound on the Kobayashi distance from h = w - f(z) into the punctured disk of radius R.

    R must bound |h| over the domain; :func:`h_radius_check` verifies that on
    samples.  The upper bound is unknown (+inf).
    """
    hp, hq = h_value(fam, p), h_value(fam, q)
    if hp == 0 or hq == 0:
        raise DomainError("point lies on the leaf (h = 0)")
    if abs(hp) >= R or abs(hq) >= R:
        raise DomainError("|h| must stay below R")
    if hp == hq:
        return DistanceBound(0.0, math.inf, Certificate.PUNCTURED_DISK)
    lo = punctured_lower_bound_log(_log_abs(hp), _log_abs(hq), R)
    return DistanceBound(lo, math.inf, Certificate.PUNCTURED_DISK, f"R={R:g}")


def sample_basin(fmap, z_radius: float, samples: int = 20000, w_box: float = 1.6, max_iter: int = 400,
                 seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Random basin points with |z| <= z_radius and w in a square of half-width w_box."""
    rng = np.random.default_rng(seed)
    r = z_radius * np.sqrt(rng.uniform(0, 1, samples))
    z = r * np.exp(2j * np.pi * rng.uniform(0, 1, samples))
    w = rng.uniform(-w_box, w_box, samples) + 1j * rng.uniform(-w_box, w_box, samples)
    keep = classify_pairs(fmap, z, w, max_iter) == Membership.CONVERGES
    return z[keep], w[keep]


def h_radius_check(fam: GraphFamily, fmap: SkewMap, R: float, samples: int = 20000, w_box: float = 1.6,
                   max_iter: int = 400, seed: int = 0, z_radius: Optional[float] = None) -> tuple[bool, float]:
    """Sample basin points with |z| <= z_radius (default the leaf radius) and report whether sup|h| < R."""
    z, w = sample_basin(fmap, fam.radius if z_radius is None else z_radius, samples, w_box, max_iter, seed)
    if z.size == 0:
        return True, 0.0
    sup = float(np.max(np.abs(w - fam.evaluate(z))))
    return sup < R, sup


# ---- general a: product over sheets ---------------------------------------------------------

def sheet_values(a: complex, n: int, z, base=START_VALUE) -> np.ndarray:
    """Values of all 2^n sign choices of the square-root chain at z, shape (2^n, len(z)).

    ``base`` is a constant or a callable evaluated at z^(2^n).  Row i < 2^(n-1)
    takes the principal root at the last step; row 0 takes it at every step.
    """
    if 2 ** n > MAX_SHEETS:
        raise ValueError(f"sheet count capped at {MAX_SHEETS}")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    chain = [z]
    for _ in range(n):
        chain.append(chain[-1] ** 2)
    bottom = base(chain[-1]) if callable(base) else np.full(z.shape, complex(base))
    vals = np.asarray(bottom, dtype=complex)[None, :]
    for k in range(1, n + 1):
        pts = chain[n - k]
        s = np.sqrt(vals - a * pts)
        vals = np.concatenate([s, -s])
    return vals


def log_abs_sheet_product(a: complex, n: int, p: Point, base=START_VALUE) -> float:
    """log|prod_i (w - g_i(z))|; a LeafOffset is read relative to sheet 0."""
    if isinstance(p, LeafOffset):
        g = sheet_values(a, n, [p.z], base)[:, 0]
        if p.offset == 0:
            return -math.inf
        w = g[0] + p.offset
        rest = w - g[1:]
        return _log_abs(p.offset) + float(np.sum(np.log(np.abs(rest))))
    z, w = complex(p[0]), complex(p[1])
    g = sheet_values(a, n, [z], base)[:, 0]
    diff = np.abs(w - g)
    if np.any(diff == 0):
        return -math.inf
    return float(np.sum(np.log(diff)))


def product_certificate(a: complex, n: int, p: Point, q: Point, R: float, eta: float,
                        base=START_VALUE) -> DistanceBound:
    """Punctured-disk bound through H(z, w) = prod_i (w - g_i(z)) over all sheets of generation n.

    Valid on |z| < eta^(1/2^n) when the sheets lie outside the domain (limit
    sheets, i.e. ``base`` the limit leaf); R must bound |H| there.
    """
    zmax = eta ** (1.0 / 2 ** n)
    logs = []
    for pt in (p, q):
        z = pt.z if isinstance(pt, LeafOffset) else complex(pt[0])
        if abs(z) >= zmax:
            raise DomainError(f"|z| must stay below eta^(1/2^n) = {zmax:.6g}")
        lg = log_abs_sheet_product(a, n, pt, base)
        if lg == -math.inf:
            raise DomainError("point lies on a sheet")
        logs.append(lg)
    if max(logs) >= math.log(R):
        raise DomainError("|H| must stay below R")
    return DistanceBound(punctured_lower_bound_log(logs[0], logs[1], R), math.inf, Certificate.PUNCTURED_DISK,
                         f"sheets={2 ** n}")


# ---- region inequalities -------------------------------------------------------------------

@dataclass
class RegionCheck:
    name: str
    passed: bool
    worst_margin: float
    samples: int


@dataclass
class RegionReport:
    checks: list[RegionCheck]
    hierarchy: dict[str, bool]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _disk(rng, n, r0, r1):
    r = np.sqrt(rng.uniform(r0 ** 2, r1 ** 2, n))
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, n))


def bidisc_check(a: complex, sample_count: int = 100_000, rng=None) -> RegionCheck:
    """|w^2 + a z| < 3/4 on |z| < 1, |w| < 3/4: the bidisc lies in the basin of (z^2, w^2 + a z)."""
    rng = np.random.default_rng(0) if rng is None else rng
    z, w = _disk(rng, sample_count, 0, 1), _disk(rng, sample_count, 0, 0.75)
    m = 0.75 - np.abs(w ** 2 + a * z)
    return RegionCheck("(i) bidisc invariance", bool(m.min() > 0), float(m.min()), sample_count)


def verify_region_lemmas(a: complex, b: complex, c: complex, sample_count: int = 100_000,
                         seed: int = 0, a_square: Optional[complex] = None) -> RegionReport:
    """Sample the four inequalities behind the invariant regions; margins are slack of the strict bound.

    (i)   |w^2 + a' z| < 3/4 on |z| < 1, |w| < 3/4 (a' = a_square, the square family's parameter);
    (ii)  |w^2 + c w + b z| < 2/3 on |z| < 2, |w| < 2/3;
    (iii) |w^2 + c w + 2b| < |w|(|w| + |c| + 1/2) < 7/8 |w| on 4|b| < |w| < 1/4;
    (iv)  |2w + c| >= 2|w| - |c| > 7/6 on 2/3 < |w| < 2.
    """
    rng = np.random.default_rng(seed)
    n = sample_count
    a1 = a if a_square is None else a_square
    checks = []

    checks.append(bidisc_check(a1, n, rng))

    z, w = _disk(rng, n, 0, 2), _disk(rng, n, 0, 2 / 3)
    m = 2 / 3 - np.abs(w ** 2 + c * w + b * z)
    checks.append(RegionCheck("(ii) |w|<2/3 invariance", bool(m.min() > 0), float(m.min()), n))

    if 4 * abs(b) < 0.25:
        w = _disk(rng, n, 4 * abs(b), 0.25)
        aw = np.abs(w)
        mid = aw * (aw + abs(c) + 0.5)
        m = np.minimum(mid - np.abs(w ** 2 + c * w + 2 * b), 7 / 8 * aw - mid)
        checks.append(RegionCheck("(iii) w-shrinkage", bool(m.min() > 0), float(m.min()), n))
    else:
        # the annulus is empty, so the shrinkage region does not exist
        checks.append(RegionCheck("(iii) w-shrinkage", False, 0.25 - 4 * abs(b), 0))

    w = _disk(rng, n, 2 / 3, 2)
    aw = np.abs(w)
    # the triangle-inequality step may touch 0 up to rounding
    tri = np.abs(2 * w + c) - (2 * aw - abs(c))
    exp_margin = 2 * aw - abs(c) - 7 / 6
    checks.append(RegionCheck("(iv) expansion", bool(tri.min() >= -1e-12 and exp_margin.min() > 0),
                              float(exp_margin.min()), n))

    fm = SkewMap.w2_cw_bz(a, b, c, warn=False)
    return RegionReport(checks, fm.hierarchy_flags())


@dataclass
class ShrinkageReport:
    min_abs_w: float
    empirical_L: int
    ratio_tail: float
    orbits: int


def w_shrinkage_report(a: complex, b: complex, c: complex, orbits: int = 200, steps: int = 60,
                       z_radius: float = 0.8, seed: int = 0) -> ShrinkageReport:
    """Iterate orbits started in {|z| < z_radius, |w| < 2/3}.

    ``empirical_L`` is the largest number of steps any orbit needed before
    |w| < 4|b|; ``ratio_tail`` is the final |w_k| / |z_k|, to compare with
    |b / (a - c)|, the slope of the invariant direction at the origin.
    """
    fm = SkewMap.w2_cw_bz(a, b, c, warn=False)
    rng = np.random.default_rng(seed)
    z, w = _disk(rng, orbits, 0, z_radius), _disk(rng, orbits, 0, 2 / 3)
    min_w = np.inf
    first = np.full(orbits, -1)
    for k in range(1, steps + 1):
        z, w = fm(z, w)
        min_w = min(min_w, float(np.abs(w).min()))
        hit = (first < 0) & (np.abs(w) < 4 * abs(b))
        first[hit] = k
    ratio = float(np.median(np.abs(w) / np.maximum(np.abs(z), 1e-300)))
    return ShrinkageReport(min_w, int(first.max()) if np.all(first > 0) else -1, ratio, orbits)


# ---- export -------------------------------------------------------------------------------

LEAF_CSV_COLUMNS = ["generation", "z_re", "z_im", "f_re", "f_im", "branch"]


def write_leaf_csv(fam: GraphFamily, path, generations: Optional[Sequence[int]] = None) -> Path:
    path = Path(path)
    gens = range(len(fam.values)) if generations is None else generations
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(LEAF_CSV_COLUMNS)
        for g in gens:
            for z, v in zip(fam.z_samples, fam.values[g]):
                wr.writerow([g, repr(z.real), repr(z.imag), repr(v.real), repr(v.imag), fam.branch_choice[g]])
    return path
