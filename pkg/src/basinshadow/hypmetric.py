"""Hyperbolic distances: closed forms on model domains and two-sided estimates on
rasterized planar domains.

Curvature -1 normalization throughout: the unit-disk density is 2/(1-|z|^2),
so d(0, r) = ln((1+r)/(1-r)).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from .basin import GridDomain, connectivity_report


class Certificate(str, enum.Enum):
    CLOSED_FORM = "CLOSED_FORM"
    PROJECTION = "PROJECTION"
    PUNCTURED_DISK = "PUNCTURED_DISK"
    GEODESIC_GRID = "GEODESIC_GRID"
    PRODUCT_MAX = "PRODUCT_MAX"


LOWER_BOUND_CERTIFICATES = (Certificate.CLOSED_FORM, Certificate.PROJECTION, Certificate.PUNCTURED_DISK)


@dataclass(frozen=True)
class DistanceBound:
    lower: float
    upper: float
    certificate: Certificate
    detail: str = ""

    def __post_init__(self):
        if not (0 <= self.lower <= self.upper):
            raise ValueError(f"invalid bound [{self.lower}, {self.upper}]")
        if self.certificate is Certificate.CLOSED_FORM and self.lower != self.upper:
            raise ValueError("closed-form bounds are exact")

    @classmethod
    def exact(cls, value: float, detail: str = "") -> "DistanceBound":
        return cls(value, value, Certificate.CLOSED_FORM, detail)


class DomainError(ValueError):
    pass


# ---- closed forms ----------------------------------------------------------

def disk_distance(a: complex, b: complex) -> float:
    """Poincare distance ln((1+rho)/(1-rho)) on the unit disk, rho = |(a-b)/(1-a conj(b))|."""
    a, b = complex(a), complex(b)
    if not (abs(a) < 1 and abs(b) < 1):
        raise DomainError("points must lie in the open unit disk")
    if a == b:
        return 0.0
    num = abs(1 - a * b.conjugate())
    diff = abs(a - b)
    # (1+rho)/(1-rho) = (num + diff)^2 / ((1-|a|^2)(1-|b|^2)), stable as rho -> 1
    return 2 * math.log(num + diff) - math.log1p(-abs(a) ** 2) - math.log1p(-abs(b) ** 2)


def _artanh_gap(g: float) -> float:
    """artanh(1 - g) for 0 < g < 2, accurate when g is tiny."""
    return 0.5 * (math.log(2 - g) - math.log(g))


def radial_distance(gap_a: float, gap_b: float) -> float:
    """Disk distance between the real points 1 - gap_a and 1 - gap_b.

    On the real diameter the distance is 2|artanh x - artanh y|; passing the
    gaps keeps full relative precision for points within 1e-16 of the circle.
    """
    if not (0 < gap_a < 2 and 0 < gap_b < 2):
        raise DomainError("gaps must lie in (0, 2)")
    return abs(2 * (_artanh_gap(gap_a) - _artanh_gap(gap_b)))


def polydisc_distance(p: tuple[complex, complex], q: tuple[complex, complex]) -> float:
    return max(disk_distance(p[0], q[0]), disk_distance(p[1], q[1]))


def punctured_lower_bound(x: complex, y: complex, R: float) -> float:
    """| ln|ln(|y|/R)| - ln|ln(|x|/R)| |, a lower bound for the Kobayashi distance
    of the punctured disk 0 < |z| < R (exact only for aligned arguments)."""
    ax, ay = abs(complex(x)), abs(complex(y))
    return punctured_lower_bound_log(math.log(ax) if ax > 0 else -math.inf,
                                     math.log(ay) if ay > 0 else -math.inf, R)


def punctured_lower_bound_log(log_abs_x: float, log_abs_y: float, R: float) -> float:
    """:func:`punctured_lower_bound` from log-moduli (no underflow for tiny points)."""
    if not R > 1:
        raise DomainError("R must exceed 1")
    lr = math.log(R)
    for v in (log_abs_x, log_abs_y):
        if not (-math.inf < v < lr):
            raise DomainError("points must satisfy 0 < |x| < R")
    return abs(math.log(lr - log_abs_y) - math.log(lr - log_abs_x))


def product_max_distance(b1: DistanceBound, b2: DistanceBound) -> DistanceBound:
    """Bounds for max(d1, d2), the Kobayashi distance of a product domain."""
    return DistanceBound(max(b1.lower, b2.lower), max(b1.upper, b2.upper), Certificate.PRODUCT_MAX,
                         f"max({b1.certificate.value},{b2.certificate.value})")


# ---- grid geodesics --------------------------------------------------------

_STEPS = ((0, 1), (1, 0), (1, 1), (1, -1))


class GeodesicGraph:
    """8-neighbour graph over the member cells of a grid.

    Edge weight is the Euclidean step length times the mean of 1/boundary_dist
    at its endpoints, so shortest paths approximate the quasihyperbolic
    distance.
    """

    def __init__(self, d: GridDomain):
        if d.boundary_dist is None:
            raise ValueError("grid has no boundary distance field")
        self.grid = d
        m = d.membership
        n = m.shape[0]
        self.index = np.full(m.shape, -1, dtype=np.int64)
        self.index[m] = np.arange(int(m.sum()))
        inv = np.zeros(m.shape)
        inv[m] = 1.0 / d.boundary_dist[m]
        self.density = inv
        rows, cols, wts = [], [], []
        for di, dj in _STEPS:
            length = math.hypot(di * d.dy, dj * d.dx)
            i0, i1 = 0, n - di
            j0, j1 = max(0, -dj), n - max(0, dj)
            a = (slice(i0, i1), slice(j0, j1))
            b = (slice(i0 + di, i1 + di), slice(j0 + dj, j1 + dj))
            both = m[a] & m[b]
            rows.append(self.index[a][both])
            cols.append(self.index[b][both])
            wts.append(length * 0.5 * (inv[a][both] + inv[b][both]))
        size = int(m.sum())
        self.matrix = sparse.csr_matrix(
            (np.concatenate(wts), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))
        self.simply_connected = connectivity_report(d).hole_count == 0

    def node_of(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        iy, ix = self.grid.cell_of(z)
        n = self.grid.resolution
        ok = (iy >= 0) & (iy < n) & (ix >= 0) & (ix < n)
        out = np.full(z.shape, -1, dtype=np.int64)
        out[ok] = self.index[iy[ok], ix[ok]]
        return out

    def snap_cost(self, z) -> np.ndarray:
        """Quasihyperbolic length of the segment from z to its cell centre (density at the centre)."""
        z = np.asarray(z, dtype=complex)
        iy, ix = self.grid.cell_of(z)
        centres = self.grid.box[0] + (ix + 0.5) * self.grid.dx + 1j * (self.grid.box[2] + (iy + 0.5) * self.grid.dy)
        return np.abs(z - centres) * self.density[iy, ix]

    def j_lower(self, p: complex, targets) -> np.ndarray:
        """log(1 + |p - q| / min(delta(p), delta(q))), a lower bound for the quasihyperbolic distance.

        delta is overestimated by the distance from the cell centre to the
        nearest non-member centre plus the offset from the centre, which keeps
        the bound valid.
        """
        pts = np.concatenate([[complex(p)], np.atleast_1d(np.asarray(targets, dtype=complex))])
        iy, ix = self.grid.cell_of(pts)
        centres = self.grid.box[0] + (ix + 0.5) * self.grid.dx + 1j * (self.grid.box[2] + (iy + 0.5) * self.grid.dy)
        dmax = self.grid.boundary_dist[iy, ix] + np.abs(pts - centres)
        return np.log1p(np.abs(pts[1:] - pts[0]) / np.minimum(dmax[0], dmax[1:]))

    def field(self, sources: Iterable[int], limit: float = np.inf) -> np.ndarray:
        """Shortest-path distance from the nearest source to every node."""
        src = np.unique(np.asarray(list(sources), dtype=np.int64))
        if src.size == 0:
            return np.full(self.matrix.shape[0], np.inf)
        return dijkstra(self.matrix, directed=False, indices=src, min_only=True, limit=limit)

    def field_on_grid(self, values: np.ndarray) -> np.ndarray:
        out = np.full(self.index.shape, np.inf)
        m = self.index >= 0
        out[m] = values[self.index[m]]
        return out


def geodesic_graph(d: GridDomain) -> GeodesicGraph:
    g = getattr(d, "_geodesic_graph", None)
    if g is None or g.grid is not d:
        g = GeodesicGraph(d)
        d._geodesic_graph = g
    return g


def koebe_bound(q: float, simply_connected: bool, detail: str = "") -> DistanceBound:
    """Hyperbolic-distance interval from a quasihyperbolic length q.

    On simply connected domains (1/2)(1/delta) <= lambda <= 2/delta; elsewhere
    only the upper bound survives.
    """
    lower = 0.5 * q if simply_connected else 0.0
    return DistanceBound(lower, 2.0 * q, Certificate.GEODESIC_GRID, detail)


def _segment_length(g: GeodesicGraph, p: complex, q: complex) -> float:
    # quasihyperbolic length of the straight segment; only used to cap the search
    d = g.grid
    n = max(2, int(abs(q - p) / min(d.dx, d.dy)) * 2 + 2)
    pts = p + (q - p) * np.linspace(0.0, 1.0, n)
    if not np.all(d.contains(pts)):
        return math.inf
    iy, ix = d.cell_of(pts)
    dens = g.density[iy, ix]
    return float(np.trapezoid(dens, dx=abs(q - p) / (n - 1)))


def grid_geodesic_distance(d: GridDomain, p: complex, q: complex) -> DistanceBound:
    """Two-sided estimate of the hyperbolic distance between p and q on a grid domain."""
    if complex(p) == complex(q):
        if not d.contains(p):
            raise DomainError(f"{p} is not a member of the grid")
        return DistanceBound(0.0, 0.0, Certificate.GEODESIC_GRID)
    g = geodesic_graph(d)
    np_, nq = g.node_of([p, q])
    if np_ < 0 or nq < 0:
        raise DomainError(f"{p if np_ < 0 else q} is not a member of the grid")
    limit = 1.1 * _segment_length(g, complex(p), complex(q)) + 1e-12
    path = float(dijkstra(g.matrix, directed=False, indices=int(np_), limit=limit)[nq])
    if not math.isfinite(path):
        path = float(dijkstra(g.matrix, directed=False, indices=int(np_))[nq])
    snap = float(g.snap_cost(np.array([p, q])).sum())
    lower_q = max(0.0, path - snap, float(g.j_lower(p, [q])[0]))
    upper_q = path + snap
    b_lo = koebe_bound(lower_q, g.simply_connected)
    return DistanceBound(b_lo.lower, 2.0 * upper_q, Certificate.GEODESIC_GRID,
                         "" if g.simply_connected else "upper only: domain has holes")


def refined_geodesic_distance(build: Callable[[int], GridDomain], p: complex, q: complex,
                              resolution: int = 128, max_resolution: int = 2048,
                              rtol: float = 0.02) -> tuple[DistanceBound, int]:
    """Double the resolution until the upper bound moves by less than ``rtol``."""
    prev: Optional[DistanceBound] = None
    res = resolution
    while True:
        cur = grid_geodesic_distance(build(res), p, q)
        if prev is not None and abs(cur.upper - prev.upper) <= rtol * max(prev.upper, 1e-300):
            return cur, res
        if res * 2 > max_resolution:
            return cur, res
        prev, res = cur, res * 2


def geodesic_bounds_from(d: GridDomain, p: complex, targets) -> list[DistanceBound]:
    """:func:`grid_geodesic_distance` from p to many targets with a single shortest-path sweep."""
    g = geodesic_graph(d)
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    src = g.node_of([p])[0]
    nodes = g.node_of(targets)
    if src < 0 or np.any(nodes < 0):
        raise DomainError("points must be members of the grid")
    path = dijkstra(g.matrix, directed=False, indices=int(src))[nodes]
    snap = g.snap_cost([p])[0] + g.snap_cost(targets)
    jl = g.j_lower(p, targets)
    out = []
    for t, q, s, j in zip(targets, path, snap, jl):
        if t == complex(p):
            out.append(DistanceBound(0.0, 0.0, Certificate.GEODESIC_GRID))
            continue
        lo = koebe_bound(max(0.0, float(q - s), float(j)), g.simply_connected).lower
        out.append(DistanceBound(lo, 2.0 * float(q + s), Certificate.GEODESIC_GRID))
    return out


def cell_slack(d: GridDomain, points) -> float:
    """Hyperbolic length of one cell diagonal at the densest of ``points`` (upper-bound scale)."""
    g = geodesic_graph(d)
    iy, ix = d.cell_of(np.asarray(points, dtype=complex))
    return 2.0 * d.cell_diagonal * float(np.max(g.density[iy, ix]))
