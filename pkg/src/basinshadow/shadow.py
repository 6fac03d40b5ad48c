"""Backward-orbit trees, the shadowing statistic and the certificate engines for
product maps.

The shadowing statistic of a probe (z0, w0) at depth K is the smallest
Kobayashi distance from the probe to a point of F^{-K}(target).  For product
maps the distance is the max of the coordinate distances, so the minimum over
node pairs splits into per-coordinate minima.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .basin import GridDomain
from .dynsys import FixedPointKind, Map, ProductMap, classify_fixed_point, inverse_step
from .hypmetric import (
    Certificate,
    DistanceBound,
    DomainError,
    GeodesicGraph,
    geodesic_graph,
    radial_distance,
)
from .polycore import Polynomial, RootFindingError, evaluate, preimages_of_value

DEDUP_TOL = 1e-9


@dataclass
class PreimageTree:
    """Deduplicated backward orbit of ``root``; ``parents[i]`` is -1 for the root."""

    root: complex
    points: np.ndarray
    depths: np.ndarray
    parents: np.ndarray
    dedup_tol: float = DEDUP_TOL
    raw_counts: list[int] = field(default_factory=list)

    @property
    def max_depth(self) -> int:
        return int(self.depths.max()) if len(self.depths) else 0

    def __len__(self) -> int:
        return len(self.points)

    def nodes(self) -> list[tuple[complex, int, int]]:
        return [(complex(z), int(k), int(p)) for z, k, p in zip(self.points, self.depths, self.parents)]

    def at_depth(self, k: int) -> np.ndarray:
        return self.points[self.depths == k]


def build_tree_1d(p: Polynomial, root: complex, K: int, domain: Optional[GridDomain] = None,
                  dedup_tol: float = DEDUP_TOL) -> PreimageTree:
    """Breadth-first backward expansion of ``root`` to depth K.

    Preimages outside ``domain`` are discarded; a preimage within ``dedup_tol``
    of any node already in the tree is dropped, so a fixed root appears once.
    ``raw_counts[k]`` records the number of preimages generated at depth k
    before deduplication and pruning.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    root = complex(root)
    if domain is not None and not domain.contains(root):
        raise DomainError(f"root {root} is not a member of the domain")
    pts, depths, parents = [root], [0], [-1]
    raw = [1]
    frontier = [0]
    for k in range(1, K + 1):
        new = []
        cand, cand_par = [], []
        for i in frontier:
            try:
                pre = preimages_of_value(p, pts[i])
            except RootFindingError as exc:
                raise RootFindingError(f"depth {k}, node {pts[i]}: {exc}", p) from exc
            cand.extend(pre)
            cand_par.extend([i] * len(pre))
        raw.append(len(cand))
        if not cand:
            break
        cand_arr = np.array(cand, dtype=complex)
        keep = np.ones(len(cand), dtype=bool)
        if domain is not None:
            keep &= np.asarray(domain.contains(cand_arr), dtype=bool)
        existing = np.array(pts, dtype=complex)
        for j in np.flatnonzero(keep):
            z = cand_arr[j]
            if np.any(np.abs(existing - z) < dedup_tol):
                continue
            if new and np.any(np.abs(np.array([pts[n] for n in new]) - z) < dedup_tol):
                continue
            pts.append(complex(z))
            depths.append(k)
            parents.append(cand_par[j])
            new.append(len(pts) - 1)
        frontier = new
        if not frontier:
            break
    return PreimageTree(root, np.array(pts, dtype=complex), np.array(depths), np.array(parents), dedup_tol, raw)


@dataclass
class SpaceTree:
    """Backward orbit of a point of C^2; ``points`` has shape (n, 2)."""

    root: tuple[complex, complex]
    points: np.ndarray
    depths: np.ndarray
    parents: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


def build_tree_2d(fmap: Map, root: tuple[complex, complex], K: int, dedup_tol: float = DEDUP_TOL) -> SpaceTree:
    """Breadth-first F^{-k}(root), k <= K; points within ``dedup_tol`` (Euclidean in C^2) are merged."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    pts = [(complex(root[0]), complex(root[1]))]
    depths, parents = [0], [-1]
    frontier = [0]
    for k in range(1, K + 1):
        cand, par = [], []
        for i in frontier:
            pre = inverse_step(fmap, pts[i])
            cand.extend(pre)
            par.extend([i] * len(pre))
        if not cand:
            break
        known = cKDTree(_as_r4(np.array(pts)))
        c4 = _as_r4(np.array(cand))
        dup = np.isfinite(known.query(c4, distance_upper_bound=dedup_tol)[0])
        # merge coincident candidates of the same depth, keeping the first
        for i, j in sorted(cKDTree(c4).query_pairs(dedup_tol)):
            if not dup[i]:
                dup[j] = True
        frontier = []
        for j in np.flatnonzero(~dup):
            pts.append(cand[j])
            depths.append(k)
            parents.append(par[j])
            frontier.append(len(pts) - 1)
    return SpaceTree(pts[0], np.array(pts, dtype=complex), np.array(depths), np.array(parents))


def _as_r4(p: np.ndarray) -> np.ndarray:
    return np.column_stack([p[:, 0].real, p[:, 0].imag, p[:, 1].real, p[:, 1].imag])


# ---- geodesic fields from trees -------------------------------------------------

@dataclass
class TreeField:
    """Quasihyperbolic distance from every member cell to the nodes of each depth.

    ``upper[k]`` includes the snapping cost of the nodes, ``lower[k]`` is the
    plain shortest-path length minus the largest node snapping cost.
    """

    graph: GeodesicGraph
    upper: np.ndarray
    lower: np.ndarray


def _multi_source(graph: GeodesicGraph, nodes: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    n = graph.matrix.shape[0]
    if nodes.size == 0:
        return np.full(n, np.inf)
    # virtual source joined to every tree cell with its snapping cost as edge weight
    extra = sparse.csr_matrix((np.maximum(offsets, 1e-300), (np.full(nodes.size, n), nodes)), shape=(n + 1, n + 1))
    big = sparse.bmat([[graph.matrix, None], [None, sparse.csr_matrix((1, 1))]], format="csr") + extra
    return dijkstra(big, directed=False, indices=n)[:n]


def tree_field(tree: PreimageTree, grid: GridDomain) -> TreeField:
    g = geodesic_graph(grid)
    nodes = g.node_of(tree.points)
    inside = nodes >= 0
    snaps = np.zeros(len(tree))
    snaps[inside] = g.snap_cost(tree.points[inside])
    K = tree.max_depth
    upper = np.empty((K + 1, g.matrix.shape[0]))
    lower = np.empty_like(upper)
    for k in range(K + 1):
        sel = inside & (tree.depths == k)
        upper[k] = _multi_source(g, nodes[sel], snaps[sel])
        raw = _multi_source(g, nodes[sel], np.zeros(int(sel.sum())))
        lower[k] = np.maximum(0.0, raw - (snaps[sel].max() if sel.any() else 0.0))
    return TreeField(g, upper, lower)


def _is_fixed(p: Polynomial, z: complex) -> bool:
    return abs(evaluate(p, z) - z) <= 1e-12


def _coordinate_levels(tf: TreeField, tree: PreimageTree, probes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-level (upper, lower) quasihyperbolic lengths at the probes: shape (K+1, n)."""
    g = tf.graph
    nodes = g.node_of(probes)
    if np.any(nodes < 0):
        bad = probes[nodes < 0][0]
        raise DomainError(f"probe coordinate {bad} is not a member of the grid")
    snap = g.snap_cost(probes)
    up = tf.upper[:, nodes] + snap
    lo = np.maximum(0.0, tf.lower[:, nodes] - snap)
    # a probe sitting on a node is at distance 0 from that depth
    gap = np.abs(probes[:, None] - tree.points[None, :])
    for i, j in zip(*np.nonzero(gap < tree.dedup_tol)):
        up[tree.depths[j], i] = lo[tree.depths[j], i] = 0.0
    return up, lo


def _combine(up: np.ndarray, lo: np.ndarray, nested: bool) -> tuple[np.ndarray, np.ndarray]:
    # nested trees (fixed root): every shallower node is also a depth-K preimage
    if nested:
        return np.minimum.accumulate(up, axis=0), np.minimum.accumulate(lo, axis=0)
    return up, lo


def shadow_levels(Ptree: PreimageTree, Qtree: PreimageTree, probes: Sequence[tuple[complex, complex]],
                  gridP: GridDomain, gridQ: GridDomain, Pmap: Optional[Polynomial] = None,
                  Qmap: Optional[Polynomial] = None, fields: Optional[tuple[TreeField, TreeField]] = None):
    """Hyperbolic upper/lower bounds of the shadowing distance at every depth.

    Returns arrays ``(upper, lower)`` of shape (K+1, n_probes).
    """
    probes = list(probes)
    zs = np.array([p[0] for p in probes], dtype=complex)
    ws = np.array([p[1] for p in probes], dtype=complex)
    fP, fQ = fields if fields is not None else (tree_field(Ptree, gridP), tree_field(Qtree, gridQ))
    uz, lz = _coordinate_levels(fP, Ptree, zs)
    uw, lw = _coordinate_levels(fQ, Qtree, ws)
    K = min(uz.shape[0], uw.shape[0]) - 1
    uz, lz, uw, lw = uz[:K + 1], lz[:K + 1], uw[:K + 1], lw[:K + 1]
    nested = (Pmap is not None and Qmap is not None and _is_fixed(Pmap, Ptree.root) and _is_fixed(Qmap, Qtree.root))
    if nested:
        uz, lz = _combine(uz, lz, True)
        uw, lw = _combine(uw, lw, True)
        up_q = np.maximum(uz, uw)
        lo_q = np.maximum(lz, lw)
    else:
        up_q = np.minimum.accumulate(np.maximum(uz, uw), axis=0)
        lo_q = np.minimum.accumulate(np.maximum(lz, lw), axis=0)
    sc = fP.graph.simply_connected and fQ.graph.simply_connected
    upper = 2.0 * up_q
    lower = 0.5 * lo_q if sc else np.zeros_like(lo_q)
    return upper, np.minimum(lower, upper)


def shadow_statistic_product(Ptree: PreimageTree, Qtree: PreimageTree, probes: Sequence[tuple[complex, complex]],
                             gridP: GridDomain, gridQ: GridDomain, Pmap: Optional[Polynomial] = None,
                             Qmap: Optional[Polynomial] = None) -> list[DistanceBound]:
    """Per-probe bounds for min over tree nodes of the product-domain distance."""
    upper, lower = shadow_levels(Ptree, Qtree, probes, gridP, gridQ, Pmap, Qmap)
    return [DistanceBound(float(lo), float(up), Certificate.PRODUCT_MAX, "max(GEODESIC_GRID,GEODESIC_GRID)")
            for lo, up in zip(lower[-1], upper[-1])]


# ---- closed-form certificates --------------------------------------------------

def _root_gap(eps: float, m: int, k: int) -> float:
    """1 - eps**(1/m**k), accurate as the root approaches 1."""
    return -math.expm1(math.log(eps) / float(m) ** k)


def superattracting_terms(m1: int, m2: int, eps: float, delta: float, Kmax: int) -> np.ndarray:
    """Rows k = 0..Kmax of (d(1-delta, z_k), d(delta, w_k)) with z_k = eps^(1/m1^k), w_k = eps^(1/m2^k).

    Among all depth-k preimages of (eps, eps) the positive real one is closest
    to the probe (1-delta, delta) in both coordinates, so these terms bound the
    whole preimage set.
    """
    _check_superattracting_args(m1, m2, eps, delta, Kmax)
    rows = []
    for k in range(Kmax + 1):
        gz, gw = _root_gap(eps, m1, k), _root_gap(eps, m2, k)
        rows.append((radial_distance(delta, gz), radial_distance(1.0 - delta, gw)))
    return np.array(rows)


def _check_superattracting_args(m1, m2, eps, delta, Kmax):
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    if not (0 < delta < 0.5):
        raise ValueError("delta must lie in (0, 1/2)")
    if m1 < 2 or m2 < 2:
        raise ValueError("degrees must be at least 2")
    if Kmax < 0:
        raise ValueError("Kmax must be nonnegative")


def unbounded_certificate_superattracting(m1: int, m2: int, eps: float, delta: float, Kmax: int) -> float:
    """Lower bound on the polydisc distance from (1-delta, delta) to the depth <= Kmax
    preimages of (eps, eps) under (z^m1, w^m2)."""
    terms = superattracting_terms(m1, m2, eps, delta, Kmax)
    return float(terms.max(axis=1).min())


def superattracting_tail_bound(m1: int, m2: int, eps: float, delta: float, Kmax: int) -> float:
    """Lower bound covering every depth k > Kmax at once.

    The second-coordinate term d(delta, eps^(1/m2^k)) increases with k once
    eps^(1/m2^k) > delta, so depth Kmax+1 bounds the tail when that holds.
    """
    _check_superattracting_args(m1, m2, eps, delta, Kmax)
    g = _root_gap(eps, m2, Kmax + 1)
    if 1.0 - g <= delta:
        return 0.0
    return radial_distance(1.0 - delta, g)


def mixed_terms(m: int, eps: float, delta: float, Kmax: int) -> np.ndarray:
    if not (0 <= eps < 1):
        raise ValueError("eps must lie in [0, 1)")
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1)")
    if m < 2 or Kmax < 0:
        raise ValueError("need m >= 2 and Kmax >= 0")
    if eps == 0:
        # the fixed point has no other preimages under z^m
        return np.full(Kmax + 1, radial_distance(delta, 1.0))
    return np.array([radial_distance(delta, _root_gap(eps, m, k)) for k in range(Kmax + 1)])


def unbounded_certificate_mixed(Q: Polynomial, eps: float, delta: float, Kmax: int, m: int = 2) -> float:
    """Projection lower bound min_k d_disk(1-delta, eps^(1/m^k)) for F = (z^m, Q(w)).

    The Q coordinate is ignored: projecting onto the first factor of
    disk x basin(Q) does not increase Kobayashi distance.  ``eps = 0`` means
    the target's first coordinate is the fixed point itself.
    """
    if classify_fixed_point(Q).kind is not FixedPointKind.GEOMETRIC:
        raise ValueError("second coordinate map must be geometrically attracting")
    return float(mixed_terms(m, eps, delta, Kmax).min())


# ---- boundedness scan ---------------------------------------------------------------

@dataclass
class ScanResult:
    C_hat: float
    per_depth: list[float]
    probes: list[tuple[complex, complex]]
    bounds: list[DistanceBound]
    boundary_dist: np.ndarray
    K: int
    argmax_probe: tuple[complex, complex]
    upper_levels: Optional[np.ndarray] = None
    lower_levels: Optional[np.ndarray] = None
    Ptree: Optional[PreimageTree] = None
    Qtree: Optional[PreimageTree] = None

    def bounds_at(self, k: int) -> list[DistanceBound]:
        return [DistanceBound(float(lo), float(up), Certificate.PRODUCT_MAX, "max(GEODESIC_GRID,GEODESIC_GRID)")
                for lo, up in zip(self.lower_levels[k], self.upper_levels[k])]


def stratified_probes(gridP: GridDomain, gridQ: GridDomain, count: int, rng: np.random.Generator,
                      strata: int = 5) -> list[tuple[complex, complex]]:
    """Probe points whose coordinates are member cells stratified by boundary distance.

    The first stratum holds cells within two cells of the boundary; the rest
    split the remaining cells by boundary-distance quantiles.
    """
    def pick(grid: GridDomain, n: int) -> np.ndarray:
        m = grid.membership
        c = grid.centers()[m]
        bd = grid.boundary_dist[m]
        near = bd <= 2 * grid.cell_diagonal
        groups = [np.flatnonzero(near)]
        rest = np.flatnonzero(~near)
        if rest.size:
            edges = np.quantile(bd[rest], np.linspace(0, 1, strata))
            which = np.clip(np.searchsorted(edges, bd[rest], side="right") - 1, 0, strata - 2)
            groups += [rest[which == s] for s in range(strata - 1)]
        groups = [gr for gr in groups if gr.size]
        out = []
        for i in range(n):
            gr = groups[i % len(groups)]
            out.append(c[gr[rng.integers(gr.size)]])
        return np.array(out)

    zs = pick(gridP, count)
    ws = pick(gridQ, count)
    # pair boundary-hugging coordinates with every stratum of the other one
    ws = ws[rng.permutation(count)]
    return [(complex(z), complex(w)) for z, w in zip(zs, ws)]


def boundedness_scan(fmap: ProductMap, K: int, probe_count: int, gridP: GridDomain, gridQ: GridDomain,
                     seed: int = 0, probes: Optional[Sequence[tuple[complex, complex]]] = None) -> ScanResult:
    """Estimate the shadowing constant C_hat_k for k = 1..K from stratified probes."""
    for name, p in (("P", fmap.P), ("Q", fmap.Q)):
        if classify_fixed_point(p).kind is not FixedPointKind.GEOMETRIC:
            raise ValueError(f"{name} must be geometrically attracting")
    rng = np.random.default_rng(seed)
    if probes is None:
        probes = stratified_probes(gridP, gridQ, probe_count, rng)
    probes = list(probes)
    Ptree = build_tree_1d(fmap.P, 0j, K, gridP)
    fP = tree_field(Ptree, gridP)
    if fmap.Q == fmap.P and gridQ is gridP:
        Qtree, fQ = Ptree, fP
    else:
        Qtree = build_tree_1d(fmap.Q, 0j, K, gridQ)
        fQ = tree_field(Qtree, gridQ)
    upper, lower = shadow_levels(Ptree, Qtree, probes, gridP, gridQ, fmap.P, fmap.Q, fields=(fP, fQ))
    per_depth = [float(upper[k].max()) for k in range(1, upper.shape[0])]
    bounds = [DistanceBound(float(lo), float(up), Certificate.PRODUCT_MAX, "max(GEODESIC_GRID,GEODESIC_GRID)")
              for lo, up in zip(lower[-1], upper[-1])]
    bd = np.array([min(_bd_at(gridP, z), _bd_at(gridQ, w)) for z, w in probes])
    imax = int(np.argmax(upper[-1]))
    return ScanResult(per_depth[-1] if per_depth else float(upper[0].max()), per_depth, probes, bounds, bd,
                      upper.shape[0] - 1, probes[imax], upper, lower, Ptree, Qtree)


def _bd_at(grid: GridDomain, z: complex) -> float:
    iy, ix = grid.cell_of(z)
    return float(grid.boundary_dist[iy, ix])


SCAN_CSV_COLUMNS = ["probe_re", "probe_im_z", "probe_re_w", "probe_im_w", "boundary_dist", "depth", "lower",
                    "upper", "certificate"]


def write_scan_csv(rows: Sequence[dict], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=SCAN_CSV_COLUMNS, lineterminator="\n")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: r[k] for k in SCAN_CSV_COLUMNS})
    return path


def scan_rows(result: ScanResult, depth: Optional[int] = None) -> list[dict]:
    k = result.K if depth is None else depth
    bounds = result.bounds if depth is None else result.bounds_at(k)
    return [
        {"probe_re": repr(z.real), "probe_im_z": repr(z.imag), "probe_re_w": repr(w.real), "probe_im_w": repr(w.imag),
         "boundary_dist": repr(float(bd)), "depth": k, "lower": repr(b.lower), "upper": repr(b.upper),
         "certificate": b.certificate.value}
        for (z, w), bd, b in zip(result.probes, result.boundary_dist, bounds)
    ]
