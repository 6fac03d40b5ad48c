import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from basinshadow.basin import disk_grid
from basinshadow.dynsys import ProductMap
from basinshadow.hypmetric import Certificate, DomainError, grid_geodesic_distance, polydisc_distance
from basinshadow.polycore import Polynomial, evaluate
from basinshadow.shadow import (
    SCAN_CSV_COLUMNS,
    boundedness_scan,
    build_tree_1d,
    mixed_terms,
    scan_rows,
    shadow_statistic_product,
    superattracting_tail_bound,
    superattracting_terms,
    unbounded_certificate_mixed,
    unbounded_certificate_superattracting,
    write_scan_csv,
)

mp.mp.dps = 50


def _disk_mp(a, b):
    a, b = mp.mpf(a), mp.mpf(b)
    return 2 * mp.atanh(abs(a - b) / (1 - a * b))


def _root_mp(eps, m, k):
    return mp.mpf(eps) ** (mp.mpf(1) / mp.mpf(m) ** k)


# ---- trees ---------------------------------------------------------------------

def test_tree_square_root_of_target():
    tree = build_tree_1d(Polynomial.monomial(2), 0.01, 1, disk_grid(128))
    assert sorted(tree.points.real) == pytest.approx([-0.1, 0.01, 0.1], abs=1e-15)
    assert list(tree.depths) == [0, 1, 1]


def test_tree_fixed_root_deduplicated(geom_poly, geom_grid):
    tree = build_tree_1d(geom_poly, 0j, 1, geom_grid)
    assert len(tree) == 2
    assert tree.points[1] == pytest.approx(-0.3, abs=1e-14)


def test_tree_depth_zero(geom_poly, geom_grid):
    tree = build_tree_1d(geom_poly, 0j, 0, geom_grid)
    assert len(tree) == 1 and tree.max_depth == 0


def test_tree_invariants(geom_poly, geom_grid):
    K = 8
    tree = build_tree_1d(geom_poly, 0j, K, geom_grid)
    for z, k, parent in tree.nodes()[1:]:
        assert abs(evaluate(geom_poly, z) - tree.points[parent]) <= 1e-8
        assert tree.depths[parent] == k - 1
    for k in range(K + 1):
        pts = tree.at_depth(k)
        if len(pts) > 1:
            gap = np.abs(pts[:, None] - pts[None, :]) + np.eye(len(pts))
            assert gap.min() >= tree.dedup_tol
        assert tree.raw_counts[k] <= 2 ** k
    assert set(tree.depths) == set(range(K + 1))


def test_tree_root_outside_domain(geom_poly, geom_grid):
    with pytest.raises(DomainError):
        build_tree_1d(geom_poly, 1.5 + 0j, 2, geom_grid)


# ---- product statistic -----------------------------------------------------------

def test_statistic_trivial_probes(geom_poly, geom_grid):
    tree = build_tree_1d(geom_poly, 0j, 4, geom_grid)
    probes = [(0j, 0j), (complex(tree.points[3]), complex(tree.points[6]))]
    for b in shadow_statistic_product(tree, tree, probes, geom_grid, geom_grid, geom_poly, geom_poly):
        assert b.upper == 0 and b.lower == 0
        assert b.certificate is Certificate.PRODUCT_MAX


def test_statistic_golden(geom_poly, geom_grid):
    tree = build_tree_1d(geom_poly, 0j, 6, geom_grid)
    (b,) = shadow_statistic_product(tree, tree, [(-0.15 + 0j, -0.15 + 0j)], geom_grid, geom_grid,
                                    geom_poly, geom_poly)
    assert math.isfinite(b.upper)
    # recorded from the pipeline at resolution 512
    assert b.upper == pytest.approx(0.39826183215539, rel=1e-9)


def test_statistic_matches_pairwise(geom_poly, geom_grid):
    # splitting the min over node pairs must agree with an explicit pairwise search
    tree = build_tree_1d(geom_poly, 0j, 2, geom_grid)
    probe = (0.2 + 0.4j, -0.5 - 0.3j)
    (b,) = shadow_statistic_product(tree, tree, [probe], geom_grid, geom_grid, geom_poly, geom_poly)
    best = math.inf
    for zt in tree.points:
        for wt in tree.points:
            bz = grid_geodesic_distance(geom_grid, probe[0], zt)
            bw = grid_geodesic_distance(geom_grid, probe[1], wt)
            best = min(best, max(bz.upper, bw.upper))
    assert b.upper == pytest.approx(best, rel=1e-9)


def test_statistic_probe_outside(geom_poly, geom_grid):
    tree = build_tree_1d(geom_poly, 0j, 2, geom_grid)
    with pytest.raises(DomainError):
        shadow_statistic_product(tree, tree, [(0.9 + 0j, 0j)], geom_grid, geom_grid)


# ---- closed-form certificates ------------------------------------------------------------

def test_superattracting_depth_zero():
    got = unbounded_certificate_superattracting(2, 2, 0.01, 0.25, 0)
    assert got == pytest.approx(polydisc_distance((0.75, 0.25), (0.01, 0.01)), abs=1e-12)
    assert got == pytest.approx(float(_disk_mp(0.75, 0.01)), abs=1e-12)


@pytest.mark.parametrize("j", [3, 10, 20, 40])
def test_superattracting_oracle(j):
    delta = mp.mpf(2) ** -j
    ref = min(max(_disk_mp(1 - delta, _root_mp("0.01", 2, k)), _disk_mp(delta, _root_mp("0.01", 2, k)))
              for k in range(61))
    assert unbounded_certificate_superattracting(2, 2, 0.01, float(delta), 60) == pytest.approx(float(ref), abs=1e-12)


def test_superattracting_case_growth():
    terms = superattracting_terms(2, 2, 0.01, 1e-3, 60)
    # fixed delta: the second coordinate grows in k once the roots pass delta
    assert np.all(np.diff(terms[3:, 1]) > 0)
    assert terms[60, 1] > 20
    # fixed k: the first coordinate grows as delta shrinks
    col = [superattracting_terms(2, 2, 0.01, 2.0 ** -j, 5)[5, 0] for j in range(3, 41)]
    assert np.all(np.diff(col) > 0)


def test_superattracting_monotone_in_delta():
    vals = [unbounded_certificate_superattracting(2, 2, 0.01, 2.0 ** -j, 60) for j in range(3, 41)]
    assert np.all(np.diff(vals) >= 0)


def test_superattracting_tail():
    # the depth-61 term bounds every deeper term
    tail = superattracting_tail_bound(2, 2, 0.01, 1e-3, 60)
    deeper = superattracting_terms(2, 2, 0.01, 1e-3, 80)[61:].max(axis=1)
    assert np.all(deeper >= tail - 1e-12)


@pytest.mark.parametrize("args", [(2, 2, 0.0, 0.1, 5), (2, 2, 0.01, 0.5, 5), (1, 2, 0.01, 0.1, 5),
                                  (2, 2, 0.01, 0.1, -1)])
def test_superattracting_errors(args):
    with pytest.raises(ValueError):
        unbounded_certificate_superattracting(*args)


def test_mixed_oracle_value():
    Q = Polynomial([0, 0.3, 1])
    got = unbounded_certificate_mixed(Q, 0.01, 1e-6, 60)
    ref = min(_disk_mp(1 - mp.mpf("1e-6"), _root_mp("0.01", 2, k)) for k in range(61))
    assert got == pytest.approx(float(ref), abs=1e-12)
    # the roots eps^(1/2^k) track 1 - delta, so the certificate stays small here
    assert got == pytest.approx(0.0934517114531529, abs=1e-12)


def test_mixed_probe_on_shadow_point():
    assert unbounded_certificate_mixed(Polynomial([0, 0.3, 1]), 0.01, 0.99, 10) == pytest.approx(0, abs=1e-12)


def test_mixed_fixed_target():
    got = unbounded_certificate_mixed(Polynomial([0, 0.3, 1]), 0.0, 1e-9, 10)
    assert got == pytest.approx(float(_disk_mp(1 - mp.mpf("1e-9"), 0)), abs=1e-9)
    assert np.all(mixed_terms(2, 0.0, 1e-9, 3) == got)


def test_mixed_requires_geometric():
    with pytest.raises(ValueError):
        unbounded_certificate_mixed(Polynomial([0, 0, 1]), 0.01, 0.1, 5)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-6, 0.5), st.floats(1e-4, 0.9), st.integers(0, 30))
def test_certificates_nonnegative(delta, eps, K):
    assert unbounded_certificate_mixed(Polynomial([0, 0.5, 1]), eps, delta, K) >= 0
    if delta < 0.5:
        v = unbounded_certificate_superattracting(2, 3, eps, delta, K)
        assert v >= 0
        # adding depth can only lower the minimum
        assert unbounded_certificate_superattracting(2, 3, eps, delta, K + 1) <= v


# ---- scan -------------------------------------------------------------------------

def test_scan_monotone_and_csv(geom_poly, geom_grid, tmp_path):
    res = boundedness_scan(ProductMap(geom_poly, geom_poly), 5, 40, geom_grid, geom_grid, seed=3)
    assert len(res.per_depth) == 5
    assert all(b <= a + 1e-12 for a, b in zip(res.per_depth, res.per_depth[1:]))
    assert res.C_hat == res.per_depth[-1] and math.isfinite(res.C_hat)
    near = res.boundary_dist <= 2 * geom_grid.cell_diagonal
    assert near.any()
    path = write_scan_csv(scan_rows(res), tmp_path / "probes.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(SCAN_CSV_COLUMNS)
    assert len(lines) == 41


def test_scan_origin_probe(geom_poly, geom_grid):
    res = boundedness_scan(ProductMap(geom_poly, geom_poly), 3, 0, geom_grid, geom_grid, probes=[(0j, 0j)])
    assert res.C_hat == 0


def test_scan_requires_geometric(geom_grid):
    sq = Polynomial([0, 0, 1])
    with pytest.raises(ValueError):
        boundedness_scan(ProductMap(sq, sq), 3, 10, geom_grid, geom_grid)


def test_scan_deterministic(geom_poly, geom_grid):
    a = boundedness_scan(ProductMap(geom_poly, geom_poly), 4, 30, geom_grid, geom_grid, seed=7)
    b = boundedness_scan(ProductMap(geom_poly, geom_poly), 4, 30, geom_grid, geom_grid, seed=7)
    assert a.per_depth == b.per_depth and a.probes == b.probes
