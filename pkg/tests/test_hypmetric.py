import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from basinshadow.basin import grid_from_mask
from basinshadow.hypmetric import (
    Certificate,
    DistanceBound,
    DomainError,
    disk_distance,
    grid_geodesic_distance,
    polydisc_distance,
    product_max_distance,
    punctured_lower_bound,
    punctured_lower_bound_log,
    radial_distance,
    refined_geodesic_distance,
)

mp.mp.dps = 50


def mp_disk(a, b):
    a, b = mp.mpc(a), mp.mpc(b)
    rho = abs((a - b) / (1 - a * mp.conj(b)))
    return mp.log((1 + rho) / (1 - rho))


def test_disk_distance_examples():
    assert disk_distance(0, 0) == 0
    assert disk_distance(0, 0.5) == pytest.approx(math.log(3), abs=1e-12)
    assert disk_distance(0, 0.9) == pytest.approx(math.log(19), abs=1e-12)
    assert math.log(19) == pytest.approx(2.944439, abs=1e-6)
    with pytest.raises(DomainError):
        disk_distance(0, 1)


def test_polydisc_examples():
    assert polydisc_distance((0, 0), (0.5, 0.8)) == pytest.approx(math.log(9), abs=1e-12)
    assert polydisc_distance((0.3j, -0.2), (0.3j, -0.2)) == 0
    assert polydisc_distance((0, 0), (0.5, 0.5)) == pytest.approx(math.log(3), abs=1e-12)


def test_punctured_examples():
    assert punctured_lower_bound(0.4, 0.4j, 2) == 0
    assert punctured_lower_bound(0.1, 0.5, 2) == pytest.approx(abs(math.log(math.log(4)) - math.log(math.log(20))), abs=1e-12)
    # the closed form is 0.7705544; the quoted 0.770556 differs in the sixth decimal
    assert punctured_lower_bound(0.1, 0.5, 2) == pytest.approx(0.770556, abs=2e-6)
    v = punctured_lower_bound(1e-38, 0.3, 2)
    assert v == pytest.approx(float(mp.log(-mp.log(mp.mpf("1e-38") / 2)) - mp.log(-mp.log(mp.mpf("0.3") / 2))), abs=1e-12)
    assert 3.83 < v < 3.85
    with pytest.raises(DomainError):
        punctured_lower_bound(0, 0.5, 2)
    with pytest.raises(DomainError):
        punctured_lower_bound(0.1, 2.0, 2)
    # log form survives moduli far below double range
    assert punctured_lower_bound_log(-1000 * math.log(10), math.log(0.3), 2) > 7


def test_radial_distance_matches_high_precision():
    for ga, gb in [(1e-3, 0.5), (2 ** -40, 1e-17), (1.5, 1e-30)]:
        want = mp_disk(1 - mp.mpf(ga), 1 - mp.mpf(gb))
        assert radial_distance(ga, gb) == pytest.approx(float(want), rel=1e-12)


def test_product_max_examples():
    ex = DistanceBound.exact
    b = product_max_distance(ex(1), ex(2))
    assert (b.lower, b.upper, b.certificate) == (2, 2, Certificate.PRODUCT_MAX)
    b = product_max_distance(DistanceBound(0, 3, Certificate.GEODESIC_GRID), ex(2))
    assert (b.lower, b.upper) == (2, 3)
    assert (product_max_distance(ex(0), ex(0)).upper) == 0


def test_bound_invariants():
    with pytest.raises(ValueError):
        DistanceBound(2, 1, Certificate.GEODESIC_GRID)
    with pytest.raises(ValueError):
        DistanceBound(1, 2, Certificate.CLOSED_FORM)


disk_pt = st.builds(lambda r, t: r * cmath.exp(1j * t), st.floats(0, 0.999), st.floats(0, 2 * math.pi))


@settings(max_examples=300, deadline=None)
@given(disk_pt, disk_pt, disk_pt)
def test_symmetry_triangle_high_precision(a, b, c):
    assert disk_distance(a, b) == pytest.approx(disk_distance(b, a), abs=1e-12)
    assert disk_distance(a, c) <= disk_distance(a, b) + disk_distance(b, c) + 1e-12
    assert disk_distance(a, b) == pytest.approx(float(mp_disk(a, b)), abs=1e-9, rel=1e-10)


@settings(max_examples=300, deadline=None)
@given(disk_pt, disk_pt, disk_pt, st.floats(0, 2 * math.pi))
def test_mobius_invariance(a, b, c, theta):
    c = c * 0.9

    def phi(z):
        return cmath.exp(1j * theta) * (z - c) / (1 - c.conjugate() * z)

    try:
        fa, fb = phi(a), phi(b)
        want = disk_distance(a, b)
        got = disk_distance(fa, fb)
    except DomainError:
        return  # rounding pushed an image onto the circle
    assert got == pytest.approx(want, abs=1e-10 * max(1, want) * 1e3 if want > 10 else 1e-10)


def test_grid_geodesic_examples(disk512):
    b = grid_geodesic_distance(disk512, 0, 0.9)
    assert b.lower <= math.log(19) <= b.upper
    assert b.upper / b.lower <= 4.5
    b = grid_geodesic_distance(disk512, 0, 0.5)
    assert b.lower <= math.log(3) <= b.upper
    b = grid_geodesic_distance(disk512, 0.2j, 0.2j)
    assert (b.lower, b.upper) == (0, 0)
    with pytest.raises(DomainError):
        grid_geodesic_distance(disk512, 0, 1.01)


def test_sandwich_random_pairs(disk512):
    rng = np.random.default_rng(7)
    for _ in range(25):
        p, q = (math.sqrt(rng.random()) * 0.97 * cmath.exp(2j * math.pi * rng.random()) for _ in range(2))
        b = grid_geodesic_distance(disk512, p, q)
        assert b.lower <= disk_distance(p, q) <= b.upper


def test_domain_monotonicity(geom_grid):
    # the subdomain carries the larger distance
    inner = grid_from_mask(geom_grid.membership & (np.abs(geom_grid.centers()) < 0.6), geom_grid.box)
    for p, q in [(0, 0.4), (-0.3j, 0.35j), (0.1 + 0.1j, -0.45)]:
        assert grid_geodesic_distance(geom_grid, p, q).upper <= grid_geodesic_distance(inner, p, q).upper


def test_holes_drop_lower_bound():
    n = 201
    y, x = np.mgrid[-1:1:n * 1j, -1:1:n * 1j]
    r = np.hypot(x, y)
    g = grid_from_mask((r < 0.95) & (r > 0.05), (-1, 1, -1, 1))
    b = grid_geodesic_distance(g, 0.5, -0.5)
    assert b.lower == 0 and b.upper > 0 and "holes" in b.detail


def test_punctured_bound_below_image_domain_geodesic():
    # punctured disk of radius R: the modulus bound never exceeds a geodesic upper bound there
    R, n = 2.0, 401
    y, x = np.mgrid[-R:R:n * 1j, -R:R:n * 1j]
    r = np.hypot(x, y)
    g = grid_from_mask((r < R) & (r > 0.02), (-R, R, -R, R))
    for a, b in [(0.1, 0.5), (0.05, 1.2j), (0.3, -1.0), (0.08 + 0.08j, 1.5)]:
        assert punctured_lower_bound(a, b, R) <= grid_geodesic_distance(g, a, b).upper


def test_refinement_converges():
    from basinshadow.basin import disk_grid

    b, res = refined_geodesic_distance(disk_grid, 0, 0.5, resolution=64, max_resolution=1024)
    assert b.lower <= math.log(3) <= b.upper
    assert res <= 1024


def test_j_lower_radial(disk512):
    # along a radius of the unit disk j and the quasihyperbolic distance coincide: log(1/(1-r))
    from basinshadow.hypmetric import geodesic_graph

    g = geodesic_graph(disk512)
    for r in (0.3, 0.6, 0.9):
        assert g.j_lower(0j, [r])[0] <= math.log(1 / (1 - r)) + 1e-12
        assert g.j_lower(0j, [r])[0] >= math.log(1 / (1 - r)) - 0.1


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(max_magnitude=0.95), st.complex_numbers(max_magnitude=0.95))
def test_j_lower_below_hyperbolic(disk512, p, q):
    from basinshadow.hypmetric import geodesic_graph

    # on the disk the hyperbolic density 2/(1-|z|^2) dominates 1/(1-|z|), so j <= k <= rho
    j = geodesic_graph(disk512).j_lower(p, [q])[0]
    assert j <= disk_distance(p, q) + 1e-12
