"""Rasterized attracting basins in one complex variable.

A :class:`GridDomain` is a square-cell raster over an axis-aligned box.  Array
indexing is ``[iy, ix]`` with ``iy`` running along the imaginary axis, and cell
(iy, ix) is centred at ``re_min + (ix + 0.5) dx + 1j * (im_min + (iy + 0.5) dy)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import ndimage

from .dynsys import FixedPointKind, SkewMap, classify_fixed_point
from .polycore import Polynomial, evaluate

MAX_ITER = 1000
CONVERGE_RADIUS = 1e-6
ESCAPE_RADIUS = 1e6

PARABOLIC_MAX_ITER = 100_000
PARABOLIC_CONVERGE_RADIUS = 1e-3

# 4-connectivity for members, 8-connectivity for the complement
FOUR = ndimage.generate_binary_structure(2, 1)
EIGHT = ndimage.generate_binary_structure(2, 2)


class Membership(enum.IntEnum):
    UNDECIDED = 0
    CONVERGES = 1
    ESCAPES = 2


class BasinError(RuntimeError):
    pass


Box = tuple[float, float, float, float]


@dataclass
class GridDomain:
    box: Box
    resolution: int
    membership: np.ndarray
    boundary_dist: Optional[np.ndarray] = None
    states: Optional[np.ndarray] = field(default=None, repr=False)
    heuristic: bool = False

    @property
    def dx(self) -> float:
        return (self.box[1] - self.box[0]) / self.resolution

    @property
    def dy(self) -> float:
        return (self.box[3] - self.box[2]) / self.resolution

    @property
    def cell_diagonal(self) -> float:
        return float(np.hypot(self.dx, self.dy))

    def centers(self) -> np.ndarray:
        re = self.box[0] + (np.arange(self.resolution) + 0.5) * self.dx
        im = self.box[2] + (np.arange(self.resolution) + 0.5) * self.dy
        return re[None, :] + 1j * im[:, None]

    def center(self, iy: int, ix: int) -> complex:
        return complex(self.box[0] + (ix + 0.5) * self.dx, self.box[2] + (iy + 0.5) * self.dy)

    def cell_of(self, z):
        """(iy, ix) of the cell containing z; arrays in, arrays out.  No bounds check."""
        z = np.asarray(z)
        ix = np.floor((z.real - self.box[0]) / self.dx).astype(int)
        iy = np.floor((z.imag - self.box[2]) / self.dy).astype(int)
        return iy, ix

    def in_box(self, z) -> np.ndarray:
        iy, ix = self.cell_of(z)
        return (ix >= 0) & (ix < self.resolution) & (iy >= 0) & (iy < self.resolution)

    def contains(self, z) -> np.ndarray:
        """Membership lookup; points outside the box are non-members."""
        z = np.asarray(z)
        iy, ix = self.cell_of(z)
        ok = (ix >= 0) & (ix < self.resolution) & (iy >= 0) & (iy < self.resolution)
        out = np.zeros(z.shape, dtype=bool)
        out[ok] = self.membership[iy[ok], ix[ok]]
        return out if z.shape else bool(out)

    def area(self) -> float:
        return float(self.membership.sum()) * self.dx * self.dy

    def touches_box_edge(self) -> bool:
        m = self.membership
        return bool(m[0].any() or m[-1].any() or m[:, 0].any() or m[:, -1].any())


def _iterate(step: Callable, z0: np.ndarray, max_iter: int, converge_radius: float,
             escape_radius: float, monotone: bool = False) -> np.ndarray:
    z = np.asarray(z0, dtype=complex).ravel().copy()
    state = np.zeros(z.shape, dtype=np.int8)
    a = np.abs(z)
    state[a < converge_radius] = Membership.CONVERGES
    state[~(a <= escape_radius)] = Membership.ESCAPES
    idx = np.flatnonzero(state == Membership.UNDECIDED)
    z, prev = z[idx], a[idx]
    for _ in range(max_iter):
        if idx.size == 0:
            break
        z = step(z, idx)
        a = np.abs(z)
        esc = ~(a <= escape_radius)
        conv = a < converge_radius
        if monotone:
            conv &= a < prev
        state[idx[esc]] = Membership.ESCAPES
        state[idx[conv & ~esc]] = Membership.CONVERGES
        keep = ~(esc | conv)
        idx, z, prev = idx[keep], z[keep], a[keep]
    return state


def classify_points(p: Polynomial, z, max_iter: int = MAX_ITER, converge_radius: float = CONVERGE_RADIUS,
                    escape_radius: float = ESCAPE_RADIUS, monotone: bool = False) -> np.ndarray:
    """Vectorized :func:`membership_test`; returns an int8 array of Membership codes."""
    z = np.asarray(z, dtype=complex)
    state = _iterate(lambda v, _: evaluate(p, v), z, max_iter, converge_radius, escape_radius, monotone)
    return state.reshape(z.shape)


def membership_test(p: Polynomial, z: complex, max_iter: int = MAX_ITER, converge_radius: float = CONVERGE_RADIUS,
                    escape_radius: float = ESCAPE_RADIUS) -> Membership:
    return Membership(int(classify_points(p, np.array([z]), max_iter, converge_radius, escape_radius)[0]))


def parabolic_membership_test(p: Polynomial, z: complex) -> Membership:
    """Heuristic membership for a parabolic fixed point at 0 (slow convergence)."""
    return Membership(int(classify_points(p, np.array([z]), PARABOLIC_MAX_ITER, PARABOLIC_CONVERGE_RADIUS,
                                          ESCAPE_RADIUS, monotone=True)[0]))


def _component_from_seed(states: np.ndarray, seed: tuple[int, int]) -> np.ndarray:
    conv = states == Membership.CONVERGES
    if not conv[seed]:
        raise BasinError(f"seed cell {seed} does not converge; refine the grid")
    labels, _ = ndimage.label(conv, structure=FOUR)
    return labels == labels[seed]


def extract_immediate_basin(p: Polynomial, box: Box, resolution: int, *, max_iter: int = MAX_ITER,
                            seed: Optional[complex] = None, heuristic_parabolic: bool = False,
                            with_distance: bool = True) -> GridDomain:
    """Flood fill of converging cells from the cell holding the attracting point.

    Parabolic maps need ``heuristic_parabolic=True`` and a seed inside the
    basin (the fixed point sits on the boundary); the result is flagged
    heuristic.
    """
    kind = classify_fixed_point(p).kind
    if kind is FixedPointKind.PARABOLIC:
        if not heuristic_parabolic:
            raise BasinError("parabolic basin extraction is heuristic; pass heuristic_parabolic=True")
        if seed is None:
            raise BasinError("parabolic basin extraction needs a seed point inside the basin")
    elif kind not in (FixedPointKind.SUPERATTRACTING, FixedPointKind.GEOMETRIC):
        raise BasinError(f"fixed point is {kind.value}, not attracting")
    grid = GridDomain(tuple(float(b) for b in box), int(resolution), np.zeros((resolution, resolution), bool))
    zc = grid.centers()
    if kind is FixedPointKind.PARABOLIC:
        states = classify_points(p, zc, PARABOLIC_MAX_ITER, PARABOLIC_CONVERGE_RADIUS, ESCAPE_RADIUS, monotone=True)
    else:
        states = classify_points(p, zc, max_iter)
    seed = 0j if seed is None else seed
    if not grid.in_box(seed):
        raise BasinError("seed point outside the grid box")
    iy, ix = grid.cell_of(seed)
    grid.membership = _component_from_seed(states, (int(iy), int(ix)))
    grid.states = states
    grid.heuristic = kind is FixedPointKind.PARABOLIC
    if with_distance:
        boundary_distance_field(grid)
    return grid


def slice_domain(fmap: SkewMap, z: complex, box: Box, resolution: int, max_iter: int = MAX_ITER,
                 seed: complex = 0j) -> GridDomain:
    """w-slice {w : (z, w) in the basin of (0, 0)}, component containing ``seed``."""
    grid = GridDomain(tuple(float(b) for b in box), int(resolution), np.zeros((resolution, resolution), bool))
    w0 = grid.centers().ravel()
    zs = np.full(w0.shape, complex(z))
    state = _iterate_pairs(fmap, zs, w0, max_iter)
    states = state.reshape(resolution, resolution)
    iy, ix = grid.cell_of(seed)
    grid.membership = _component_from_seed(states, (int(iy), int(ix)))
    grid.states = states
    boundary_distance_field(grid)
    return grid


def _iterate_pairs(fmap: SkewMap, z: np.ndarray, w: np.ndarray, max_iter: int,
                   converge_radius: float = CONVERGE_RADIUS, escape_radius: float = ESCAPE_RADIUS) -> np.ndarray:
    z, w = z.astype(complex).copy(), w.astype(complex).copy()
    state = np.zeros(z.shape, dtype=np.int8)
    idx = np.arange(z.size)
    for _ in range(max_iter + 1):
        a = np.maximum(np.abs(z), np.abs(w))
        esc = ~(a <= escape_radius)
        conv = a < converge_radius
        state[idx[esc]] = Membership.ESCAPES
        state[idx[conv & ~esc]] = Membership.CONVERGES
        keep = ~(esc | conv)
        idx, z, w = idx[keep], z[keep], w[keep]
        if idx.size == 0:
            break
        z, w = fmap(z, w)
    return state


def classify_pairs(fmap, z, w, max_iter: int = MAX_ITER) -> np.ndarray:
    """Membership codes for points (z, w) of C^2 under a product or skew map."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    z, w = np.broadcast_arrays(z, w)
    return _iterate_pairs(fmap, z.ravel(), w.ravel(), max_iter).reshape(z.shape)


def boundary_distance_field(d: GridDomain) -> GridDomain:
    """Fill ``boundary_dist``: Euclidean distance from each member cell centre to
    the nearest non-member cell centre, in plane units.  The box exterior counts
    as non-member."""
    padded = np.pad(d.membership, 1, constant_values=False)
    dist = ndimage.distance_transform_edt(padded, sampling=(d.dy, d.dx))[1:-1, 1:-1]
    d.boundary_dist = np.where(d.membership, dist, 0.0)
    return d


def disk_grid(resolution: int, radius: float = 1.0, margin: float = 1.05, center: complex = 0j) -> GridDomain:
    """Raster of the open disk |z - center| < radius (synthetic fixture)."""
    r = radius * margin
    box = (center.real - r, center.real + r, center.imag - r, center.imag + r)
    grid = GridDomain(box, resolution, np.zeros((resolution, resolution), bool))
    grid.membership = np.abs(grid.centers() - center) < radius
    boundary_distance_field(grid)
    return grid


def grid_from_mask(mask: np.ndarray, box: Box) -> GridDomain:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape[0] != mask.shape[1]:
        raise ValueError("grid masks must be square")
    grid = GridDomain(tuple(float(b) for b in box), mask.shape[0], mask.copy())
    boundary_distance_field(grid)
    return grid


class ConnectivityReport(NamedTuple):
    component_count: int
    hole_count: int


def connectivity_report(d: GridDomain) -> ConnectivityReport:
    _, ncomp = ndimage.label(d.membership, structure=FOUR)
    comp_labels, ncompl = ndimage.label(~d.membership, structure=EIGHT)
    edge = np.zeros_like(d.membership)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    touching = set(np.unique(comp_labels[edge & ~d.membership])) - {0}
    return ConnectivityReport(int(ncomp), int(ncompl - len(touching)))


def forward_invariance_fraction(p: Polynomial, d: GridDomain) -> float:
    """Fraction of member cells whose centre maps into (or within one cell of) the member set."""
    grown = ndimage.binary_dilation(d.membership, structure=EIGHT)
    grown_grid = replace(d, membership=grown)
    images = evaluate(p, d.centers()[d.membership])
    return float(np.mean(grown_grid.contains(images)))


# ---- exports ---------------------------------------------------------------

def write_pgm(d: GridDomain, path) -> Path:
    """Binary (P5) PGM of the membership bitmap; members are white, row 0 at the top
    is the largest imaginary part."""
    path = Path(path)
    img = np.where(d.membership[::-1], 255, 0).astype(np.uint8)
    header = f"P5\n{d.resolution} {d.resolution}\n255\n".encode("ascii")
    path.write_bytes(header + img.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = (int(v) for v in parts[1].split())
    img = np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)
    return img[::-1] > 127


CSV_HEADER = "iy,ix,re,im,member,boundary_dist"


def write_distance_csv(d: GridDomain, path) -> Path:
    """One row per cell, columns ``iy,ix,re,im,member,boundary_dist``."""
    if d.boundary_dist is None:
        boundary_distance_field(d)
    path = Path(path)
    iy, ix = np.indices(d.membership.shape)
    c = d.centers()
    rows = np.column_stack([iy.ravel(), ix.ravel(), c.real.ravel(), c.imag.ravel(),
                            d.membership.ravel().astype(int), d.boundary_dist.ravel()])
    np.savetxt(path, rows, delimiter=",", header=CSV_HEADER, comments="",
               fmt=["%d", "%d", "%.17g", "%.17g", "%d", "%.17g"])
    return path


def write_distance_binary(d: GridDomain, path) -> Path:
    """Raw little-endian float64, row-major [iy, ix], resolution**2 values."""
    if d.boundary_dist is None:
        boundary_distance_field(d)
    path = Path(path)
    path.write_bytes(d.boundary_dist.astype("<f8").tobytes())
    return path
