"""Scenario orchestration and the verdict engine."""

from __future__ import annotations

import contextlib
import math
import time
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .. import __version__
from ..basin import GridDomain, disk_grid, extract_immediate_basin, slice_domain
from ..dynsys import FixedPointKind, ProductMap, SkewMap, classify_fixed_point
from ..hypmetric import (
    LOWER_BOUND_CERTIFICATES,
    Certificate,
    DistanceBound,
    DomainError,
    disk_distance,
    geodesic_bounds_from,
    cell_slack,
    punctured_lower_bound_log,
    radial_distance,
)
from ..lamination import (
    LeafOffset,
    LaminationError,
    bidisc_check,
    iterate_quadratic,
    iterate_sqrt,
    leaf_probe,
    limit_family,
    log_abs_sheet_product,
    product_certificate,
    punctured_certificate,
    sample_basin,
    sheet_values,
    verify_region_lemmas,
    w_shrinkage_report,
    h_radius_check,
)
from ..polycore import Polynomial
from ..shadow import (
    _root_gap,
    boundedness_scan,
    build_tree_2d,
    mixed_terms,
    superattracting_tail_bound,
    unbounded_certificate_mixed,
    unbounded_certificate_superattracting,
)
from .scenario import Scenario, ScenarioError, engine_for

BOUNDED = "BOUNDED_EVIDENCE"
UNBOUNDED = "UNBOUNDED_EVIDENCE"
INCONCLUSIVE = "INCONCLUSIVE"
STABILIZATION_TOL = 0.1
LIMIT_TOL = 1e-6
MIN_MODULUS_TOL = 1e-9
SLICE_OFFSETS = (0.02, 0.05, 0.1, 0.2, 0.4)
SLICE_REFERENCES = (0j, 0.3j, -0.3 + 0j, 0.5 + 0.2j, -0.2 - 0.4j)


class StageError(RuntimeError):
    """A pipeline stage failed; ``cause`` keeps the original exception."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class LemmaResult:
    name: str
    passed: bool
    value: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "value": self.value, "detail": self.detail}


@dataclass
class LadderEntry:
    delta: float
    probe: tuple[complex, complex]
    bound: DistanceBound

    def to_dict(self) -> dict:
        return {"delta": self.delta, "probe": _pt(self.probe), "lower": self.bound.lower,
                "upper": self.bound.upper, "certificate": self.bound.certificate.value,
                "detail": self.bound.detail}


@dataclass
class SoundnessPair:
    a: tuple[complex, complex]
    b: tuple[complex, complex]
    lower: float
    certificate: str
    upper: float
    slack: float

    @property
    def ok(self) -> bool:
        return self.lower <= self.upper + self.slack

    def to_dict(self) -> dict:
        return {"a": _pt(self.a), "b": _pt(self.b), "lower": self.lower, "certificate": self.certificate,
                "upper": self.upper, "slack": self.slack, "ok": self.ok}


@dataclass
class Report:
    scenario: Scenario
    engine: str
    heuristic: bool = False
    accept_heuristic: bool = False
    verdict: str = INCONCLUSIVE
    reason: str = ""
    ladder: list[LadderEntry] = field(default_factory=list)
    scan: Any = None
    stabilization: Optional[dict] = None
    lemmas: list[LemmaResult] = field(default_factory=list)
    soundness: list[SoundnessPair] = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    grids: dict[str, GridDomain] = field(default_factory=dict)
    overlay: dict = field(default_factory=dict)
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def best_lower(self) -> float:
        certs = [e.bound.lower for e in self.ladder if e.bound.certificate in LOWER_BOUND_CERTIFICATES]
        return max(certs, default=0.0)

    @property
    def C_hat(self) -> Optional[float]:
        return None if self.stabilization is None else self.stabilization["C_K"]

    @property
    def soundness_ok(self) -> bool:
        return all(p.ok for p in self.soundness)

    def to_dict(self) -> dict:
        s = self.scenario
        out = {
            "artifact": {"name": "basinshadow", "version": __version__},
            "scenario": s.to_dict(),
            "engine": self.engine,
            "heuristic": self.heuristic,
            "accept_heuristic_parabolic": self.accept_heuristic,
            "verdict": self.verdict,
            "reason": self.reason,
            "thresholds": {f"{c:g}": self.best_lower > c for c in s.thresholds} if self.ladder else {},
            "ladder": [e.to_dict() for e in self.ladder],
            "scan": None,
            "lemmas": [m.to_dict() for m in self.lemmas],
            "soundness": {"pairs": [p.to_dict() for p in self.soundness],
                          "violations": sum(not p.ok for p in self.soundness)},
            "extras": self.extras,
            "timing_file": "timing.json",
        }
        if self.scan is not None:
            out["scan"] = dict(self.stabilization)
        return out


def _pt(p) -> list:
    return [[complex(c).real, complex(c).imag] for c in p]


@contextlib.contextmanager
def _stage(report: Report, name: str):
    t0 = time.perf_counter()
    try:
        yield
    except (ScenarioError, StageError):
        raise
    except Exception as exc:  # noqa: BLE001  - every module failure is reported with its stage
        raise StageError(name, exc) from exc
    finally:
        report.timing[name] = report.timing.get(name, 0.0) + time.perf_counter() - t0


def _is_pure_power(p: Polynomial) -> bool:
    cs = np.asarray(p.coeffs)
    return bool(np.all(cs[:-1] == 0))


# ---- engines --------------------------------------------------------------------------

def _product_pairs(report: Report, gz: GridDomain, gw: GridDomain, probes, targets, lower_fn, cert: str):
    """Certified lower bound vs max of the two factor geodesic upper bounds, per probe/target pair."""
    cap = report.scenario.option("soundness_pairs")
    for p in probes:
        if not (gz.contains(p[0]) and gw.contains(p[1])):
            continue
        tz = [t for t in targets if gz.contains(t[0]) and gw.contains(t[1])]
        if not tz:
            continue
        bz = geodesic_bounds_from(gz, p[0], [t[0] for t in tz])
        bw = geodesic_bounds_from(gw, p[1], [t[1] for t in tz])
        for t, u, v in zip(tz, bz, bw):
            slack = max(cell_slack(gz, [p[0], t[0]]), cell_slack(gw, [p[1], t[1]]))
            report.soundness.append(SoundnessPair(p, t, lower_fn(p, t), cert, max(u.upper, v.upper), slack))
            if len(report.soundness) >= cap:
                return


def _resolvable(grid: GridDomain, z: complex, cells: float = 2.0) -> bool:
    if not grid.contains(z):
        return False
    iy, ix = grid.cell_of(z)
    return float(grid.boundary_dist[iy, ix]) >= cells * grid.cell_diagonal


def run_superattracting(s: Scenario, r: Report) -> None:
    P, Q = s.Ppoly, s.Qpoly
    if not (_is_pure_power(P) and _is_pure_power(Q)):
        raise ScenarioError("the closed-form engine needs P and Q to be pure powers z^m")
    if s.eps <= 0:
        raise ScenarioError("superattracting products need a target eps > 0 (the fixed point has no other preimages)")
    m1, m2 = P.degree, Q.degree
    with _stage(r, "certificates"):
        for d in s.deltas:
            cert = unbounded_certificate_superattracting(m1, m2, s.eps, d, s.Kmax)
            tail = superattracting_tail_bound(m1, m2, s.eps, d, s.Kmax)
            if tail >= cert:
                b = DistanceBound.exact(cert, f"min over depth <= {s.Kmax}; deeper terms >= {tail:.6g}")
            else:
                b = DistanceBound(tail, cert, Certificate.PRODUCT_MAX, "tail bound below the depth <= Kmax minimum")
            r.ladder.append(LadderEntry(d, (1 - d, d), b))
    with _stage(r, "soundness"):
        g = disk_grid(s.resolution)
        r.grids["disk"] = g
        probes = [(1 - d, d) for d in s.deltas if _resolvable(g, 1 - d) and _resolvable(g, d)]
        roots = [s.eps ** (1.0 / m1 ** k) for k in range(4)]
        targets = [(z, w) for z, w in zip(roots, [s.eps ** (1.0 / m2 ** k) for k in range(4)])]
        _product_pairs(r, g, g, probes, targets,
                       lambda p, t: max(disk_distance(p[0], t[0]), disk_distance(p[1], t[1])), "CLOSED_FORM")
    r.overlay["targets"] = targets


def _projection_ladder(s: Scenario, r: Report, m: int, w_probe: complex, geometric_q: bool, tag: str) -> None:
    for d in s.deltas:
        if geometric_q:
            cert = unbounded_certificate_mixed(s.Qpoly, s.eps, d, s.Kmax, m)
        else:
            cert = float(mixed_terms(m, s.eps, d, s.Kmax).min())
        lower = cert
        if s.eps > 0:
            g = _root_gap(s.eps, m, s.Kmax + 1)
            # deeper roots sit closer to the circle than 1 - delta, so the distance grows with depth
            lower = min(cert, radial_distance(d, g)) if g < d else 0.0
        b = DistanceBound(lower, math.inf, Certificate.PROJECTION, tag)
        r.ladder.append(LadderEntry(d, (1 - d, w_probe), b))


def run_mixed(s: Scenario, r: Report) -> None:
    P = s.Ppoly
    if not _is_pure_power(P):
        raise ScenarioError("the projection engine needs P to be a pure power z^m")
    with _stage(r, "certificates"):
        _projection_ladder(s, r, P.degree, 0j, True, "projection to the disk factor")
    with _stage(r, "basin"):
        gq = extract_immediate_basin(s.Qpoly, s.box, s.resolution)
        gz = disk_grid(s.resolution)
        r.grids.update(disk=gz, Q=gq)
    with _stage(r, "soundness"):
        _mixed_pairs(s, r, gz, gq, 0j)


def _mixed_pairs(s: Scenario, r: Report, gz: GridDomain, gq: GridDomain, w_target: complex) -> None:
    m = s.Ppoly.degree
    zt = [0j] if s.eps == 0 else [s.eps ** (1.0 / m ** k) for k in range(4)]
    probes = [(1 - d, w) for d in s.deltas if _resolvable(gz, 1 - d) for w in (w_target, w_target - 0.1)]
    targets = [(z, w_target) for z in zt]
    _product_pairs(r, gz, gq, probes, targets, lambda p, t: disk_distance(p[0], t[0]), "PROJECTION")
    r.overlay["targets"] = targets


def run_parabolic(s: Scenario, r: Report, accept: bool) -> None:
    P = s.Ppoly
    if not _is_pure_power(P):
        raise ScenarioError("the projection engine needs P to be a pure power z^m")
    if classify_fixed_point(P).kind is not FixedPointKind.SUPERATTRACTING:
        raise ScenarioError("parabolic scenarios need a superattracting P and a parabolic Q")
    r.heuristic = True
    seed = complex(s.option("parabolic_seed"))
    with _stage(r, "basin"):
        gq = extract_immediate_basin(s.Qpoly, s.box, s.resolution, seed=seed, heuristic_parabolic=True)
        gz = disk_grid(s.resolution)
        r.grids.update(disk=gz, Q=gq)
        r.extras["parabolic_basin"] = {"seed": [seed.real, seed.imag], "member_cells": int(gq.membership.sum()),
                                       "touches_box_edge": bool(gq.touches_box_edge())}
        r.lemmas.append(LemmaResult("heuristic basin inside the box", not gq.touches_box_edge(),
                                    float(gq.membership.sum()), "HEURISTIC membership"))
    with _stage(r, "certificates"):
        _projection_ladder(s, r, P.degree, seed, False, "projection to the disk factor; HEURISTIC")
    with _stage(r, "soundness"):
        _mixed_pairs(s, r, gz, gq, seed)


def run_geometric(s: Scenario, r: Report) -> None:
    P, Q = s.Ppoly, s.Qpoly
    with _stage(r, "basin"):
        gp = extract_immediate_basin(P, s.box, s.resolution)
        gq = gp if Q == P else extract_immediate_basin(Q, s.box, s.resolution)
        r.grids["P"] = gp
        if gq is not gp:
            r.grids["Q"] = gq
    if s.K < 1:
        raise ScenarioError("the boundedness scan needs K >= 1")
    with _stage(r, "scan"):
        res = boundedness_scan(ProductMap(P, Q), s.K + 2, s.probe_count, gp, gq, seed=s.seed)
    r.scan = res
    ck, ck2 = res.per_depth[s.K - 1], res.per_depth[s.K + 1]
    rel = abs(ck2 - ck) / ck if ck > 0 else 0.0
    r.stabilization = {"K": s.K, "C_K": ck, "C_K_plus_2": ck2, "relative_change": rel,
                       "stabilized": bool(math.isfinite(ck) and rel <= STABILIZATION_TOL),
                       "monotone": bool(ck - ck2 >= 0), "per_depth": list(res.per_depth),
                       "argmax_probe": _pt(res.argmax_probe)}
    r.overlay["tree"] = res.Ptree


def _skew_soundness(s: Scenario, r: Report, fm: SkewMap, w_leaf: complex, lower_fn, cert: str) -> None:
    sl = slice_domain(fm, 0j, s.box, s.resolution)
    r.grids["slice_z0"] = sl
    refs = [w for w in SLICE_REFERENCES if _resolvable(sl, w)]
    cap = s.option("soundness_pairs")
    for off in SLICE_OFFSETS:
        wp = w_leaf - off
        if not _resolvable(sl, wp):
            continue
        for wr, b in zip(refs, geodesic_bounds_from(sl, wp, refs)):
            if wr == wp:
                continue
            r.soundness.append(SoundnessPair((0j, wp), (0j, wr), lower_fn(wp, wr), cert, b.upper,
                                             cell_slack(sl, [wp, wr])))
            if len(r.soundness) >= cap:
                return


def _radius_lemma(r: Report, ok: bool, sup: float, R: float, what: str) -> None:
    r.lemmas.append(LemmaResult(f"sampled sup {what} < R", ok, sup, f"R={R:g}"))


def _tree_ladder(s: Scenario, r: Report, node_logs: np.ndarray, proj: np.ndarray, probe_log: dict, R: float,
                 tail: float, detail: str) -> None:
    """min over tree nodes of max(projection, punctured) lower bounds, capped by the tail bound."""
    lr = math.log(R)
    usable = np.isfinite(node_logs) & (node_logs < lr)
    outside = int(np.sum(np.isfinite(node_logs) & ~usable))
    r.lemmas.append(LemmaResult("tree nodes inside |h| < R", outside == 0, float(outside),
                                "nodes with |h| >= R get no punctured bound"))
    for d in s.deltas:
        lp = probe_log[d]
        if not lp < lr:
            raise ScenarioError(f"probe at delta={d:g} has |h| >= R")
        pun = np.array([punctured_lower_bound_log(lp, lh, R) if ok else 0.0 for lh, ok in zip(node_logs, usable)])
        node_best = float(np.maximum(proj, pun).min())
        r.ladder.append(LadderEntry(d, (0j, complex(1 - d)),
                                    DistanceBound(min(node_best, tail), math.inf, Certificate.PUNCTURED_DISK,
                                                  f"{detail}; nodes={len(node_logs)}; tail={tail:.6g}")))


def run_skew_square(s: Scenario, r: Report) -> None:
    a = s.a
    fm = SkewMap.w2_plus_az(a)
    R = float(s.option("R"))
    G = int(s.option("generations"))
    rng = np.random.default_rng(s.seed)
    with _stage(r, "lamination"):
        fam = iterate_sqrt(a, G)
        mins = [float(np.abs(v).min()) for v in fam.values]
        r.lemmas.append(LemmaResult("min |f_n| >= 2/3", min(mins) >= 2 / 3 - MIN_MODULUS_TOL, min(mins),
                                    f"generations={G}"))
        f0 = complex(fam.evaluate(np.array([0j]))[0])
        r.lemmas.append(LemmaResult("|f_G(0) - 1| <= 1e-6", abs(f0 - 1) <= LIMIT_TOL, abs(f0 - 1)))
        chk = bidisc_check(a, s.option("region_samples"), rng)
        r.lemmas.append(LemmaResult(chk.name, chk.passed, chk.worst_margin, f"samples={chk.samples}"))
        leaf = limit_family(fam)
        move = float(np.max(np.abs(leaf.current - fam.current)))
        r.extras["leaf_vs_last_generation"] = move
        r.overlay["family"] = fam
        r.overlay["leaf"] = leaf
    with _stage(r, "radius"):
        ok, sup = h_radius_check(leaf, fm, R, s.option("radius_samples"), seed=s.seed)
        _radius_lemma(r, ok, sup, R, "|w - f(z)|")
    with _stage(r, "tree"):
        tree = build_tree_2d(fm, (s.eps, 0j), s.K)
        z, w = tree.points[:, 0], tree.points[:, 1]
        if np.any(np.abs(z) > leaf.radius):
            raise DomainError(f"tree leaves the leaf disk |z| <= {leaf.radius}")
        H = w - leaf.evaluate(z)
        r.overlay["tree2d"] = tree
    with _stage(r, "certificates"):
        proj = np.array([disk_distance(0j, zz) for zz in z])
        tail = disk_distance(0j, s.eps ** (1.0 / 2 ** (s.K + 1))) if s.eps > 0 else math.inf
        logs = np.log(np.abs(H))
        _tree_ladder(s, r, logs, proj, {d: math.log(d) for d in s.deltas}, R, tail,
                     "min over nodes of max(PROJECTION, PUNCTURED_DISK through w - f(z))")
        h_ref = float(s.option("reference_h"))
        r.extras["reference_certificates"] = [
            {"delta": d, "reference_h": h_ref,
             "lower": punctured_certificate(leaf, leaf_probe(0j, d), leaf_probe(0j, h_ref), R).lower}
            for d in s.deltas]
        r.extras["min_abs_h_nodes"] = float(np.abs(H).min())
    with _stage(r, "soundness"):
        _skew_soundness(s, r, fm, 1.0 + 0j,
                        lambda wp, wr: punctured_certificate(leaf, (0j, wp), (0j, wr), R).lower, "PUNCTURED_DISK")


def run_skew_general(s: Scenario, r: Report) -> None:
    a = s.a
    fm = SkewMap.w2_plus_az(a)
    n = int(s.option("sheets"))
    eta = float(s.option("eta"))
    R = float(s.option("R")) if "R" in s.options else None
    zmax = eta ** (1.0 / 2 ** n)
    with _stage(r, "lamination"):
        r.lemmas.append(LemmaResult("eta |a| < 3/16", eta * abs(a) < 3 / 16, eta * abs(a),
                                    "base disk of radius eta lies in the square-root regime"))
        leaf = limit_family(iterate_sqrt(a, 3, radius=eta, n_radii=4, n_angles=8))

        def base(u):
            return leaf.evaluate(u)

        r.overlay["leaf"] = leaf
        r.extras["zmax"] = zmax
    with _stage(r, "radius"):
        zs, ws = sample_basin(fm, zmax, s.option("radius_samples"), w_box=2.0, seed=s.seed)
        Gs = sheet_values(a, n, zs, base)
        sup = float(np.abs(ws[None, :] - Gs).prod(axis=0).max()) if zs.size else 0.0
        if R is None:
            R = 1.1 * sup
        _radius_lemma(r, sup < R, sup, R, "|prod_i (w - g_i(z))|")
        wmax = float(np.abs(ws).max()) if zs.size else 0.0
        r.extras["R_triangle"] = (wmax + float(np.abs(Gs).max())) ** (2 ** n) if zs.size else None
    with _stage(r, "tree"):
        tree = build_tree_2d(fm, (s.eps, 0j), s.K)
        z, w = tree.points[:, 0], tree.points[:, 1]
        inside = np.abs(z) < zmax
        logs = np.full(len(z), math.nan)
        for i in np.flatnonzero(inside):
            logs[i] = log_abs_sheet_product(a, n, (z[i], w[i]), base)
        r.overlay["tree2d"] = tree
    with _stage(r, "certificates"):
        proj = np.array([disk_distance(0j, zz) for zz in z])
        tail = disk_distance(0j, s.eps ** (1.0 / 2 ** (s.K + 1))) if s.eps > 0 else math.inf
        probe_log = {d: log_abs_sheet_product(a, n, LeafOffset(0j, complex(-d)), base) for d in s.deltas}
        _tree_ladder(s, r, logs, proj, probe_log, R, tail,
                     f"min over nodes of max(PROJECTION, PUNCTURED_DISK through {2 ** n} sheets)")
        if r.extras["R_triangle"] is not None and s.deltas:
            d = s.deltas[-1]
            lt = math.log(r.extras["R_triangle"])
            pun = [punctured_lower_bound_log(probe_log[d], lh, r.extras["R_triangle"]) for lh in logs[inside]
                   if lh < lt]
            r.extras["certificate_with_R_triangle"] = min(min(pun, default=0.0), tail)
    with _stage(r, "soundness"):
        _skew_soundness(s, r, fm, 1.0 + 0j,
                        lambda wp, wr: product_certificate(a, n, (0j, wp), (0j, wr), R, eta, base).lower,
                        "PUNCTURED_DISK")


def run_skew_quadratic(s: Scenario, r: Report) -> None:
    a, b, c = s.a, s.b, s.c
    fm = SkewMap.w2_cw_bz(a, b, c, warn=False)
    R = float(s.option("R"))
    G = int(s.option("generations"))
    with _stage(r, "lemmas"):
        rep = verify_region_lemmas(a, b, c, s.option("region_samples"), seed=s.seed)
        for chk in rep.checks:
            r.lemmas.append(LemmaResult(chk.name, chk.passed, chk.worst_margin, f"samples={chk.samples}"))
        r.extras["hierarchy"] = dict(rep.hierarchy)
        sh = w_shrinkage_report(a, b, c, seed=s.seed)
        r.extras["shrinkage"] = {"min_abs_w": sh.min_abs_w, "empirical_L": sh.empirical_L,
                                 "ratio_tail": sh.ratio_tail, "slope_at_origin": abs(b / (a - c))}
    with _stage(r, "lamination"):
        fam = iterate_quadratic(a, b, c, G)
        nt = int(s.option("theta_count"))
        failures = []
        for th in 2 * np.pi * np.arange(nt) / nt:
            try:
                iterate_quadratic(a, b, c, G, theta=float(th), n_radii=8, n_angles=32)
            except LaminationError as exc:
                failures.append(f"theta={th:.4f}: {exc.code}")
        r.lemmas.append(LemmaResult(f"transport {G} generations without collapse", not failures,
                                    float(len(failures)), f"start angles={nt}; " + "; ".join(failures)))
        leaf = limit_family(fam)
        r.extras["leaf_vs_last_generation"] = float(np.max(np.abs(leaf.current - fam.current)))
        r.overlay["family"] = fam
        r.overlay["leaf"] = leaf
        f0 = complex(leaf.evaluate(np.array([0j]))[0])
    with _stage(r, "basin"):
        gp = extract_immediate_basin(Polynomial([0, a, 1]), s.box, s.resolution)
        r.grids["P"] = gp
        zr = float(np.abs(gp.centers()[gp.membership]).max()) + gp.cell_diagonal
    with _stage(r, "radius"):
        ok, sup = h_radius_check(leaf, fm, R, s.option("radius_samples"), seed=s.seed, z_radius=zr)
        _radius_lemma(r, ok, sup, R, "|w - f(z)|")
    with _stage(r, "tree"):
        tree = build_tree_2d(fm, (s.eps, 0j), s.K)
        z, w = tree.points[:, 0], tree.points[:, 1]
        H = w - leaf.evaluate(z)
        r.overlay["tree2d"] = tree
    with _stage(r, "certificates"):
        logs = np.log(np.abs(H))
        # no projection bound on the z factor here, so the certificate covers depth <= K only
        _tree_ladder(s, r, logs, np.zeros(len(z)), {d: math.log(d) for d in s.deltas}, R, math.inf,
                     f"min over depth <= {s.K} nodes of PUNCTURED_DISK through w - f(z)")
        for e in r.ladder:
            e.probe = (0j, f0 - e.delta)
        r.extras["min_abs_h_nodes"] = float(np.abs(H).min())
    with _stage(r, "soundness"):
        _skew_soundness(s, r, fm, f0,
                        lambda wp, wr: punctured_certificate(leaf, (0j, wp), (0j, wr), R).lower, "PUNCTURED_DISK")


# ---- verdict ----------------------------------------------------------------------------

def decide(r: Report) -> tuple[str, str]:
    s = r.scenario
    failed = [m.name for m in r.lemmas if not m.passed]
    if r.heuristic and not r.accept_heuristic:
        return INCONCLUSIVE, "parabolic membership is heuristic; pass --accept-heuristic-parabolic to use it"
    if failed:
        return INCONCLUSIVE, "failed checks: " + ", ".join(failed)
    if r.engine == "geometric":
        st = r.stabilization
        if math.isfinite(st["C_K"]) and st["stabilized"]:
            return BOUNDED, f"C_hat_{st['K']} = {st['C_K']:.6g} stabilized (relative change {st['relative_change']:.3g})"
        return INCONCLUSIVE, f"C_hat_K did not stabilize (relative change {st['relative_change']:.3g})"
    top = max(s.thresholds)
    if r.best_lower > top:
        tag = " (HEURISTIC)" if r.heuristic else ""
        return UNBOUNDED, f"certified lower bound {r.best_lower:.6g} exceeds C = {top:g}{tag}"
    return INCONCLUSIVE, f"best certified lower bound {r.best_lower:.6g} does not exceed C = {top:g}"


ENGINES = {
    "superattracting": run_superattracting,
    "geometric": run_geometric,
    "mixed": run_mixed,
    "skew_square": run_skew_square,
    "skew_general": run_skew_general,
    "skew_quadratic": run_skew_quadratic,
}


def run_scenario(s: Scenario, accept_heuristic_parabolic: bool = False) -> Report:
    engine = engine_for(s)
    r = Report(s, engine, accept_heuristic=accept_heuristic_parabolic)
    t0 = time.perf_counter()
    if engine == "parabolic":
        run_parabolic(s, r, accept_heuristic_parabolic)
    else:
        ENGINES[engine](s, r)
    r.verdict, r.reason = decide(r)
    r.timing["total"] = time.perf_counter() - t0
    return r
