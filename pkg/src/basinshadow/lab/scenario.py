"""Scenario files: a small YAML document with a versioned schema.

Grammar (all keys lower case; complex numbers are numbers or strings such as
"0.1-0.2j"; polynomial coefficients are listed in ascending order of power)::

    schema_version: 1
    name: <identifier>
    description: <free text, optional>
    map:
      family: PRODUCT | SKEW_W2_PLUS_AZ | SKEW_W2_CW_BZ
      P: [c0, c1, ...]          # PRODUCT only
      Q: [c0, c1, ...]          # PRODUCT only
      a: <complex>              # skew families
      b: <complex>              # SKEW_W2_CW_BZ
      c: <complex>              # SKEW_W2_CW_BZ
    target:
      eps: <real in [0, 1)>     # shadow target (eps, eps) or (eps, 0); 0 means the fixed point
    depth:
      K: <int>                  # preimage tree depth
      Kmax: <int>               # closed-form certificate depth
    probes:
      delta_ladder: [d1, d2, ...] | {base: 2, start: 3, stop: 40}
      count: <int>              # stratified grid probes
    thresholds: [C1, C2, ...]   # strictly increasing
    grid:
      box: [xmin, xmax, ymin, ymax]
      resolution: <int>
    seed: <int>
    options: {...}              # engine-specific, see OPTION_DEFAULTS
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from ..dynsys import FixedPointKind, classify_fixed_point
from ..polycore import Polynomial

SCHEMA_VERSION = 1
FAMILIES = ("PRODUCT", "SKEW_W2_PLUS_AZ", "SKEW_W2_CW_BZ")
OPTION_DEFAULTS: dict[str, Any] = {
    "R": 2.0,
    "reference_h": 0.3,
    "generations": 25,
    "sheets": 4,
    "eta": 0.2,
    "parabolic_seed": -0.5,
    "theta_count": 32,
    "region_samples": 100_000,
    "radius_samples": 20_000,
    "soundness_pairs": 12,
}


class ScenarioError(ValueError):
    """Invalid scenario document (CLI exit status 2)."""


def _complex(v, where: str) -> complex:
    try:
        if isinstance(v, str):
            return complex(v.replace(" ", ""))
        return complex(v)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: cannot read {v!r} as a complex number") from exc


def _complex_out(v: complex):
    v = complex(v)
    return v.real if v.imag == 0 else f"{v.real!r}{v.imag:+}j"


@dataclass
class Scenario:
    name: str
    family: str
    P: Optional[tuple[complex, ...]] = None
    Q: Optional[tuple[complex, ...]] = None
    a: complex = 0j
    b: complex = 0j
    c: complex = 0j
    eps: float = 0.01
    K: int = 8
    Kmax: int = 60
    deltas: list[float] = field(default_factory=list)
    probe_count: int = 200
    thresholds: list[float] = field(default_factory=lambda: [3.0, 5.0, 8.0])
    box: tuple[float, float, float, float] = (-1.05, 1.05, -1.05, 1.05)
    resolution: int = 512
    seed: int = 0
    options: dict[str, Any] = field(default_factory=dict)
    description: str = ""
    ladder_spec: Any = None

    def option(self, key: str):
        return self.options.get(key, OPTION_DEFAULTS[key])

    @property
    def Ppoly(self) -> Polynomial:
        return Polynomial(self.P)

    @property
    def Qpoly(self) -> Polynomial:
        return Polynomial(self.Q)

    def map_signature(self) -> dict:
        if self.family == "PRODUCT":
            return {"family": self.family, "P": [_complex_out(c) for c in self.P],
                    "Q": [_complex_out(c) for c in self.Q]}
        sig = {"family": self.family, "a": _complex_out(self.a)}
        if self.family == "SKEW_W2_CW_BZ":
            sig.update(b=_complex_out(self.b), c=_complex_out(self.c))
        return sig

    def to_dict(self) -> dict:
        """Canonical echo, stable key order."""
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "description": self.description,
            "map": self.map_signature(),
            "target": {"eps": self.eps},
            "depth": {"K": self.K, "Kmax": self.Kmax},
            "probes": {"delta_ladder": self.ladder_spec if self.ladder_spec is not None else list(self.deltas),
                       "count": self.probe_count},
            "thresholds": list(self.thresholds),
            "grid": {"box": list(self.box), "resolution": self.resolution},
            "seed": self.seed,
            "options": {k: self.options[k] for k in sorted(self.options)},
        }

    def with_seed(self, seed: int) -> "Scenario":
        s = copy.deepcopy(self)
        s.seed = int(seed)
        return s


def expand_ladder(spec) -> list[float]:
    if spec is None:
        return []
    if isinstance(spec, dict):
        try:
            base, start, stop = float(spec["base"]), int(spec["start"]), int(spec["stop"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError("delta_ladder mapping needs base, start, stop") from exc
        if base <= 1 or stop < start:
            raise ScenarioError("delta_ladder needs base > 1 and stop >= start")
        return [base ** -j for j in range(start, stop + 1)]
    if isinstance(spec, (list, tuple)):
        return [float(d) for d in spec]
    raise ScenarioError("delta_ladder must be a list or a {base, start, stop} mapping")


def _section(doc: dict, key: str) -> dict:
    v = doc.get(key, {})
    if v is None:
        return {}
    if not isinstance(v, dict):
        raise ScenarioError(f"'{key}' must be a mapping")
    return v


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ScenarioError(f"schema_version must be {SCHEMA_VERSION}")
    known = {"schema_version", "name", "description", "map", "target", "depth", "probes", "thresholds", "grid",
             "seed", "options"}
    extra = set(doc) - known
    if extra:
        raise ScenarioError(f"unknown keys: {', '.join(sorted(extra))}")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioError("name is required")
    m = _section(doc, "map")
    family = m.get("family")
    if family not in FAMILIES:
        raise ScenarioError(f"map.family must be one of {', '.join(FAMILIES)}")
    s = Scenario(name=name, family=family, description=str(doc.get("description", "")))
    if family == "PRODUCT":
        for key in ("P", "Q"):
            cs = m.get(key)
            if not isinstance(cs, list) or len(cs) < 3:
                raise ScenarioError(f"map.{key} must list at least three coefficients (degree >= 2)")
            setattr(s, key, tuple(_complex(c, f"map.{key}") for c in cs))
        if set(m) - {"family", "P", "Q"}:
            raise ScenarioError("PRODUCT maps take only P and Q")
    else:
        need = ("a",) if family == "SKEW_W2_PLUS_AZ" else ("a", "b", "c")
        for key in need:
            if key not in m:
                raise ScenarioError(f"map.{key} is required for {family}")
            setattr(s, key, _complex(m[key], f"map.{key}"))
        if set(m) - {"family", *need}:
            raise ScenarioError(f"{family} takes only {', '.join(need)}")
    s.eps = float(_section(doc, "target").get("eps", s.eps))
    depth = _section(doc, "depth")
    s.K = int(depth.get("K", s.K))
    s.Kmax = int(depth.get("Kmax", s.Kmax))
    probes = _section(doc, "probes")
    s.ladder_spec = probes.get("delta_ladder")
    s.deltas = expand_ladder(s.ladder_spec)
    s.probe_count = int(probes.get("count", s.probe_count))
    s.thresholds = [float(c) for c in doc.get("thresholds", s.thresholds)]
    grid = _section(doc, "grid")
    s.box = tuple(float(v) for v in grid.get("box", s.box))
    s.resolution = int(grid.get("resolution", s.resolution))
    s.seed = int(doc.get("seed", 0))
    s.options = dict(_section(doc, "options"))
    validate(s)
    return s


def validate(s: Scenario) -> None:
    unknown = set(s.options) - set(OPTION_DEFAULTS)
    if unknown:
        raise ScenarioError(f"unknown options: {', '.join(sorted(unknown))}")
    if not s.thresholds or any(c <= 0 for c in s.thresholds):
        raise ScenarioError("thresholds must be positive")
    if any(b <= a for a, b in zip(s.thresholds, s.thresholds[1:])):
        raise ScenarioError("thresholds must be strictly increasing")
    if len(s.box) != 4 or not (s.box[0] < s.box[1] and s.box[2] < s.box[3]):
        raise ScenarioError("grid.box must be [xmin, xmax, ymin, ymax] with xmin < xmax, ymin < ymax")
    if not 16 <= s.resolution <= 4096:
        raise ScenarioError("grid.resolution must lie in [16, 4096]")
    if s.K < 0 or s.Kmax < 0:
        raise ScenarioError("depths must be nonnegative")
    if not 0 <= s.eps < 1:
        raise ScenarioError("target.eps must lie in [0, 1)")
    if any(not 0 < d < 0.5 for d in s.deltas):
        raise ScenarioError("every delta must lie in (0, 1/2)")
    if s.probe_count < 0:
        raise ScenarioError("probes.count must be nonnegative")
    if s.family == "PRODUCT":
        for key in ("P", "Q"):
            try:
                classify_fixed_point(Polynomial(getattr(s, key)))
            except ValueError as exc:
                raise ScenarioError(f"map.{key}: {exc}") from exc
    elif s.family == "SKEW_W2_PLUS_AZ":
        if s.a == 0:
            raise ScenarioError("map.a must be nonzero")
    elif 0 in (s.a, s.b, s.c):
        raise ScenarioError("map.a, map.b, map.c must be nonzero")


def engine_for(s: Scenario) -> str:
    """Which certificate engine a scenario runs, read off the map."""
    if s.family == "SKEW_W2_PLUS_AZ":
        return "skew_square" if abs(s.a) < 3 / 16 else "skew_general"
    if s.family == "SKEW_W2_CW_BZ":
        return "skew_quadratic"
    kp = classify_fixed_point(s.Ppoly).kind
    kq = classify_fixed_point(s.Qpoly).kind
    S, G, Pb = FixedPointKind.SUPERATTRACTING, FixedPointKind.GEOMETRIC, FixedPointKind.PARABOLIC
    if FixedPointKind.OTHER in (kp, kq):
        raise ScenarioError("fixed point (0, 0) is not attracting or parabolic")
    if Pb in (kp, kq):
        return "parabolic"
    if kp is S and kq is S:
        return "superattracting"
    if kp is G and kq is G:
        return "geometric"
    if kp is S and kq is G:
        return "mixed"
    raise ScenarioError("mixed products must put the superattracting map first (P)")


def load_scenario(path_or_text) -> Scenario:
    """Read a scenario from a file path, a preset name, or YAML text."""
    from .presets import PRESETS

    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        key = str(path_or_text)
        if key in PRESETS:
            text = PRESETS[key]
        else:
            p = Path(key)
            if not p.is_file():
                raise ScenarioError(f"no scenario file or preset named {key!r}")
            text = p.read_text()
    else:
        text = path_or_text
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}") from exc
    return scenario_from_dict(doc)
