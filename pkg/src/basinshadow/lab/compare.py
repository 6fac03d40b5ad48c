"""Regression comparison of two report.txt files."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

DRIFT_TOL = 1e-9


class CompareError(ValueError):
    """The two reports do not describe the same scenario."""


@dataclass
class DriftSummary:
    name: str
    same_seed: bool
    max_drift: float
    C_hat_drift: float | None
    items: list[tuple[str, float]] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.same_seed and self.max_drift > DRIFT_TOL

    def lines(self) -> list[str]:
        out = [f"scenario {self.name}; same seed: {self.same_seed}"]
        if self.C_hat_drift is not None:
            out.append(f"C_hat drift: {self.C_hat_drift:.3e}")
        out += [f"{k}: {v:.3e}" for k, v in self.items]
        out.append(f"max relative drift: {self.max_drift:.3e} ({'FAIL' if self.failed else 'ok'})")
        return out


def load_report(path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "report.txt"
    return json.loads(p.read_text())


def rel_drift(x: float, y: float) -> float:
    if x == y:
        return 0.0
    if not (math.isfinite(x) and math.isfinite(y)):
        return math.inf
    return abs(x - y) / max(abs(x), abs(y))


def compare_runs(r1: dict, r2: dict) -> DriftSummary:
    s1, s2 = r1["scenario"], r2["scenario"]
    if s1["name"] != s2["name"]:
        raise CompareError(f"scenario names differ: {s1['name']} vs {s2['name']}")
    if s1["map"] != s2["map"]:
        raise CompareError("map specifications differ")
    items = []
    ch = None
    if r1.get("scan") and r2.get("scan"):
        ch = rel_drift(r1["scan"]["C_K"], r2["scan"]["C_K"])
        items.append(("C_hat_K", ch))
        for k, (x, y) in enumerate(zip(r1["scan"]["per_depth"], r2["scan"]["per_depth"]), start=1):
            items.append((f"C_hat_{k}", rel_drift(x, y)))
    if len(r1["ladder"]) != len(r2["ladder"]):
        raise CompareError("probe ladders differ")
    for e1, e2 in zip(r1["ladder"], r2["ladder"]):
        if e1["delta"] != e2["delta"]:
            raise CompareError("probe ladders differ")
        items.append((f"lower(delta={e1['delta']:.3g})", rel_drift(e1["lower"], e2["lower"])))
    return DriftSummary(s1["name"], s1["seed"] == s2["seed"], max((v for _, v in items), default=0.0), ch, items)
