import json
import math
import re

import pytest
import yaml

from basinshadow.hypmetric import LOWER_BOUND_CERTIFICATES
from basinshadow.lab import (
    BOUNDED,
    INCONCLUSIVE,
    PRESETS,
    UNBOUNDED,
    CompareError,
    ScenarioError,
    StageError,
    compare_runs,
    emit_report,
    load_report,
    load_scenario,
    run_scenario,
)
from basinshadow.lab.cli import main
from basinshadow.lab.report import report_text
from basinshadow.lab.scenario import engine_for, expand_ladder, scenario_from_dict
from basinshadow.shadow import SCAN_CSV_COLUMNS

EXPECTED = {
    "THM31_SUPER": UNBOUNDED,
    "THM32_GEOM": BOUNDED,
    "THM33_MIXED_SUPER_GEOM": UNBOUNDED,
    "THM33_PARABOLIC": INCONCLUSIVE,
    "THM41_SKEW_SQUARE": UNBOUNDED,
    "THM41_GENERAL_A": UNBOUNDED,
    "THM42_SKEW_QUADRATIC": UNBOUNDED,
}


def _doc(name="THM42_SKEW_QUADRATIC"):
    return yaml.safe_load(PRESETS[name])


# ---- scenarios ------------------------------------------------------------------

def test_seven_presets():
    assert sorted(PRESETS) == sorted(EXPECTED)
    for name in PRESETS:
        assert load_scenario(name).name == name


def test_engine_dispatch():
    got = {name: engine_for(load_scenario(name)) for name in PRESETS}
    assert got == {"THM31_SUPER": "superattracting", "THM32_GEOM": "geometric", "THM33_MIXED_SUPER_GEOM": "mixed",
                   "THM33_PARABOLIC": "parabolic", "THM41_SKEW_SQUARE": "skew_square",
                   "THM41_GENERAL_A": "skew_general", "THM42_SKEW_QUADRATIC": "skew_quadratic"}


def test_round_trip():
    for name in PRESETS:
        s = load_scenario(name)
        again = scenario_from_dict(s.to_dict())
        assert again.to_dict() == s.to_dict()


def test_ladder_expansion():
    lad = expand_ladder({"base": 2, "start": 3, "stop": 40})
    assert len(lad) == 38 and lad[0] == 0.125 and lad[-1] == 2.0 ** -40
    assert expand_ladder([1e-3, 1e-9]) == [1e-3, 1e-9]


def test_complex_strings():
    d = _doc("THM41_SKEW_SQUARE")
    d["map"]["a"] = "0.05-0.02j"
    assert load_scenario(yaml.safe_dump(d)).a == 0.05 - 0.02j


@pytest.mark.parametrize("edit", [
    lambda d: d.update(schema_version=2),
    lambda d: d.update(thresholds=[3, 3, 8]),
    lambda d: d.update(thresholds=[5, 3]),
    lambda d: d.update(colour="red"),
    lambda d: d["map"].update(P=[0, 0, 1]),
    lambda d: d["map"].pop("b"),
    lambda d: d["map"].update(family="HENON"),
    lambda d: d["map"].update(a="not a number"),
    lambda d: d["grid"].update(box=[1, -1, -1, 1]),
    lambda d: d["grid"].update(resolution=4),
    lambda d: d["probes"].update(delta_ladder=[0.7]),
    lambda d: d["probes"].update(delta_ladder={"base": 2}),
    lambda d: d["target"].update(eps=1.5),
    lambda d: d.update(options={"unknown": 1}),
    lambda d: d.pop("name"),
])
def test_validation_errors(edit):
    d = _doc()
    edit(d)
    with pytest.raises(ScenarioError):
        scenario_from_dict(d)


def test_product_validation():
    d = _doc("THM32_GEOM")
    d["map"]["P"] = [0, 0.3]
    with pytest.raises(ScenarioError):
        scenario_from_dict(d)
    d = _doc("THM32_GEOM")
    d["map"]["P"] = [0, 1.5, 1]
    with pytest.raises(ScenarioError):
        engine_for(scenario_from_dict(d))


def test_missing_file():
    with pytest.raises(ScenarioError):
        load_scenario("/nonexistent/scenario.yaml")


# ---- runs ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_preset_verdicts(name, preset_report):
    r = preset_report(name)
    assert r.verdict == EXPECTED[name], r.reason


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_unbounded_needs_lower_certificate(name, preset_report):
    r = preset_report(name)
    if r.verdict == UNBOUNDED:
        top = max(r.scenario.thresholds)
        assert any(e.bound.certificate in LOWER_BOUND_CERTIFICATES and e.bound.lower > top for e in r.ladder)
    if r.verdict == BOUNDED:
        assert r.stabilization["stabilized"] and math.isfinite(r.C_hat)


def test_parabolic_flag(preset_report):
    r = preset_report("THM33_PARABOLIC", accept=True)
    assert r.heuristic and r.verdict == UNBOUNDED and "HEURISTIC" in r.reason
    assert all("HEURISTIC" in e.bound.detail for e in r.ladder)


def test_geometric_report_fields(preset_report):
    r = preset_report("THM32_GEOM")
    st = r.stabilization
    assert st["K"] == 10 and len(st["per_depth"]) == 12
    assert st["C_K"] == st["per_depth"][9] and st["monotone"]
    assert st["relative_change"] <= 0.1


def test_skew_report_numbers(preset_report):
    r = preset_report("THM41_SKEW_SQUARE")
    lowers = [e.bound.lower for e in r.ladder]
    assert all(b > a for a, b in zip(lowers, lowers[1:]))
    refs = [x["lower"] for x in r.extras["reference_certificates"]]
    assert all(b > a for a, b in zip(refs, refs[1:]))
    assert r.extras["min_abs_h_nodes"] > 0
    q = preset_report("THM42_SKEW_QUADRATIC")
    assert [m.passed for m in q.lemmas] == [True] * len(q.lemmas)
    assert q.ladder[0].probe[1] == pytest.approx(0.99 - 1e-3, abs=1e-12)


def test_general_a_records_conservative_radius(preset_report):
    r = preset_report("THM41_GENERAL_A")
    assert r.extras["R_triangle"] > 1e3
    assert r.extras["certificate_with_R_triangle"] < r.best_lower


def test_stage_named_on_failure():
    d = _doc("THM41_GENERAL_A")
    d["options"]["eta"] = 0.9
    with pytest.raises(StageError) as ei:
        run_scenario(scenario_from_dict(d))
    assert ei.value.stage == "lamination"


def test_bad_map_gives_inconclusive():
    d = _doc()
    d["map"]["b"] = 0.3
    d["options"]["theta_count"] = 2
    r = run_scenario(scenario_from_dict(d))
    assert r.verdict == INCONCLUSIVE
    assert not all(m.passed for m in r.lemmas)


# ---- reports -----------------------------------------------------------------------

def test_report_deterministic(tmp_path):
    s = load_scenario("THM41_SKEW_SQUARE")
    a, b = run_scenario(s), run_scenario(s)
    assert report_text(a) == report_text(b)
    fa = emit_report(a, tmp_path / "a")
    fb = emit_report(b, tmp_path / "b")
    for x, y in zip(fa, fb):
        if x.name != "timing.json":
            assert x.read_bytes() == y.read_bytes(), x.name


def test_report_json_order(preset_report):
    d = json.loads(report_text(preset_report("THM31_SUPER")))
    assert list(d)[:6] == ["artifact", "scenario", "engine", "heuristic", "accept_heuristic_parabolic", "verdict"]
    assert "timing" not in d


def test_csv_rows(preset_report, tmp_path):
    r = preset_report("THM32_GEOM")
    emit_report(r, tmp_path)
    lines = (tmp_path / "probes.csv").read_text().splitlines()
    assert lines[0] == ",".join(SCAN_CSV_COLUMNS)
    assert len(lines) - 1 == r.scenario.probe_count
    r = preset_report("THM31_SUPER")
    emit_report(r, tmp_path / "s")
    assert len((tmp_path / "s" / "probes.csv").read_text().splitlines()) - 1 == len(r.scenario.deltas)


def test_svg_tree_depths(preset_report, tmp_path):
    r = preset_report("THM32_GEOM")
    emit_report(r, tmp_path)
    svg = (tmp_path / "basin_P.svg").read_text()
    ids = re.findall(r'id="tree-depth-(\d+)"', svg)
    assert sorted(map(int, ids)) == list(range(r.scenario.K + 1))
    for k in range(r.scenario.K + 1):
        block = svg.split(f'id="tree-depth-{k}"', 1)[1].split("</g>", 1)[0]
        assert block.count("<path") + block.count("<use") >= 1
    assert (tmp_path / "grid_P.pgm").read_bytes().startswith(b"P5")


# ---- compare ------------------------------------------------------------------------

def test_compare_identical(preset_report):
    d = json.loads(report_text(preset_report("THM32_GEOM")))
    out = compare_runs(d, d)
    assert out.max_drift == 0 and not out.failed


def test_compare_drift_and_seed(preset_report):
    d1 = json.loads(report_text(preset_report("THM31_SUPER")))
    d2 = json.loads(report_text(preset_report("THM31_SUPER")))
    d2["ladder"][3]["lower"] *= 1 + 1e-6
    assert compare_runs(d1, d2).failed
    d2["scenario"]["seed"] = 5
    assert not compare_runs(d1, d2).failed


def test_compare_rejects_other_map(preset_report):
    d1 = json.loads(report_text(preset_report("THM32_GEOM")))
    d2 = json.loads(report_text(preset_report("THM32_GEOM")))
    d2["scenario"]["map"]["P"] = [0.0, 0.25, 1.0]
    with pytest.raises(CompareError):
        compare_runs(d1, d2)
    with pytest.raises(CompareError):
        compare_runs(d1, json.loads(report_text(preset_report("THM31_SUPER"))))


def test_resolution_drift(preset_report):
    # the deepest scanned level agrees across resolutions; shallower levels still move
    d = _doc("THM32_GEOM")
    d["grid"]["resolution"] = 1024
    fine = run_scenario(scenario_from_dict(d))
    coarse = preset_report("THM32_GEOM")
    a, b = coarse.stabilization["per_depth"][-1], fine.stabilization["per_depth"][-1]
    assert abs(a - b) / a <= 0.1
    out = compare_runs(json.loads(report_text(coarse)), json.loads(report_text(fine)))
    assert dict(out.items)["C_hat_12"] <= 0.1


# ---- CLI ----------------------------------------------------------------------------

def test_cli_run_and_compare(tmp_path, capsys):
    assert main(["run", "THM31_SUPER", "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "THM31_SUPER", "--out", str(tmp_path / "b")]) == 0
    assert main(["compare", str(tmp_path / "a"), str(tmp_path / "b" / "report.txt")]) == 0
    d = load_report(tmp_path / "b")
    d["ladder"][0]["lower"] += 1.0
    (tmp_path / "c").mkdir()
    (tmp_path / "c" / "report.txt").write_text(json.dumps(d))
    assert main(["compare", str(tmp_path / "a"), str(tmp_path / "c")]) == 4
    assert "UNBOUNDED_EVIDENCE" in capsys.readouterr().out


def test_cli_seed_override(tmp_path):
    assert main(["run", "THM41_SKEW_SQUARE", "--out", str(tmp_path), "--seed", "9"]) == 0
    assert load_report(tmp_path)["scenario"]["seed"] == 9


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\nname: x\nmap: {family: PRODUCT, P: [0, 0, 1]}\n")
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 2
    d = _doc("THM41_GENERAL_A")
    d["options"]["eta"] = 0.9
    f = tmp_path / "eta.yaml"
    f.write_text(yaml.safe_dump(d))
    assert main(["run", str(f), "--out", str(tmp_path / "o")]) == 3
    assert "lamination" in capsys.readouterr().err


def test_cli_presets(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in PRESETS)
    assert main(["presets", "THM32_GEOM"]) == 0
    assert load_scenario(capsys.readouterr().out).name == "THM32_GEOM"
    assert main(["presets", "NOPE"]) == 2
