import contextlib
import csv
import io
import json
import math
import re
import sys
import warnings
from pathlib import Path

import numpy as np
import pytest

from pivotplan.cli import main
from pivotplan.pipeline import plan
from pivotplan.scenario_io import (
    NormalizationWarning,
    ScenarioError,
    dump_document,
    export_plan,
    load_scenario,
    parse_scenario,
    save_scenario,
)

from conftest import DATA, fixture_path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "scripts"))
import make_golden  # noqa: E402

GOLDEN = ROOT / "tests" / "golden"


def minimal_doc():
    return {
        "object": {"half_extents": [0.1, 0.1, 0.1]},
        "poses": {
            "C_O": {"position": [0.5, 0, 0.1], "quaternion": [1, 0, 0, 0]},
            "C_F": {"position": [0.5, 0, 0.1], "quaternion": [1, 0, 0, 0]},
        },
        "arms": [{
            "joints": [{"axis": [0, 0, 1], "point": [0, 0, 0]}, {"axis": [0, 0, 1], "point": [1, 0, 0]}],
            "home_pose": {"position": [2, 0, 0], "quaternion": [1, 0, 0, 0]},
            "theta0": [0, 0],
        }],
    }


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_minimal_file_gets_defaults(tmp_path):
    sc = load_scenario(write(tmp_path, minimal_doc()))
    assert sc.beta == pytest.approx(math.radians(10))
    assert sc.alpha_max == pytest.approx(math.radians(35))
    assert sc.k_max == 10
    assert sc.policy.dtheta_max == pytest.approx(math.radians(2))
    assert sc.policy.dd_max == 0.005
    assert sc.arms[0].model.name == "arm0"
    assert np.allclose(sc.arms[0].model.joint_limits, [[-math.pi, math.pi]] * 2)


def test_non_unit_quaternion_is_normalized_with_warning(tmp_path):
    doc = minimal_doc()
    doc["poses"]["C_O"]["quaternion"] = [1.001, 0, 0, 0]
    with pytest.warns(NormalizationWarning, match="poses/C_O"):
        sc = load_scenario(write(tmp_path, doc))
    assert sc.document["poses"]["C_O"]["quaternion"] == [1.0, 0.0, 0.0, 0.0]


def test_tiny_quaternion_correction_is_silent(tmp_path):
    doc = minimal_doc()
    doc["poses"]["C_O"]["quaternion"] = [1 + 1e-9, 0, 0, 0]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        load_scenario(write(tmp_path, doc))


def test_missing_arms_names_the_field(tmp_path):
    doc = minimal_doc()
    del doc["arms"]
    with pytest.raises(ScenarioError, match="arms"):
        load_scenario(write(tmp_path, doc))


def test_schema_error_reports_field_path(tmp_path):
    doc = minimal_doc()
    doc["arms"][0]["joints"][1]["axis"] = [0, 1]
    with pytest.raises(ScenarioError, match="arms/0/joints/1/axis"):
        load_scenario(write(tmp_path, doc))


def test_parse_error_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "object": {\n    "half_extents": [0.1, 0.1,]\n  }\n}\n')
    with pytest.raises(ScenarioError, match="line 3"):
        load_scenario(p)


def test_invariant_failures_are_reported(tmp_path):
    doc = minimal_doc()
    doc["arms"][0]["theta0"] = [0]
    with pytest.raises(ScenarioError, match="theta0"):
        load_scenario(write(tmp_path, doc))
    doc = minimal_doc()
    doc["interpolation"] = {"steps": 1}
    with pytest.raises(ScenarioError, match="steps"):
        load_scenario(write(tmp_path, doc))


def test_missing_file_is_an_input_error(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "nope.json")


@pytest.mark.parametrize("name", sorted(p.stem for p in DATA.glob("*.json")))
def test_scenario_roundtrip_is_exact(tmp_path, name):
    sc = load_scenario(fixture_path(name))
    out = tmp_path / "again.json"
    save_scenario(sc, out)
    again = load_scenario(out)
    assert again.document == sc.document
    assert out.read_text() == dump_document(sc.document)


def test_one_segment_two_samples(tmp_path):
    doc = json.loads(fixture_path("arm7_tip").read_text())
    doc["interpolation"] = {"steps": 2}
    sc = parse_scenario(doc)
    r = plan(sc)
    files = export_plan(r, tmp_path)
    rows = list(csv.reader((tmp_path / "object_poses.csv").open()))
    assert rows[0] == ["index", "tau", "px", "py", "pz", "qw", "qx", "qy", "qz", "stage"]
    assert len(rows) == 3
    for f in files:
        if f.suffix == ".csv" and f.name != "diagnostics.csv":
            assert len(list(csv.reader(f.open()))) == 3


def test_export_is_idempotent_and_17_digit(tmp_path):
    r = plan(load_scenario(fixture_path("planar3_tip")))
    export_plan(r, tmp_path / "a")
    export_plan(r, tmp_path / "b")
    export_plan(r, tmp_path / "b")
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    rows = list(csv.reader((tmp_path / "a" / "object_poses.csv").open()))
    for row, D in zip(rows[1:], r.object_poses):
        vals = np.array([float(v) for v in row[2:9]])
        assert np.array_equal(vals, np.r_[D.translation(), D.rotation.as_array()])


def test_summary_lists_solver_angles_exactly(tmp_path):
    sc = load_scenario(fixture_path("walk_gait"))
    r = plan(sc)
    export_plan(r, tmp_path)
    text = (tmp_path / "plan_summary.txt").read_text()
    line = next(l for l in text.splitlines() if l.startswith("gait alpha_deg:"))
    vals = [float(v) for v in line.split(":")[1].split()]
    assert len(vals) == 4
    assert vals == [math.degrees(a) for a in r.gait.alphas]
    assert "case: CaseII" in text and "gait k: 4" in text


def test_export_to_unwritable_location_names_the_path(tmp_path):
    r = plan(load_scenario(fixture_path("planar3_tip")))
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        export_plan(r, blocker / "sub")


# ---------------------------------------------------------------- CLI


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


def test_check_valid_fixture():
    code, out, _ = run_cli(["check", str(fixture_path("arm7_tip"))])
    assert code == 0 and "case: CaseI" in out


def test_gait_prints_k_and_four_angles():
    code, out, _ = run_cli(["gait", str(fixture_path("walk_gait"))])
    assert code == 0
    assert "k=4" in out
    assert len(re.findall(r"^alpha_\d_deg=", out, re.M)) == 4


def test_infeasible_gait_exits_one():
    code, _, err = run_cli(["plan", str(fixture_path("walk_infeasible"))])
    assert code == 1 and "no feasible gait" in err


def test_input_errors_exit_two(tmp_path):
    assert run_cli(["check", str(tmp_path / "missing.json")])[0] == 2
    assert run_cli(["plan"])[0] == 2
    assert run_cli(["frobnicate"])[0] == 2
    assert run_cli(["check", str(fixture_path("arm7_tip")), "--bogus"])[0] == 2
    assert run_cli(["sclerp", "--from", "0,0,0", "--to", "0,0,0,1,0,0,0", "--steps", "3"])[0] == 2
    assert run_cli(["sclerp", "--from", "0,0,0,1,0,0,0", "--to", "0,0,0,1,0,0,0", "--steps", "1"])[0] == 2
    assert run_cli(["rmrc", str(fixture_path("arm7_tip")), "--arm", "3"])[0] == 2


def test_tracking_failure_exits_one_and_writes_partial(tmp_path):
    doc = json.loads(fixture_path("arm7_tip").read_text())
    th0 = doc["arms"][0]["theta0"]
    doc["arms"][0]["limits"] = [[t - 3.0, t + 3.0] for t in th0]
    p = write(tmp_path, doc)
    code, _, err = run_cli(["plan", str(p), "-o", str(tmp_path / "out")])
    assert code == 1 and "joint limits" in err
    summary = (tmp_path / "out" / "plan_summary.txt").read_text()
    assert "status: error" in summary


def test_seed_and_tol_overrides(tmp_path):
    code, out, _ = run_cli(["gait", str(fixture_path("walk_gait")), "--seed", "5"])
    assert code == 0 and "k=4" in out
    code, out, _ = run_cli(["plan", str(fixture_path("planar3_tip")), "--tol", "1e-6"])
    assert code == 0
    err = float(re.search(r"max task error (\S+)", out).group(1))
    assert err < 1e-6


def _compare_text(got: str, want: str, path: str):
    gl, wl = got.splitlines(), want.splitlines()
    assert len(gl) == len(wl), path
    num = re.compile(r"[-+]?(?:\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+)")
    for g, w in zip(gl, wl):
        if g == w:
            continue
        assert num.sub("#", g) == num.sub("#", w), f"{path}: {g!r} != {w!r}"
        gv = [float(x) for x in num.findall(g)]
        wv = [float(x) for x in num.findall(w)]
        assert np.allclose(gv, wv, rtol=1e-9, atol=1e-12), f"{path}: {g!r} != {w!r}"


@pytest.mark.parametrize("name", sorted(make_golden.CASES))
def test_golden_outputs(tmp_path, name):
    code, text = make_golden.run(name, tmp_path / "export")
    assert code == 0
    gold = GOLDEN / name
    _compare_text(text, (gold / "stdout.txt").read_text(), f"{name}/stdout.txt")
    gold_export = gold / "export"
    if gold_export.exists():
        names = sorted(p.name for p in gold_export.iterdir())
        assert sorted(p.name for p in (tmp_path / "export").iterdir()) == names
        for n in names:
            _compare_text((tmp_path / "export" / n).read_text(), (gold_export / n).read_text(), f"{name}/{n}")
