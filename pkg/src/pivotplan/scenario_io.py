"""JSON scenario files and CSV plan export.

Angles are degrees in files and radians in memory. Poses are written as a
position plus a unit quaternion ``[w, x, y, z]``.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import warnings
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from .dualquat import UnitDualQuaternion, UnitQuaternion, ValidationError
from .gait import CuboidObject
from .kinematics import Joint, ManipulatorModel
from .pipeline import ArmSetup, PlanResult, Scenario
from .screw import GeneralScrew, PureTranslation, StepPolicy

__all__ = [
    "ScenarioError",
    "NormalizationWarning",
    "SCENARIO_SCHEMA",
    "parse_scenario",
    "load_scenario",
    "load_document",
    "dump_document",
    "save_scenario",
    "pose_from_record",
    "pose_to_record",
    "export_plan",
    "plan_summary",
]

DEFAULTS = {
    "gait": {"beta_deg": 10.0, "alpha_max_deg": 35.0, "k_max": 10, "face": "-z", "case3_order": "PGP"},
    "interpolation": {"dtheta_max_deg": 2.0, "dd_max_m": 0.005},
    "rmrc": {"lambda": 0.5, "tol": 1e-8, "max_inner": 200, "angular_scale": 1.0},
    "seed": 0,
}
NORMALIZE_WARN = 1e-6


class ScenarioError(ValidationError):
    """Unreadable or invalid scenario file."""


class NormalizationWarning(UserWarning):
    pass


_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_pose = {
    "type": "object",
    "required": ["position", "quaternion"],
    "additionalProperties": False,
    "properties": {
        "position": _vec3,
        "quaternion": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
    },
}

SCENARIO_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["object", "poses", "arms"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "object": {
            "type": "object",
            "required": ["half_extents"],
            "additionalProperties": False,
            "properties": {
                "half_extents": {
                    "type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                    "minItems": 3, "maxItems": 3,
                }
            },
        },
        "poses": {
            "type": "object",
            "required": ["C_O", "C_F"],
            "additionalProperties": False,
            "properties": {
                "C_O": _pose,
                "C_F": _pose,
                "waypoints": {"type": "array", "items": _pose},
            },
        },
        "stage_breaks": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "arms": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["joints", "home_pose", "theta0"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                    "joints": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["axis", "point"],
                            "additionalProperties": False,
                            "properties": {"axis": _vec3, "point": _vec3},
                        },
                    },
                    "limits": {
                        "type": "array",
                        "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                    },
                    "weights": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                    "home_pose": _pose,
                    "base_pose": _pose,
                    "theta0": {"type": "array", "items": {"type": "number"}},
                    "grasp_transforms": {"type": "array", "items": _pose, "minItems": 1},
                },
            },
        },
        "gait": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "beta_deg": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 90},
                "alpha_max_deg": {"type": "number", "exclusiveMinimum": 0, "maximum": 180},
                "k_max": {"type": "integer", "minimum": 1},
                "face": {"enum": ["+x", "-x", "+y", "-y", "+z", "-z"]},
                "case3_order": {"enum": ["PGP", "GP", "PG"]},
            },
        },
        "interpolation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dtheta_max_deg": {"type": "number", "exclusiveMinimum": 0},
                "dd_max_m": {"type": "number", "exclusiveMinimum": 0},
                "steps": {"type": "integer", "minimum": 2},
            },
        },
        "rmrc": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lambda": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_inner": {"type": "integer", "minimum": 1},
                "angular_scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
    },
}


def _where(path) -> str:
    return "/".join(str(p) for p in path) or "<root>"


def _normalized_quaternion(q, where: str) -> list[float]:
    n = math.sqrt(sum(c * c for c in q))
    if n == 0.0:
        raise ScenarioError(f"{where}: zero quaternion")
    if abs(n - 1.0) > NORMALIZE_WARN:
        warnings.warn(f"{where}: quaternion norm {n:.9g} normalized to 1", NormalizationWarning, stacklevel=3)
    if abs(n - 1.0) <= 1e-15:
        return [float(c) for c in q]
    return [float(c) / n for c in q]


def pose_from_record(rec: dict) -> UnitDualQuaternion:
    return UnitDualQuaternion.from_rotation_translation(UnitQuaternion(*rec["quaternion"]), rec["position"])


def pose_to_record(D: UnitDualQuaternion) -> dict:
    q = D.rotation.as_array()
    if q[0] < 0.0:
        q = -q
    return {"position": [float(x) for x in D.translation()], "quaternion": [float(x) for x in q]}


def _fill_defaults(doc: dict) -> dict:
    doc = copy.deepcopy(doc)
    for key in ("gait", "rmrc"):
        doc[key] = {**DEFAULTS[key], **doc.get(key, {})}
    interp = doc.get("interpolation", {})
    if "steps" not in interp:
        interp = {**DEFAULTS["interpolation"], **interp}
    doc["interpolation"] = interp
    doc.setdefault("seed", DEFAULTS["seed"])
    doc.setdefault("stage_breaks", [])
    for i, arm in enumerate(doc["arms"]):
        arm.setdefault("name", f"arm{i}")
    return doc


def _normalize_poses(doc: dict) -> None:
    def fix(rec, where):
        rec["quaternion"] = _normalized_quaternion(rec["quaternion"], where)

    fix(doc["poses"]["C_O"], "poses/C_O")
    fix(doc["poses"]["C_F"], "poses/C_F")
    for i, rec in enumerate(doc["poses"].get("waypoints", [])):
        fix(rec, f"poses/waypoints/{i}")
    for i, arm in enumerate(doc["arms"]):
        fix(arm["home_pose"], f"arms/{i}/home_pose")
        if "base_pose" in arm:
            fix(arm["base_pose"], f"arms/{i}/base_pose")
        for j, rec in enumerate(arm.get("grasp_transforms", [])):
            fix(rec, f"arms/{i}/grasp_transforms/{j}")


def _build_arm(arm: dict, i: int) -> ArmSetup:
    where = f"arms/{i}"
    n = len(arm["joints"])
    joints = []
    for j, jt in enumerate(arm["joints"]):
        axis = np.asarray(jt["axis"], dtype=float)
        norm = np.linalg.norm(axis)
        if norm == 0.0:
            raise ScenarioError(f"{where}/joints/{j}/axis: zero vector")
        joints.append(Joint(axis / norm, jt["point"]))
    for key in ("limits", "weights", "theta0"):
        if key in arm and len(arm[key]) != n:
            raise ScenarioError(f"{where}/{key}: expected {n} entries, got {len(arm[key])}")
    limits = np.radians(arm["limits"]) if "limits" in arm else None
    model = ManipulatorModel(
        tuple(joints), pose_from_record(arm["home_pose"]), limits, arm.get("weights"), arm["name"]
    )
    grasps = [pose_from_record(g) for g in arm["grasp_transforms"]] if "grasp_transforms" in arm else None
    base = pose_from_record(arm["base_pose"]) if "base_pose" in arm else UnitDualQuaternion.identity()
    return ArmSetup(model, np.radians(arm["theta0"]), base, grasps)


def parse_scenario(doc: dict) -> Scenario:
    """Validate a decoded scenario document and build a :class:`Scenario`."""
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ScenarioError(f"{_where(e.absolute_path)}: {e.message}")
    doc = _fill_defaults(doc)
    _normalize_poses(doc)
    try:
        arms = [_build_arm(a, i) for i, a in enumerate(doc["arms"])]
        names = [a.model.name for a in arms]
        if len(set(names)) != len(names):
            raise ScenarioError("arms: names must be unique")
        g, it, rm = doc["gait"], doc["interpolation"], doc["rmrc"]
        policy = (
            StepPolicy(steps=it["steps"]) if "steps" in it
            else StepPolicy(dtheta_max=math.radians(it["dtheta_max_deg"]), dd_max=it["dd_max_m"])
        )
        waypoints = doc["poses"].get("waypoints")
        sc = Scenario(
            object=CuboidObject(tuple(doc["object"]["half_extents"])),
            C_O=pose_from_record(doc["poses"]["C_O"]),
            C_F=pose_from_record(doc["poses"]["C_F"]),
            arms=arms,
            beta=math.radians(g["beta_deg"]),
            alpha_max=math.radians(g["alpha_max_deg"]),
            k_max=g["k_max"],
            policy=policy,
            waypoints=None if waypoints is None else [pose_from_record(w) for w in waypoints],
            stage_breaks=list(doc["stage_breaks"]),
            gait_face=g["face"],
            case3_order=g["case3_order"],
            lam=rm["lambda"],
            tol=rm["tol"],
            max_inner=rm["max_inner"],
            angular_scale=rm["angular_scale"],
            seed=doc["seed"],
            document=doc,
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    return sc


def load_document(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_scenario(path) -> Scenario:
    """Read, validate and default-fill a scenario file."""
    doc = load_document(path)
    try:
        return parse_scenario(doc)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def dump_document(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def save_scenario(scenario: Scenario, path) -> None:
    """Write the validated, default-filled document behind ``scenario``."""
    doc = getattr(scenario, "document", None)
    if doc is None:
        raise ValueError("scenario was not loaded from a document")
    Path(path).write_text(dump_document(doc))


# ---------------------------------------------------------------- export


def _g(x: float) -> str:
    return format(float(x), ".17g")


def _pose_rows(poses, taus, stages):
    for i, (D, t, s) in enumerate(zip(poses, taus, stages)):
        p = D.translation()
        q = D.rotation.as_array()
        yield [str(i), _g(t), *(_g(v) for v in p), *(_g(v) for v in q), str(int(s))]


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    try:
        path.write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc


POSE_HEADER = ["index", "tau", "px", "py", "pz", "qw", "qx", "qy", "qz", "stage"]


def _screw_fields(dec):
    if isinstance(dec, GeneralScrew):
        p = dec.params
        return [*p.l, *p.m, math.degrees(p.theta), p.d]
    if isinstance(dec, PureTranslation):
        return [*dec.direction, 0.0, 0.0, 0.0, 0.0, dec.d]
    return [0.0] * 8


def export_plan(result: PlanResult, out_dir) -> list[Path]:
    """Write the CSV tables and ``plan_summary.txt``; returns the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"{out}: {exc.strerror or exc}") from exc
    written = []
    n = len(result.object_poses)
    taus, stages = result.taus[:n], result.stage_of[:n]

    p = out / "object_poses.csv"
    _write_csv(p, POSE_HEADER, _pose_rows(result.object_poses, taus, stages))
    written.append(p)
    for name, ee, th in zip(result.arm_names, result.ee_poses, result.joint_trajectories):
        p = out / f"ee_poses_{name}.csv"
        _write_csv(p, POSE_HEADER, _pose_rows(ee, taus, stages))
        written.append(p)
        p = out / f"joints_{name}.csv"
        header = ["index"] + [f"theta_{j + 1}_deg" for j in range(th.shape[1] if th.ndim == 2 else 0)]
        _write_csv(p, header, ([str(i), *(_g(math.degrees(v)) for v in row)] for i, row in enumerate(th)))
        written.append(p)

    header = ["segment", "stage", "lx", "ly", "lz", "mx", "my", "mz", "theta_deg", "d",
              "contact_drift", "rigidity_deviation", "relative_ee_deviation"]
    for name in result.arm_names:
        header += [f"iterations_{name}", f"max_error_{name}"]
    rows = []
    for s in result.segments:
        row = [str(s.index), str(s.stage), *(_g(v) for v in _screw_fields(s.screw)),
               _g(s.contact_drift), _g(s.rigidity_deviation), _g(s.relative_ee_deviation)]
        for k in range(len(result.arm_names)):
            it = s.iterations[k] if k < len(s.iterations) else ""
            er = _g(s.max_task_error[k]) if k < len(s.max_task_error) else ""
            row += [str(it), er]
        rows.append(row)
    p = out / "diagnostics.csv"
    _write_csv(p, header, rows)
    written.append(p)

    p = out / "plan_summary.txt"
    p.write_text(plan_summary(result))
    written.append(p)
    return written


def plan_summary(result: PlanResult) -> str:
    lines = [f"case: {result.case.value if result.case else 'explicit waypoints'}"]
    if result.gait is not None:
        g = result.gait
        lines.append(f"gait k: {g.k}")
        lines.append(f"gait start vertex: {g.start_vertex.value}")
        lines.append("gait alpha_deg: " + " ".join(_g(math.degrees(a)) for a in g.alphas))
        lines.append(f"gait objective_deg: {_g(math.degrees(g.objective))}")
        lines.append(f"gait closure: {_g(g.position_residual)} m, {_g(math.degrees(g.angle_residual))} deg")
    else:
        lines.append("gait k: 0")
    lines.append(f"key poses: {len(result.key_poses)}")
    lines.append(f"samples: {len(result.object_poses)}")
    lines.append("stage markers: " + " ".join(map(str, result.stage_markers)))
    lines.append("segment markers: " + " ".join(map(str, result.segment_markers)))
    lines.append(f"max contact drift: {_g(result.max_contact_drift)}")
    for s in result.segments:
        f = _screw_fields(s.screw)
        lines.append(
            f"segment {s.index} (stage {s.stage}): l=({_g(f[0])}, {_g(f[1])}, {_g(f[2])}) "
            f"m=({_g(f[3])}, {_g(f[4])}, {_g(f[5])}) theta_deg={_g(f[6])} d={_g(f[7])} "
            f"drift={_g(s.contact_drift)}"
        )
    for k, name in enumerate(result.arm_names):
        its = [s.iterations[k] for s in result.segments if k < len(s.iterations)]
        errs = [s.max_task_error[k] for s in result.segments if k < len(s.max_task_error)]
        lines.append(
            f"arm {name}: iterations {sum(its)}, max task error {_g(max(errs, default=0.0))}"
        )
    for note in result.notes:
        lines.append(f"note: {note}")
    lines.append(f"status: {'error: ' + result.error if result.error else 'ok'}")
    return "\n".join(lines) + "\n"
