"""Regenerate the bundled scenario files in src/pivotplan/data.

Run from the repository root: ``python3 scripts/make_fixtures.py``.
Initial joint angles are found by inverse kinematics on the chosen grasp, so
the files are self-consistent by construction.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from pivotplan.dualquat import UnitDualQuaternion, UnitQuaternion
from pivotplan.gait import ContactEdgeState, CuboidObject, flat_pose
from pivotplan.kinematics import solve_ik
from pivotplan.robots import arm7, planar_3link
from pivotplan.scenario_io import dump_document, pose_to_record

DATA = Path(__file__).resolve().parents[1] / "src" / "pivotplan" / "data"


def rot(axis, deg, point=(0.0, 0.0, 0.0)):
    return UnitDualQuaternion.from_axis_angle(axis, math.radians(deg), point)


def pose(R_axis, R_deg, position):
    q = UnitQuaternion.from_axis_angle(R_axis, math.radians(R_deg))
    return UnitDualQuaternion.from_rotation_translation(q, position)


def arm_record(model, base, ee_world, seed_deg, grasps=None, name=None):
    """Arm entry whose start configuration puts the flange at ``ee_world``."""
    theta = solve_ik(model, np.radians(seed_deg), base.conj() * ee_world, max_inner=5000)
    assert model.within_limits(theta), "IK seed left the joint limits"
    rec = {
        "name": name or model.name,
        "joints": [{"axis": j.axis.tolist(), "point": j.point.tolist()} for j in model.joints],
        "limits": np.degrees(model.joint_limits).tolist(),
        "weights": model.weights.tolist(),
        "home_pose": pose_to_record(model.home_ee_pose),
        "base_pose": pose_to_record(base),
        "theta0": np.degrees(theta).tolist(),
    }
    if grasps is not None:
        rec["grasp_transforms"] = [pose_to_record(g) for g in grasps]
    return rec


def cube_on_floor(center_xy, h):
    return UnitDualQuaternion.from_translation([center_xy[0], center_xy[1], h[2]])


def planar3_tip():
    h = (0.05, 0.05, 0.05)
    C_O = cube_on_floor((0.6, 0.0), h)
    C_F = rot([0, 1, 0], 30.0, [0.65, 0, 0]) * C_O
    ee = UnitDualQuaternion.from_translation([0.55, 0.0, 0.05])
    model = planar_3link()
    return {
        "name": "planar3_tip",
        "description": "3-link planar arm tips a 0.1 m cube 30 deg about its far bottom edge",
        "object": {"half_extents": list(h)},
        "poses": {"C_O": pose_to_record(C_O), "C_F": pose_to_record(C_F)},
        "arms": [arm_record(model, UnitDualQuaternion.identity(), ee, [-30, 60, -30])],
    }


# flange axis (+z) pointing along +x, into the near face
_INTO_X = ([0, 1, 0], 90.0)
_SEED7 = [0, 30, 0, -90, 0, 30, 0]


def arm7_tip():
    h = (0.1, 0.1, 0.1)
    C_O = cube_on_floor((0.6, 0.0), h)
    C_F = rot([0, 1, 0], 35.0, [0.7, 0, 0]) * C_O
    ee = pose(*_INTO_X, [0.5, 0.0, 0.1])
    return {
        "name": "arm7_tip",
        "description": "7-DoF arm tips a 0.2 m cube 35 deg about a bottom edge",
        "object": {"half_extents": list(h)},
        "poses": {"C_O": pose_to_record(C_O), "C_F": pose_to_record(C_F)},
        "arms": [arm_record(arm7(), UnitDualQuaternion.identity(), ee, _SEED7)],
    }


def _side_grasp_arms(C, hy, dy_base=0.45, offsets=((0.0, 0.0),)):
    """Two arms squeezing the +-y faces of the cube at pose ``C``."""
    arms = []
    for side, name in ((1.0, "left"), (-1.0, "right")):
        base = UnitDualQuaternion.from_translation([0.0, side * dy_base, 0.0])
        # flange z pointing into the face: -y for the left arm, +y for the right
        R = pose([1, 0, 0], 90.0 * side, [0, 0, 0])
        grasps = []
        for dx, dz in offsets:
            ee_body = UnitDualQuaternion.from_translation([dx, side * hy, dz]) * R
            grasps.append(ee_body.conj())  # object pose in the flange frame
        ee_world = C * grasps[0].conj()
        arms.append(arm_record(arm7(), base, ee_world, _SEED7, grasps if len(offsets) > 1 else None, name))
    return arms


def dual_arm7_tip():
    h = (0.1, 0.1, 0.1)
    C_O = cube_on_floor((0.55, 0.0), h)
    C_F = rot([0, 1, 0], 30.0, [0.65, 0, 0]) * C_O
    return {
        "name": "dual_arm7_tip",
        "description": "two 7-DoF arms squeeze a 0.2 m cube and tip it 30 deg about its far bottom edge",
        "object": {"half_extents": list(h)},
        "poses": {"C_O": pose_to_record(C_O), "C_F": pose_to_record(C_F)},
        "arms": _side_grasp_arms(C_O, h[1]),
    }


def walk_gait(alpha_max_deg=35.0, k_max=10, name="walk_gait"):
    h = (0.1, 0.1, 0.15)
    obj = CuboidObject(h)
    w = obj.edge_length
    start = ContactEdgeState.from_vertex([0.0, 0.0], 0.0, w)
    goal = ContactEdgeState.from_vertex([0.13, 0.13], math.radians(-80.0), w)
    C_O = flat_pose(obj, start)
    C_F = flat_pose(obj, goal)
    top = C_O.transform_point([0.0, 0.0, h[2]])
    # flange pointing down onto the top face; yaw keeps the wrist roll mid-range
    ee = UnitDualQuaternion.from_translation(top) * pose([0, 0, 1], 180.0, [0, 0, 0]) * pose([1, 0, 0], 180.0, [0, 0, 0])
    base = UnitDualQuaternion.from_translation([-0.5, 0.05, 0.0])
    return {
        "name": name,
        "description": "object gaiting: contact edge from (0, 0), 0 deg to (0.13, 0.13) m, -80 deg",
        "object": {"half_extents": list(h)},
        "poses": {"C_O": pose_to_record(C_O), "C_F": pose_to_record(C_F)},
        "arms": [arm_record(arm7(), base, ee, [0, 30, 0, -90, 0, 60, 0])],
        "gait": {"beta_deg": 10.0, "alpha_max_deg": alpha_max_deg, "k_max": k_max},
        "seed": 0,
    }


def step_climb():
    """Three pivots: tip onto a step corner, pivot over it, regrasp, pivot further."""
    h = (0.1, 0.1, 0.1)
    C_O = cube_on_floor((0.55, 0.0), h)
    corner = np.array([0.75, 0.0, 0.1])
    tip = math.degrees(math.atan2(corner[0] - 0.65, corner[2]))
    W1 = rot([0, 1, 0], tip, [0.65, 0, 0]) * C_O
    W2 = rot([0, 1, 0], 20.0, corner) * W1
    C_F = rot([0, 1, 0], 25.0, corner) * W2
    return {
        "name": "step_climb",
        "description": "three-stage climb onto a step: tip, pivot over the corner, regrasp, pivot again",
        "object": {"half_extents": list(h)},
        "poses": {"C_O": pose_to_record(C_O), "C_F": pose_to_record(C_F), "waypoints": [
            pose_to_record(W1), pose_to_record(W2)]},
        "stage_breaks": [1, 2],
        "arms": _side_grasp_arms(C_O, h[1], offsets=((0.0, 0.0), (0.0, 0.0), (0.03, 0.02))),
    }


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    docs = [
        planar3_tip(), arm7_tip(), dual_arm7_tip(), walk_gait(), step_climb(),
        walk_gait(alpha_max_deg=1.0, k_max=10, name="walk_infeasible"),
    ]
    for doc in docs:
        path = DATA / f"{doc['name']}.json"
        path.write_text(dump_document(doc))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
