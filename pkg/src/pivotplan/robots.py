"""Manipulator models used by the bundled scenarios and the tests."""

from __future__ import annotations

import math

import numpy as np

from .dualquat import UnitDualQuaternion
from .kinematics import Joint, ManipulatorModel

__all__ = ["planar_2link", "planar_3link", "arm7", "duplicate_axis_arm"]


def planar_2link(l1: float = 1.0, l2: float = 1.0) -> ManipulatorModel:
    """Two revolute joints about +z, links along +x."""
    z = [0.0, 0.0, 1.0]
    return ManipulatorModel(
        joints=(Joint(z, [0.0, 0.0, 0.0]), Joint(z, [l1, 0.0, 0.0])),
        home_ee_pose=UnitDualQuaternion.from_translation([l1 + l2, 0.0, 0.0]),
        name="planar2",
    )


def planar_3link(lengths=(0.35, 0.3, 0.15), shoulder_height: float = 0.3) -> ManipulatorModel:
    """Three joints about +y, moving in the vertical x-z plane."""
    y = [0.0, 1.0, 0.0]
    l1, l2, l3 = lengths
    h = shoulder_height
    return ManipulatorModel(
        joints=(Joint(y, [0.0, 0.0, h]), Joint(y, [l1, 0.0, h]), Joint(y, [l1 + l2, 0.0, h])),
        home_ee_pose=UnitDualQuaternion.from_translation([l1 + l2 + l3, 0.0, h]),
        joint_limits=np.tile([-math.pi, math.pi], (3, 1)),
        name="planar3",
    )


def arm7(name: str = "arm7") -> ManipulatorModel:
    """Anthropomorphic 7-DoF arm (S-R-S wrist layout), straight up at home."""
    z, y = [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]
    ys = [0.0, -1.0, 0.0]
    shoulder, elbow, wrist, flange = 0.34, 0.74, 1.14, 1.266
    joints = (
        Joint(z, [0, 0, shoulder]),
        Joint(y, [0, 0, shoulder]),
        Joint(z, [0, 0, shoulder]),
        Joint(ys, [0, 0, elbow]),
        Joint(z, [0, 0, elbow]),
        Joint(y, [0, 0, wrist]),
        Joint(z, [0, 0, wrist]),
    )
    deg = np.radians([170, 120, 170, 120, 170, 120, 175])
    return ManipulatorModel(
        joints=joints,
        home_ee_pose=UnitDualQuaternion.from_translation([0, 0, flange]),
        joint_limits=np.column_stack([-deg, deg]),
        name=name,
    )


def duplicate_axis_arm() -> ManipulatorModel:
    """Three joints, two of them on the same axis: rank-deficient everywhere."""
    z = [0.0, 0.0, 1.0]
    return ManipulatorModel(
        joints=(Joint(z, [0, 0, 0]), Joint(z, [0, 0, 0]), Joint(z, [0.5, 0, 0])),
        home_ee_pose=UnitDualQuaternion.from_translation([1.0, 0, 0]),
        name="duplicate",
    )
