from __future__ import annotations

import math
from importlib import resources
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from pivotplan.dualquat import UnitDualQuaternion, UnitQuaternion

DATA = Path(str(resources.files("pivotplan") / "data"))


def fixture_path(name: str) -> Path:
    return DATA / f"{name}.json"


def random_pose(rng: np.random.Generator, scale: float = 1.0) -> UnitDualQuaternion:
    q = rng.normal(size=4)
    return UnitDualQuaternion.from_rotation_translation(UnitQuaternion(*q), rng.uniform(-scale, scale, 3))


def to_matrix(D: UnitDualQuaternion) -> np.ndarray:
    """Homogeneous matrix built with scipy, independent of the package's own conversion."""
    w, x, y, z = D.rotation.as_array()
    T = np.eye(4)
    T[:3, :3] = Rotation.from_quat([x, y, z, w]).as_matrix()
    T[:3, 3] = D.translation()
    return T


def pose_gap(A: UnitDualQuaternion, B: UnitDualQuaternion) -> float:
    a, b = A.as_array(), B.as_array()
    return float(min(np.abs(a - b).max(), np.abs(a + b).max()))


finite = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False, allow_subnormal=False)
unit_vec_raw = st.tuples(finite, finite, finite, finite).filter(lambda q: math.fsum(c * c for c in q) > 1e-3)


@st.composite
def poses(draw, scale: float = 2.0):
    q = draw(unit_vec_raw)
    p = draw(st.tuples(*[st.floats(-scale, scale, allow_nan=False, allow_subnormal=False)] * 3))
    return UnitDualQuaternion.from_rotation_translation(UnitQuaternion(*q), p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
