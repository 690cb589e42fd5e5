import math

import numpy as np
import pytest
from scipy.linalg import expm, logm

from pivotplan.dualquat import UnitDualQuaternion, UnitQuaternion, ValidationError
from pivotplan.kinematics import (
    Joint,
    ManipulatorModel,
    RMRCError,
    forward_kinematics,
    geometric_jacobian,
    jacobian_rank,
    pose_difference,
    rmrc_track,
    solve_ik,
    task_error_norm,
    weighted_pseudoinverse,
)
from pivotplan.robots import arm7, duplicate_axis_arm, planar_2link, planar_3link
from pivotplan.screw import sclerp_path, StepPolicy

from conftest import pose_gap, random_pose, to_matrix

pytestmark = pytest.mark.filterwarnings("ignore:.*encountered in divide:RuntimeWarning")


def hat(w):
    return np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]])


def poe_matrix(model, theta):
    """Oracle: product of matrix exponentials of the joint twists."""
    T = np.eye(4)
    for j, q in zip(model.joints, theta):
        X = np.zeros((4, 4))
        X[:3, :3] = hat(j.axis)
        X[:3, 3] = -np.cross(j.axis, j.point)
        T = T @ expm(X * q)
    return T @ to_matrix(model.home_ee_pose)


def random_theta(model, rng):
    lo, hi = model.joint_limits.T
    return rng.uniform(np.maximum(lo, -math.pi), np.minimum(hi, math.pi))


MODELS = [planar_2link(), planar_3link(), arm7()]


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_forward_kinematics_matches_matrix_exponentials(model, rng):
    for _ in range(50):
        th = random_theta(model, rng)
        assert np.allclose(to_matrix(forward_kinematics(model, th)), poe_matrix(model, th), atol=1e-12)


def test_planar_forward_kinematics_by_hand():
    m = planar_2link()
    E = forward_kinematics(m, [0.0, math.pi / 2])
    assert np.allclose(E.translation(), [1, 1, 0], atol=1e-15)
    J = geometric_jacobian(m, [0.0, 0.0])
    assert np.allclose(J[:3], [[0, 0], [2, 1], [0, 0]])
    assert np.allclose(J[3:], [[0, 0], [0, 0], [1, 1]])


def fd_jacobian(model, th, h=1e-6):
    cols = []
    for j in range(model.dof):
        e = np.zeros(model.dof)
        e[j] = h
        Tp, Tm = poe_matrix(model, th + e), poe_matrix(model, th - e)
        v = (Tp[:3, 3] - Tm[:3, 3]) / (2 * h)
        W = np.real(logm(Tp[:3, :3] @ Tm[:3, :3].T)) / (2 * h)
        cols.append(np.r_[v, W[2, 1], W[0, 2], W[1, 0]])
    return np.array(cols).T


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_jacobian_matches_finite_differences(model, rng):
    for _ in range(20):
        th = random_theta(model, rng)
        J = geometric_jacobian(model, th)
        Jfd = fd_jacobian(model, th)
        assert np.linalg.norm(J - Jfd) <= 1e-6 * max(np.linalg.norm(J), 1.0)


def test_pseudoinverse_matches_numpy_for_full_rank(rng):
    m = arm7()
    J = geometric_jacobian(m, random_theta(m, rng))
    assert np.allclose(weighted_pseudoinverse(J), np.linalg.pinv(J), atol=1e-10)


def test_weighted_pseudoinverse_formula(rng):
    m = arm7()
    J = geometric_jacobian(m, random_theta(m, rng))
    w = rng.uniform(0.5, 3.0, 7)
    Wi = np.diag(1 / w)
    want = Wi @ J.T @ np.linalg.inv(J @ Wi @ J.T)
    assert np.allclose(weighted_pseudoinverse(J, w), want, atol=1e-9)


def test_pseudoinverse_is_damped_at_singularity():
    m = duplicate_axis_arm()
    J = geometric_jacobian(m, [0.1, 0.2, 0.3])
    assert jacobian_rank(J) == 2
    lam = 1e-4
    want = J.T @ np.linalg.inv(J @ J.T + lam**2 * np.eye(6))
    got = weighted_pseudoinverse(J)
    assert np.all(np.isfinite(got))
    assert np.allclose(got, want, atol=1e-8)


def test_pseudoinverse_rejects_bad_weights():
    with pytest.raises(ValidationError):
        weighted_pseudoinverse(np.eye(6), [1, 1, 1, 0, 1, 1])


def test_pose_difference_matches_matrix_log(rng):
    for _ in range(50):
        A = random_pose(rng, 0.5)
        B = A * UnitDualQuaternion.from_rotation_translation(
            UnitQuaternion.from_axis_angle(rng.normal(size=3), rng.uniform(0.01, 2.0)), rng.normal(size=3) * 0.2
        )
        X = np.real(logm(to_matrix(B) @ np.linalg.inv(to_matrix(A))))
        w = np.array([X[2, 1], X[0, 2], X[1, 0]])
        v = X[:3, 3] + np.cross(w, A.translation())
        assert np.allclose(pose_difference(A, B), np.r_[v, w], atol=1e-8)


def test_pose_difference_of_equal_poses_is_zero(rng):
    A = random_pose(rng)
    assert np.array_equal(pose_difference(A, A), np.zeros(6))
    assert task_error_norm(np.r_[np.zeros(3), 1.0, 0, 0], angular_scale=0.5) == 0.5


def closed_form_2r(x, y, elbow=1.0):
    c2 = (x * x + y * y - 2.0) / 2.0
    t2 = elbow * math.acos(c2)
    t1 = math.atan2(y, x) - math.atan2(math.sin(t2), 1.0 + math.cos(t2))
    return np.array([t1, t2])


def test_rmrc_reaches_closed_form_two_link_target():
    m = planar_2link()
    th0 = np.array([0.3, 1.2])
    x, y = 0.4, 1.5
    th_star = closed_form_2r(x, y)
    target = UnitDualQuaternion.from_rotation_translation(
        UnitQuaternion.from_axis_angle([0, 0, 1], th_star.sum()), [x, y, 0.0]
    )
    # a 2-DoF arm cannot follow arbitrary SE(3) paths; use reachable waypoints
    path = [forward_kinematics(m, th0 + s * (th_star - th0) + 0.05 * math.sin(math.pi * s))
            for s in np.linspace(0.0, 1.0, 21)[:-1]] + [target]
    res = rmrc_track(m, th0, path)
    assert res.ok
    assert pose_gap(forward_kinematics(m, res.thetas[-1]), target) < 1e-8
    assert np.allclose(res.thetas[-1], th_star, atol=1e-7)
    direct = solve_ik(m, th0, target)
    assert np.allclose(direct, th_star, atol=1e-7)


def test_rmrc_zero_error_gives_zero_step():
    m = arm7()
    th0 = np.radians([10, 40, -5, -80, 15, 30, 5])
    E = forward_kinematics(m, th0)
    res = rmrc_track(m, th0, [E] * 4)
    assert np.array_equal(res.thetas, np.tile(th0, (4, 1)))
    assert np.array_equal(res.iterations, np.zeros(4, dtype=int))
    J = geometric_jacobian(m, th0)
    assert np.array_equal(weighted_pseudoinverse(J) @ np.zeros(6), np.zeros(7))


def test_rmrc_requires_start_on_path():
    m = planar_2link()
    with pytest.raises(ValidationError):
        rmrc_track(m, [0.0, 0.5], [UnitDualQuaternion.from_translation([0.0, 0.0, 0.0])])


def test_rmrc_reports_non_convergence_with_partial_result():
    m = planar_2link()
    th0 = np.array([0.2, 0.4])
    far = forward_kinematics(m, [1.2, 1.0])
    path = [forward_kinematics(m, th0), far]
    with pytest.raises(RMRCError) as info:
        rmrc_track(m, th0, path, max_inner=2)
    part = info.value.partial
    assert len(part.thetas) == 2 and part.converged[0] and not part.converged[1]


def test_rmrc_reports_joint_limit_violation():
    z = [0.0, 0.0, 1.0]
    m = ManipulatorModel(
        (Joint(z, [0, 0, 0]), Joint(z, [1, 0, 0])),
        UnitDualQuaternion.from_translation([2, 0, 0]),
        joint_limits=[[-0.5, 0.5], [-3, 3]],
    )
    th0 = np.array([0.0, 0.5])
    target = forward_kinematics(m, [0.9, 0.5])
    path = sclerp_path(forward_kinematics(m, th0), target, StepPolicy(steps=10))
    with pytest.raises(RMRCError, match="joint limits"):
        rmrc_track(m, th0, path)


def test_unreachable_target_fails_to_converge():
    m = planar_2link()
    with pytest.raises(RMRCError):
        solve_ik(m, [0.1, 0.2], UnitDualQuaternion.from_translation([3.0, 0.0, 0.0]), max_inner=300)


def test_model_validation():
    z = [0.0, 0.0, 1.0]
    home = UnitDualQuaternion.identity()
    with pytest.raises(ValidationError):
        Joint([0, 0, 2.0], [0, 0, 0])
    with pytest.raises(ValidationError):
        ManipulatorModel((), home)
    with pytest.raises(ValidationError):
        ManipulatorModel((Joint(z, [0, 0, 0]),), home, joint_limits=[[1.0, -1.0]])
    with pytest.raises(ValidationError):
        ManipulatorModel((Joint(z, [0, 0, 0]),), home, weights=[0.0])
    with pytest.raises(ValidationError):
        forward_kinematics(planar_2link(), [0.0])
    with pytest.raises(ValidationError):
        rmrc_track(planar_2link(), [0.0, 0.0], [], lam=0.0)
