"""Serial-chain kinematics and resolved motion rate control (RMRC).

Joints are revolute and given by an axis direction and a point on the axis in
the base frame at the home configuration. Forward kinematics is the product of
the joint screw displacements applied to the home end-effector pose.

Task errors and Jacobian columns share one convention: ``[v; w]`` where ``v``
is the velocity of the end-effector origin and ``w`` the angular velocity, both
in the base frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dualquat import UnitDualQuaternion, ValidationError
from .screw import GeneralScrew, PureTranslation, extract_screw

__all__ = [
    "Joint",
    "ManipulatorModel",
    "TrackResult",
    "RMRCError",
    "forward_kinematics",
    "geometric_jacobian",
    "weighted_pseudoinverse",
    "jacobian_rank",
    "pose_difference",
    "task_error_norm",
    "rmrc_track",
    "solve_ik",
]

DAMPING = 1e-4
DAMPING_THRESHOLD = 1e-4


@dataclass(frozen=True)
class Joint:
    axis: np.ndarray
    point: np.ndarray

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(axis)
        if abs(n - 1.0) > 1e-12:
            raise ValidationError(f"joint axis must be a unit vector (norm {n!r})")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(3))


@dataclass(frozen=True)
class ManipulatorModel:
    joints: tuple[Joint, ...]
    home_ee_pose: UnitDualQuaternion
    joint_limits: np.ndarray = None
    weights: np.ndarray = None
    name: str = "arm"

    def __post_init__(self):
        joints = tuple(self.joints)
        n = len(joints)
        if n < 1:
            raise ValidationError("a manipulator needs at least one joint")
        limits = (
            np.tile([-np.pi, np.pi], (n, 1)) if self.joint_limits is None
            else np.asarray(self.joint_limits, dtype=float)
        )
        weights = np.ones(n) if self.weights is None else np.asarray(self.weights, dtype=float)
        if limits.shape != (n, 2) or np.any(limits[:, 0] >= limits[:, 1]):
            raise ValidationError("joint_limits must be (n, 2) with min < max")
        if weights.shape != (n,) or np.any(weights <= 0.0):
            raise ValidationError("weights must be n positive numbers")
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "joint_limits", limits)
        object.__setattr__(self, "weights", weights)

    @property
    def dof(self) -> int:
        return len(self.joints)

    def within_limits(self, theta, tol: float = 0.0) -> bool:
        theta = np.asarray(theta)
        return bool(np.all(theta >= self.joint_limits[:, 0] - tol) and np.all(theta <= self.joint_limits[:, 1] + tol))


def _check_theta(model: ManipulatorModel, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.dof,):
        raise ValidationError(f"expected {model.dof} joint values, got shape {theta.shape}")
    return theta


def _fk_frames(model: ManipulatorModel, theta: np.ndarray):
    """EE pose and the current (axis, point) of each joint."""
    T = UnitDualQuaternion.identity()
    axes, points = [], []
    for joint, q in zip(model.joints, theta):
        R = T.rotation_matrix()
        axes.append(R @ joint.axis)
        points.append(R @ joint.point + T.translation())
        T = T * UnitDualQuaternion.from_axis_angle(joint.axis, q, joint.point)
    return T * model.home_ee_pose, np.array(axes), np.array(points)


def forward_kinematics(model: ManipulatorModel, theta) -> UnitDualQuaternion:
    theta = _check_theta(model, theta)
    return _fk_frames(model, theta)[0]


def _jacobian(E: UnitDualQuaternion, axes: np.ndarray, points: np.ndarray) -> np.ndarray:
    p_ee = E.translation()
    return np.vstack([np.cross(axes, p_ee - points).T, axes.T])


def geometric_jacobian(model: ManipulatorModel, theta) -> np.ndarray:
    """6 x L Jacobian, columns ``[w_j x (p_ee - p_j); w_j]``."""
    theta = _check_theta(model, theta)
    return _jacobian(*_fk_frames(model, theta))


def weighted_pseudoinverse(
    J: np.ndarray,
    weights: Optional[Sequence[float]] = None,
    damping: float = DAMPING,
    threshold: float = DAMPING_THRESHOLD,
) -> np.ndarray:
    """``W^-1 J^T (J W^-1 J^T + lambda^2 I)^-1``, damped only near singularities.

    Computed through the SVD of ``J W^-1/2`` so that it also covers chains
    with fewer than six joints. Large weights penalize motion of that joint.
    """
    J = np.asarray(J, dtype=float)
    n = J.shape[1]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w <= 0.0):
        raise ValidationError("weights must be positive")
    s_raw = np.linalg.svd(J, compute_uv=False)
    lam2 = damping**2 if s_raw.min() < threshold else 0.0
    inv_sqrt = 1.0 / np.sqrt(w)
    U, s, Vt = np.linalg.svd(J * inv_sqrt, full_matrices=False)
    if lam2:
        s_inv = s / (s * s + lam2)
    else:
        keep = s > 1e-14 * max(s.max(), 1.0)
        s_inv = np.divide(1.0, s, out=np.zeros_like(s), where=keep)
    return inv_sqrt[:, None] * (Vt.T * s_inv) @ U.T


def jacobian_rank(J: np.ndarray, tol: float = DAMPING_THRESHOLD) -> int:
    return int(np.sum(np.linalg.svd(J, compute_uv=False) > tol))


def pose_difference(current: UnitDualQuaternion, target: UnitDualQuaternion) -> np.ndarray:
    """Task error ``[v; w]`` taking ``current`` to ``target``.

    Built from the screw of ``target * current^-1``: the spatial twist
    ``(theta m + d l, theta l)``, with its linear part moved to the
    end-effector origin.
    """
    dec = extract_screw(target * current.conj())
    if isinstance(dec, GeneralScrew):
        p = dec.params
        w = p.theta * p.l
        v0 = p.theta * p.m + p.d * p.l
    elif isinstance(dec, PureTranslation):
        w = np.zeros(3)
        v0 = dec.d * dec.direction
    else:
        return np.zeros(6)
    return np.r_[v0 + np.cross(w, current.translation()), w]


def task_error_norm(e: np.ndarray, angular_scale: float = 1.0) -> float:
    """Mixed norm of a task error; ``angular_scale`` converts rad to m."""
    return float(np.sqrt(e[:3] @ e[:3] + angular_scale**2 * (e[3:] @ e[3:])))


@dataclass
class TrackResult:
    thetas: np.ndarray
    iterations: np.ndarray
    errors: np.ndarray
    converged: np.ndarray
    within_limits: np.ndarray
    messages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(np.all(self.converged) and np.all(self.within_limits))


class RMRCError(RuntimeError):
    """Tracking failed; ``partial`` holds the configurations computed so far."""

    def __init__(self, message: str, partial: TrackResult):
        super().__init__(message)
        self.partial = partial


def _converge(model, theta, target, lam, tol, max_inner, angular_scale):
    it = 0
    while True:
        E, axes, points = _fk_frames(model, theta)
        e = pose_difference(E, target)
        err = task_error_norm(e, angular_scale)
        if err < tol or it >= max_inner:
            return theta, it, err
        J = _jacobian(E, axes, points)
        theta = theta + lam * (weighted_pseudoinverse(J, model.weights) @ e)
        it += 1


def rmrc_track(
    model: ManipulatorModel,
    theta0,
    ee_path: Sequence[UnitDualQuaternion],
    lam: float = 0.5,
    tol: float = 1e-8,
    max_inner: int = 200,
    angular_scale: float = 1.0,
) -> TrackResult:
    """Follow ``ee_path`` with ``theta <- theta + lam J^+ (target - current)``.

    Each waypoint is iterated until the task error drops below ``tol``.
    Raises :class:`RMRCError` (carrying the partial result) on a waypoint that
    does not converge within ``max_inner`` steps or leaves the joint limits.
    """
    if not 0.0 < lam <= 1.0:
        raise ValidationError("lam must lie in (0, 1]")
    theta = _check_theta(model, theta0).copy()
    ee_path = list(ee_path)
    if ee_path:
        e0 = task_error_norm(pose_difference(forward_kinematics(model, theta), ee_path[0]), angular_scale)
        if e0 > 10.0 * tol:
            raise ValidationError(f"FK(theta0) is {e0:.3g} away from the first waypoint (limit {10 * tol:.3g})")

    n = len(ee_path)
    res = TrackResult(
        thetas=np.zeros((n, model.dof)),
        iterations=np.zeros(n, dtype=int),
        errors=np.zeros(n),
        converged=np.zeros(n, dtype=bool),
        within_limits=np.zeros(n, dtype=bool),
    )
    for i, target in enumerate(ee_path):
        theta, it, err = _converge(model, theta, target, lam, tol, max_inner, angular_scale)
        res.thetas[i], res.iterations[i], res.errors[i] = theta, it, err
        res.converged[i] = err < tol
        res.within_limits[i] = model.within_limits(theta)
        if not res.converged[i] or not res.within_limits[i]:
            why = (
                f"no convergence after {max_inner} iterations (error {err:.3g})"
                if not res.converged[i] else "joint limits violated"
            )
            res.messages.append(f"waypoint {i}: {why}")
            partial = TrackResult(
                res.thetas[: i + 1], res.iterations[: i + 1], res.errors[: i + 1],
                res.converged[: i + 1], res.within_limits[: i + 1], res.messages,
            )
            raise RMRCError(f"{model.name}: waypoint {i}: {why}", partial)
    return res


def solve_ik(
    model: ManipulatorModel,
    theta_seed,
    target: UnitDualQuaternion,
    lam: float = 0.5,
    tol: float = 1e-8,
    max_inner: int = 2000,
    angular_scale: float = 1.0,
) -> np.ndarray:
    """Single-target inverse kinematics by the same iteration, from ``theta_seed``."""
    theta = _check_theta(model, theta_seed).copy()
    theta, it, err = _converge(model, theta, target, lam, tol, max_inner, angular_scale)
    if err >= tol:
        raise RMRCError(
            f"{model.name}: IK did not converge (error {err:.3g} after {it} iterations)",
            TrackResult(theta[None], np.array([it]), np.array([err]), np.array([False]),
                        np.array([model.within_limits(theta)])),
        )
    return theta
