"""Quaternion and dual-quaternion algebra.

Quaternions are stored as four floats ``(w, x, y, z)`` with the scalar part
first. Dual quaternions ``P + eps Q`` hold two quaternions. The unit variants
renormalize on construction and after every product so that long chains of
compositions do not drift off the group.

All types are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .tolerances import VALIDATION_TOL

__all__ = [
    "ValidationError",
    "Quaternion",
    "UnitQuaternion",
    "DualQuaternion",
    "UnitDualQuaternion",
    "PoseRp",
    "quat_mul",
    "quat_conj_norm_inv",
    "dq_mul",
    "dq_conjugates",
    "pose_to_dq",
    "dq_to_pose",
    "transform_point",
    "rotation_matrix",
]


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class Quaternion:
    """Quaternion ``w + x i + y j + z k``."""

    __slots__ = ("_w", "_x", "_y", "_z")

    def __init__(self, w: float, x: float = 0.0, y: float = 0.0, z: float = 0.0):
        object.__setattr__(self, "_w", float(w))
        object.__setattr__(self, "_x", float(x))
        object.__setattr__(self, "_y", float(y))
        object.__setattr__(self, "_z", float(z))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def from_parts(cls, w: float, vec: Sequence[float]) -> "Quaternion":
        return cls(w, vec[0], vec[1], vec[2])

    @classmethod
    def pure(cls, vec: Sequence[float]) -> "Quaternion":
        """Pure quaternion ``(0, vec)`` for a 3-vector."""
        return Quaternion(0.0, vec[0], vec[1], vec[2])

    @property
    def w(self) -> float:
        return self._w

    @property
    def vec(self) -> np.ndarray:
        return np.array([self._x, self._y, self._z])

    def components(self) -> tuple[float, float, float, float]:
        return (self._w, self._x, self._y, self._z)

    def as_array(self) -> np.ndarray:
        return np.array(self.components())

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self._w!r}, {self._x!r}, {self._y!r}, {self._z!r})"

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion(*_hamilton(self.components(), other.components()))
        if isinstance(other, (int, float, np.floating)):
            s = float(other)
            return Quaternion(self._w * s, self._x * s, self._y * s, self._z * s)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return self * other
        return NotImplemented

    def __add__(self, other: "Quaternion") -> "Quaternion":
        a, b = self.components(), other.components()
        return Quaternion(a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3])

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        a, b = self.components(), other.components()
        return Quaternion(a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3])

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self._w, -self._x, -self._y, -self._z)

    def conj(self) -> "Quaternion":
        return Quaternion(self._w, -self._x, -self._y, -self._z)

    def dot(self, other: "Quaternion") -> float:
        a, b = self.components(), other.components()
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def inverse(self) -> "Quaternion":
        n2 = self.dot(self)
        if n2 == 0.0:
            raise ValidationError("zero quaternion has no inverse")
        return self.conj() * (1.0 / n2)


def _hamilton(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + bw * ax + ay * bz - az * by,
        aw * by + bw * ay + az * bx - ax * bz,
        aw * bz + bw * az + ax * by - ay * bx,
    )


class UnitQuaternion(Quaternion):
    """Rotation quaternion ``(cos(theta/2), l sin(theta/2))``.

    The constructor divides by the norm. Both ``q`` and ``-q`` are accepted
    and describe the same rotation; no sign is imposed here.
    """

    __slots__ = ()

    def __init__(self, w: float, x: float = 0.0, y: float = 0.0, z: float = 0.0):
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if n == 0.0:
            raise ValidationError("cannot normalize a zero quaternion")
        super().__init__(w / n, x / n, y / n, z / n)

    @classmethod
    def identity(cls) -> "UnitQuaternion":
        return cls(1.0)

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle: float) -> "UnitQuaternion":
        axis = np.asarray(axis, dtype=float)
        n = np.linalg.norm(axis)
        if n == 0.0:
            raise ValidationError("rotation axis must be non-zero")
        s = math.sin(0.5 * angle) / n
        return cls(math.cos(0.5 * angle), axis[0] * s, axis[1] * s, axis[2] * s)

    @classmethod
    def from_matrix(cls, R) -> "UnitQuaternion":
        """Rotation matrix to quaternion, branching on the largest diagonal term."""
        R = np.asarray(R, dtype=float)
        tr = R[0, 0] + R[1, 1] + R[2, 2]
        i = int(np.argmax([tr, R[0, 0], R[1, 1], R[2, 2]]))
        if i == 0:
            s = 2.0 * math.sqrt(1.0 + tr)
            q = (0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s)
        elif i == 1:
            s = 2.0 * math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
            q = ((R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s)
        elif i == 2:
            s = 2.0 * math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
            q = ((R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s)
        else:
            s = 2.0 * math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
            q = ((R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s)
        return cls(*q)

    def __mul__(self, other):
        if isinstance(other, UnitQuaternion):
            return UnitQuaternion(*_hamilton(self.components(), other.components()))
        return super().__mul__(other)

    def __neg__(self) -> "UnitQuaternion":
        return UnitQuaternion(-self._w, -self._x, -self._y, -self._z)

    def conj(self) -> "UnitQuaternion":
        return UnitQuaternion(self._w, -self._x, -self._y, -self._z)

    def inverse(self) -> "UnitQuaternion":
        return self.conj()

    def to_matrix(self) -> np.ndarray:
        return rotation_matrix(self)

    def rotate(self, v: Sequence[float]) -> np.ndarray:
        return (self * Quaternion.pure(v) * self.conj()).vec


def rotation_matrix(q: Quaternion) -> np.ndarray:
    """3x3 rotation matrix of a (unit) quaternion."""
    w, x, y, z = q.components()
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


class DualQuaternion:
    """Dual quaternion ``real + eps * dual`` with ``eps**2 == 0``."""

    __slots__ = ("_real", "_dual")

    def __init__(self, real: Quaternion, dual: Quaternion):
        object.__setattr__(self, "_real", Quaternion(*real.components()))
        object.__setattr__(self, "_dual", Quaternion(*dual.components()))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def real(self) -> Quaternion:
        return self._real

    @property
    def dual(self) -> Quaternion:
        return self._dual

    def as_array(self) -> np.ndarray:
        """Eight components ``(real w,x,y,z, dual w,x,y,z)``."""
        return np.array(self._real.components() + self._dual.components())

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self._real!r}, {self._dual!r})"

    def __mul__(self, other):
        if isinstance(other, DualQuaternion):
            r, d = _dq_product(self, other)
            return DualQuaternion(Quaternion(*r), Quaternion(*d))
        if isinstance(other, (int, float, np.floating)):
            return DualQuaternion(self._real * other, self._dual * other)
        return NotImplemented

    def __add__(self, other: "DualQuaternion") -> "DualQuaternion":
        return DualQuaternion(self._real + other._real, self._dual + other._dual)

    def __neg__(self) -> "DualQuaternion":
        return DualQuaternion(-self._real, -self._dual)

    def conj(self) -> "DualQuaternion":
        """``D* = P* + eps Q*``."""
        return DualQuaternion(self._real.conj(), self._dual.conj())

    def dagger(self) -> "DualQuaternion":
        """``D† = P* - eps Q*``."""
        return DualQuaternion(self._real.conj(), -self._dual.conj())

    def unit_residuals(self) -> tuple[float, float]:
        """``(| |P| - 1 |, |PQ* + QP*|)``; both vanish for unit dual quaternions."""
        return abs(self._real.norm() - 1.0), abs(2.0 * self._real.dot(self._dual))

    def is_unit(self, tol: float = VALIDATION_TOL) -> bool:
        a, b = self.unit_residuals()
        return a <= tol and b <= tol


def _dq_product(a: DualQuaternion, b: DualQuaternion):
    p1, q1 = a._real.components(), a._dual.components()
    p2, q2 = b._real.components(), b._dual.components()
    real = _hamilton(p1, p2)
    d1 = _hamilton(p1, q2)
    d2 = _hamilton(q1, p2)
    return real, (d1[0] + d2[0], d1[1] + d2[1], d1[2] + d2[2], d1[3] + d2[3])


def _normalize_unit(real, dual):
    """Scale the real part to unit norm and strip the dual component along it."""
    pw, px, py, pz = real
    n = math.sqrt(pw * pw + px * px + py * py + pz * pz)
    if n == 0.0:
        raise ValidationError("real part of a unit dual quaternion cannot vanish")
    inv = 1.0 / n
    pw, px, py, pz = pw * inv, px * inv, py * inv, pz * inv
    qw, qx, qy, qz = (c * inv for c in dual)
    k = pw * qw + px * qx + py * qy + pz * qz
    return (pw, px, py, pz), (qw - k * pw, qx - k * px, qy - k * py, qz - k * pz)


class UnitDualQuaternion(DualQuaternion):
    """Rigid displacement ``Q_R + (eps/2) Q_p Q_R``.

    With ``check=True`` (the default) the input must already satisfy the unit
    conditions to within ``VALIDATION_TOL``; it is then renormalized. Internal
    callers pass ``check=False`` to renormalize without the test.
    """

    __slots__ = ()

    def __init__(self, real: Quaternion, dual: Quaternion, *, check: bool = True):
        if check:
            a = abs(real.norm() - 1.0)
            b = abs(2.0 * real.dot(dual))
            if a > VALIDATION_TOL or b > VALIDATION_TOL:
                raise ValidationError(
                    f"not a unit dual quaternion (|P|-1 = {a:.3g}, PQ*+QP* = {b:.3g})"
                )
        self._fill(real.components(), dual.components())

    def _fill(self, real, dual) -> None:
        r, d = _normalize_unit(real, dual)
        uq = UnitQuaternion.__new__(UnitQuaternion)
        Quaternion.__init__(uq, *r)
        object.__setattr__(self, "_real", uq)
        object.__setattr__(self, "_dual", Quaternion(*d))

    @classmethod
    def _raw(cls, real, dual) -> "UnitDualQuaternion":
        obj = cls.__new__(cls)
        obj._fill(real, dual)
        return obj

    @classmethod
    def identity(cls) -> "UnitDualQuaternion":
        return cls._raw((1.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 0.0))

    @classmethod
    def from_rotation_translation(
        cls, rotation: Quaternion, translation: Sequence[float] = (0.0, 0.0, 0.0)
    ) -> "UnitDualQuaternion":
        qr = UnitQuaternion(*rotation.components())
        dual = Quaternion.pure(translation) * qr * 0.5
        return cls._raw(qr.components(), dual.components())

    @classmethod
    def from_translation(cls, translation: Sequence[float]) -> "UnitDualQuaternion":
        t = np.asarray(translation, dtype=float)
        return cls._raw((1.0, 0.0, 0.0, 0.0), (0.0, 0.5 * t[0], 0.5 * t[1], 0.5 * t[2]))

    @classmethod
    def from_axis_angle(
        cls, axis: Sequence[float], angle: float, point: Sequence[float] = (0.0, 0.0, 0.0)
    ) -> "UnitDualQuaternion":
        """Rotation by ``angle`` about the line through ``point`` along ``axis``."""
        q = UnitQuaternion.from_axis_angle(axis, angle)
        point = np.asarray(point, dtype=float)
        return cls.from_rotation_translation(q, point - q.rotate(point))

    @classmethod
    def from_matrix(cls, T) -> "UnitDualQuaternion":
        T = np.asarray(T, dtype=float)
        return pose_to_dq(PoseRp(T[:3, :3], T[:3, 3]))

    @property
    def rotation(self) -> UnitQuaternion:
        return self._real

    def translation(self) -> np.ndarray:
        """``p`` from ``2 Q P* = (0, p)``."""
        return (self._dual * self._real.conj()).vec * 2.0

    def rotation_matrix(self) -> np.ndarray:
        return rotation_matrix(self._real)

    def as_matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation_matrix()
        T[:3, 3] = self.translation()
        return T

    def __mul__(self, other):
        if isinstance(other, UnitDualQuaternion):
            r, d = _dq_product(self, other)
            return UnitDualQuaternion._raw(r, d)
        return super().__mul__(other)

    def __neg__(self) -> "UnitDualQuaternion":
        return UnitDualQuaternion._raw(
            tuple(-c for c in self._real.components()), tuple(-c for c in self._dual.components())
        )

    def conj(self) -> "UnitDualQuaternion":
        return UnitDualQuaternion._raw(self._real.conj().components(), self._dual.conj().components())

    def inverse(self) -> "UnitDualQuaternion":
        return self.conj()

    def transform_point(self, v: Sequence[float]) -> np.ndarray:
        return transform_point(self, v)

    def same_pose(self, other: "DualQuaternion", tol: float = 1e-10) -> bool:
        """True if ``other`` equals ``self`` or ``-self`` componentwise within ``tol``."""
        a, b = self.as_array(), other.as_array()
        return min(np.max(np.abs(a - b)), np.max(np.abs(a + b))) <= tol


@dataclass(frozen=True)
class PoseRp:
    """Rotation matrix plus position; the homogeneous-matrix form of a pose."""

    R: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        p = np.array(self.p, dtype=float).reshape(3)
        if R.shape != (3, 3):
            raise ValidationError(f"R must be 3x3, got {R.shape}")
        if np.max(np.abs(R.T @ R - np.eye(3))) > VALIDATION_TOL:
            raise ValidationError("R is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > VALIDATION_TOL:
            raise ValidationError("R is not a proper rotation (det != 1)")
        R.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "p", p)

    @classmethod
    def identity(cls) -> "PoseRp":
        return cls(np.eye(3), np.zeros(3))

    def as_matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.R
        T[:3, 3] = self.p
        return T

    def apply(self, v: Iterable[float]) -> np.ndarray:
        return self.R @ np.asarray(v, dtype=float) + self.p


def quat_mul(P: Quaternion, Q: Quaternion) -> Quaternion:
    return P * Q


def quat_conj_norm_inv(Q: Quaternion) -> tuple[Quaternion, float, Quaternion]:
    """Conjugate, norm and inverse of ``Q``; raises for the zero quaternion."""
    return Q.conj(), Q.norm(), Q.inverse()


def dq_mul(D1: DualQuaternion, D2: DualQuaternion) -> DualQuaternion:
    return D1 * D2


def dq_conjugates(D: DualQuaternion) -> tuple[DualQuaternion, DualQuaternion]:
    """Return ``(D*, D†)``."""
    return D.conj(), D.dagger()


def pose_to_dq(pose: PoseRp) -> UnitDualQuaternion:
    q = UnitQuaternion.from_matrix(pose.R)
    return UnitDualQuaternion.from_rotation_translation(q, pose.p)


def dq_to_pose(D: DualQuaternion) -> PoseRp:
    if not isinstance(D, UnitDualQuaternion):
        if not D.is_unit():
            a, b = D.unit_residuals()
            raise ValidationError(
                f"not a unit dual quaternion (|P|-1 = {a:.3g}, PQ*+QP* = {b:.3g})"
            )
        D = UnitDualQuaternion(D.real, D.dual)
    return PoseRp(D.rotation_matrix(), D.translation())


def transform_point(D: DualQuaternion, v: Sequence[float]) -> np.ndarray:
    """Image of point ``v`` under ``D``, read off ``D (1 + eps Q_v) D†``."""
    P, Q = D.real, D.dual
    # D (1 + eps V) D† = P P* + eps (P V P* + Q P* - P Q*)
    Pc = P.conj()
    a = _hamilton(_hamilton(P.components(), (0.0, v[0], v[1], v[2])), Pc.components())
    b = _hamilton(Q.components(), Pc.components())
    c = _hamilton(P.components(), Q.conj().components())
    return np.array([a[1] + b[1] - c[1], a[2] + b[2] - c[2], a[3] + b[3] - c[3]])
