"""Screw parameters, dual-quaternion powers and screw linear interpolation.

A unit dual quaternion ``P + eps Q`` with ``P = (cos(theta/2), l sin(theta/2))``
is a rotation ``theta`` about the line with Plücker coordinates ``(l, m)``
combined with a translation ``d`` along it. Raising it to a real power scales
``theta`` and ``d`` while keeping the line fixed, so ``D1 (D1^-1 D2)^tau``
sweeps a constant-screw path from ``D1`` to ``D2``. If both end poses keep a
body point at the same place, the screw has zero pitch and passes through that
point, and every pose on the path keeps it there too. This is what lets a
pivoting motion be planned without writing down the contact constraint.

Only ``theta ~ 0`` is handled as a pure translation. A half turn
(``theta = pi``) is an ordinary rotation: ``cot(theta/2)`` is simply zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .dualquat import UnitDualQuaternion, UnitQuaternion
from .tolerances import ANGLE_TOL, LINEAR_TOL, PITCH_TOL

__all__ = [
    "ConfigError",
    "ScrewParameters",
    "GeneralScrew",
    "PureTranslation",
    "Identity",
    "StepPolicy",
    "extract_screw",
    "screw_to_dq",
    "dq_pow",
    "sclerp",
    "sclerp_taus",
    "sclerp_path",
    "fixed_point_of",
    "relative",
]


class ConfigError(ValueError):
    """Invalid configuration value (step counts, increments, ...)."""


@dataclass(frozen=True)
class ScrewParameters:
    """Screw axis ``(l, m)`` in Plücker form, rotation ``theta``, translation ``d``."""

    l: np.ndarray
    m: np.ndarray
    theta: float
    d: float

    def point(self) -> np.ndarray:
        """Point on the axis closest to the origin, ``l x m``."""
        return _cross(self.l, self.m)


@dataclass(frozen=True)
class GeneralScrew:
    params: ScrewParameters

    @property
    def theta(self) -> float:
        return self.params.theta

    @property
    def d(self) -> float:
        return self.params.d


@dataclass(frozen=True)
class PureTranslation:
    direction: np.ndarray
    d: float
    # residual rotation below ANGLE_TOL, kept so powers stay exact
    rotation: UnitQuaternion = UnitQuaternion(1.0)

    theta = 0.0


@dataclass(frozen=True)
class Identity:
    theta = 0.0
    d = 0.0


ScrewDecomposition = Union[GeneralScrew, PureTranslation, Identity]


def _canonical(D: UnitDualQuaternion) -> UnitDualQuaternion:
    return -D if D.real.w < 0.0 else D


def extract_screw(D: UnitDualQuaternion) -> ScrewDecomposition:
    """Screw decomposition of a displacement.

    ``D`` and ``-D`` are the same displacement; the representative with a
    non-negative scalar part is used, so ``theta`` lands in ``[0, pi]``.
    """
    D = _canonical(D)
    P, Q = D.real, D.dual
    p0, x, y, z = P.components()
    npr = math.sqrt(x * x + y * y + z * z)
    p = (Q * P.conj()).vec * 2.0
    theta = 2.0 * math.atan2(npr, p0)

    if theta < ANGLE_TOL:
        dist = float(np.linalg.norm(p))
        if dist < LINEAR_TOL:
            return Identity()
        return PureTranslation(direction=p / dist, d=dist, rotation=P)

    l = np.array([x / npr, y / npr, z / npr])
    d = float(p @ l)
    half = 0.5 * theta
    cot = math.cos(half) / math.sin(half)
    m = 0.5 * (_cross(p, l) + (p - d * l) * cot)
    return GeneralScrew(ScrewParameters(l=l, m=m, theta=theta, d=d))


def _cross(a, b) -> np.ndarray:
    return np.array(
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    )


def screw_to_dq(params: ScrewParameters, tau: float = 1.0) -> UnitDualQuaternion:
    """Displacement along the screw scaled by ``tau``."""
    l, m = params.l, params.m
    half = 0.5 * tau * params.theta
    s, c = math.sin(half), math.cos(half)
    hd = 0.5 * tau * params.d
    real = (c, s * l[0], s * l[1], s * l[2])
    dv = hd * c * l + s * m
    dual = (-hd * s, dv[0], dv[1], dv[2])
    return UnitDualQuaternion._raw(real, dual)


def _pow_decomposed(dec: ScrewDecomposition, tau: float) -> UnitDualQuaternion:
    if isinstance(dec, GeneralScrew):
        return screw_to_dq(dec.params, tau)
    if isinstance(dec, PureTranslation):
        rot = dec.rotation
        s = float(np.linalg.norm(rot.vec))
        if s > 0.0:
            # sub-tolerance rotation: scale its angle too
            rot = UnitQuaternion.from_axis_angle(rot.vec, tau * 2.0 * math.atan2(s, rot.w))
        else:
            rot = UnitQuaternion(1.0)
        return UnitDualQuaternion.from_rotation_translation(rot, tau * dec.d * dec.direction)
    return UnitDualQuaternion.identity()


def dq_pow(D: UnitDualQuaternion, tau: float) -> UnitDualQuaternion:
    return _pow_decomposed(extract_screw(D), tau)


def relative(D1: UnitDualQuaternion, D2: UnitDualQuaternion) -> UnitDualQuaternion:
    """``D1^-1 D2``, sign chosen so its scalar part is non-negative."""
    return _canonical(D1.conj() * D2)


def sclerp(D1: UnitDualQuaternion, D2: UnitDualQuaternion, tau: float) -> UnitDualQuaternion:
    """``D1 (D1^-1 D2)^tau`` along the shorter of the two double-cover paths."""
    return D1 * dq_pow(relative(D1, D2), tau)


@dataclass(frozen=True)
class StepPolicy:
    """Either a fixed pose count or caps on per-step rotation and translation."""

    steps: Optional[int] = None
    dtheta_max: float = math.radians(2.0)
    dd_max: float = 0.005

    def __post_init__(self):
        if self.steps is not None:
            if int(self.steps) != self.steps or self.steps < 2:
                raise ConfigError(f"steps must be an integer >= 2, got {self.steps!r}")
        elif not (self.dtheta_max > 0.0 and self.dd_max > 0.0):
            raise ConfigError("dtheta_max and dd_max must be positive")


def sclerp_taus(D1: UnitDualQuaternion, D2: UnitDualQuaternion, policy: StepPolicy = StepPolicy()) -> np.ndarray:
    """Uniform parameter grid on [0, 1] for the segment ``D1 -> D2``."""
    if policy.steps is not None:
        return np.linspace(0.0, 1.0, int(policy.steps))
    dec = extract_screw(relative(D1, D2))
    n = max(
        1,
        math.ceil(dec.theta / policy.dtheta_max - 1e-12),
        math.ceil(abs(dec.d) / policy.dd_max - 1e-12),
    )
    return np.linspace(0.0, 1.0, n + 1)


def sclerp_path(
    D1: UnitDualQuaternion,
    D2: UnitDualQuaternion,
    policy: StepPolicy = StepPolicy(),
    taus: Optional[Sequence[float]] = None,
) -> list[UnitDualQuaternion]:
    """Poses along the ScLERP curve at ``taus`` (default: grid from ``policy``).

    The first and last entries are ``D1`` and ``D2`` exactly rather than
    recomputed endpoints; ``D2`` is negated if needed so that quaternion signs
    stay continuous along the path.
    """
    if taus is None:
        taus = sclerp_taus(D1, D2, policy)
    dec = extract_screw(relative(D1, D2))
    end = -D2 if (D1.conj() * D2).real.w < 0.0 else D2
    out = []
    for t in taus:
        if t == 0.0:
            out.append(D1)
        elif t == 1.0:
            out.append(end)
        else:
            out.append(D1 * _pow_decomposed(dec, float(t)))
    return out


def fixed_point_of(D12: UnitDualQuaternion) -> Optional[np.ndarray]:
    """A point on the rotation axis of a zero-pitch displacement, else None."""
    dec = extract_screw(D12)
    if not isinstance(dec, GeneralScrew) or abs(dec.d) > PITCH_TOL:
        return None
    return dec.params.point()

