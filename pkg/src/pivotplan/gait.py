"""Object gaiting: intermediate poses and gait-angle optimization.

Body-frame convention for gaiting a cuboid with half-extents ``(hx, hy, hz)``:

* the support face is the body ``-z`` face;
* the contact edge is the bottom edge on the ``-x`` side, with
  ``a = (-hx, +hy, -hz)`` and ``b = (-hx, -hy, -hz)`` so ``w = 2 hy``;
* leaning onto the edge lifts the ``+x`` side by ``gamma = atan2(hx, hz)``,
  which puts the centre of mass above the edge;
* lifting for a pivot about ``a`` uses ``R2 = R1 Rx(-beta)``, about ``b`` the
  mirrored ``R1 Rx(+beta)``; landing uses ``R3 = Rz(alpha) R1``.

Other faces are handled by relabelling the body axes (:func:`gait_frame`).

Gait angles follow the alternating-sign convention of the gait equations: the
edge turns by ``+alpha_1, -alpha_2, +alpha_3, ...`` when the first pivot is
``a`` and by the negated sequence when it is ``b``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize

from .dualquat import UnitDualQuaternion, UnitQuaternion, ValidationError
from .tolerances import CONTACT_TOL

__all__ = [
    "Vertex",
    "CuboidObject",
    "ContactEdgeState",
    "GaitProblem",
    "GaitSolution",
    "GaitPoseParams",
    "GaitInfeasibleError",
    "lean_angle_gamma",
    "gait_frame",
    "edge_state_of",
    "flat_pose",
    "leaned_pose",
    "gait_intermediate_poses",
    "forward_gait",
    "gait_states",
    "closure_residuals",
    "gait_residuals",
    "solve_gait",
    "solve_gait_k",
]

_AXES = {"x": 0, "y": 1, "z": 2}


class Vertex(str, enum.Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class CuboidObject:
    half_extents: tuple[float, float, float]

    def __post_init__(self):
        h = tuple(float(v) for v in self.half_extents)
        if len(h) != 3 or min(h) <= 0.0:
            raise ValidationError(f"half extents must be three positive numbers, got {self.half_extents!r}")
        object.__setattr__(self, "half_extents", h)

    @property
    def h(self) -> np.ndarray:
        return np.array(self.half_extents)

    def vertices(self) -> np.ndarray:
        """The 8 corners in the body frame, index bits ``(sx, sy, sz)`` with 1 = negative."""
        s = np.array([[1 - 2 * ((i >> k) & 1) for k in (2, 1, 0)] for i in range(8)], dtype=float)
        return s * self.h

    @property
    def edge_a(self) -> np.ndarray:
        hx, hy, hz = self.half_extents
        return np.array([-hx, hy, -hz])

    @property
    def edge_b(self) -> np.ndarray:
        hx, hy, hz = self.half_extents
        return np.array([-hx, -hy, -hz])

    @property
    def edge_length(self) -> float:
        return 2.0 * self.half_extents[1]

    def world_vertices(self, C: UnitDualQuaternion) -> np.ndarray:
        R = C.rotation_matrix()
        return self.vertices() @ R.T + C.translation()


@dataclass(frozen=True)
class ContactEdgeState:
    """Contact edge on the support plane: vertices ``a``, ``b`` and heading ``alpha``."""

    a: np.ndarray
    b: np.ndarray
    alpha: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(2)
        b = np.asarray(self.b, dtype=float).reshape(2)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "alpha", float(self.alpha))
        d = b - a
        if np.linalg.norm(d) == 0.0:
            raise ValidationError("contact edge has zero length")
        if abs(_wrap(math.atan2(d[1], d[0]) - self.alpha)) > 1e-9:
            raise ValidationError("alpha does not match the direction of b - a")

    @classmethod
    def from_vertex(cls, a: Sequence[float], alpha: float, w: float) -> "ContactEdgeState":
        a = np.asarray(a, dtype=float)
        return cls(a, a + w * np.array([math.cos(alpha), math.sin(alpha)]), alpha)

    @property
    def w(self) -> float:
        return float(np.linalg.norm(self.b - self.a))


@dataclass(frozen=True)
class GaitProblem:
    start: ContactEdgeState
    goal: ContactEdgeState
    w: float
    alpha_max: float = math.radians(35.0)
    k_max: int = 10

    def __post_init__(self):
        if not self.w > 0.0:
            raise ValidationError("edge length w must be positive")
        if not 0.0 < self.alpha_max <= math.pi / 2 + 1e-15:
            raise ValidationError("alpha_max must lie in (0, pi/2]")
        if int(self.k_max) < 1:
            raise ValidationError("k_max must be a positive integer")
        for name in ("start", "goal"):
            if abs(getattr(self, name).w - self.w) > 1e-9:
                raise ValidationError(f"{name} edge length differs from w")


@dataclass(frozen=True)
class GaitSolution:
    k: int
    alphas: np.ndarray
    start_vertex: Vertex
    position_residual: float
    angle_residual: float
    feasible: bool = True

    @property
    def objective(self) -> float:
        return float(np.linalg.norm(self.alphas))

    def rotations(self) -> np.ndarray:
        """Signed heading change of the contact edge at each pivot."""
        return _rotations(self.alphas, self.start_vertex)


@dataclass(frozen=True)
class GaitPoseParams:
    beta: float
    gamma: float
    pivot_vertex: Vertex = Vertex.A

    def __post_init__(self):
        if not 0.0 <= self.beta < math.pi / 2:
            raise ValidationError("beta must lie in [0, pi/2)")
        if not 0.0 <= self.gamma < math.pi / 2:
            raise ValidationError("gamma must lie in [0, pi/2)")
        object.__setattr__(self, "pivot_vertex", Vertex(self.pivot_vertex))


class GaitInfeasibleError(RuntimeError):
    """No gait with ``k <= k_max`` satisfies the constraints; ``best`` holds the closest try."""

    def __init__(self, message: str, best: Optional[GaitSolution]):
        super().__init__(message)
        self.best = best


def _wrap(angle: float) -> float:
    return math.atan2(math.sin(angle), math.cos(angle))


def lean_angle_gamma(obj: CuboidObject, contact_edge_axis: str, down_axis: str = "z") -> float:
    """Tilt about a bottom edge that puts the centre of mass straight above it.

    ``contact_edge_axis`` is the body axis the edge runs along and
    ``down_axis`` the body axis normal to the resting face.
    """
    e, d = _AXES[contact_edge_axis], _AXES[down_axis]
    if e == d:
        raise ValidationError("edge axis must differ from the down axis")
    perp = 3 - e - d
    return math.atan2(obj.half_extents[perp], obj.half_extents[d])


_FACES = {
    "+x": np.array([1.0, 0, 0]),
    "-x": np.array([-1.0, 0, 0]),
    "+y": np.array([0, 1.0, 0]),
    "-y": np.array([0, -1.0, 0]),
    "+z": np.array([0, 0, 1.0]),
    "-z": np.array([0, 0, -1.0]),
}


def face_normals() -> dict[str, np.ndarray]:
    return dict(_FACES)


def down_face(C: UnitDualQuaternion) -> str:
    """Body face whose outward normal points most nearly straight down."""
    R = C.rotation_matrix()
    return min(_FACES, key=lambda f: (R @ _FACES[f])[2])


def gait_frame(obj: CuboidObject, face: str) -> tuple[UnitDualQuaternion, CuboidObject]:
    """Relabel body axes so that ``face`` becomes the ``-z`` face.

    Returns ``(G, obj2)``: a pure rotation mapping relabelled coordinates to
    body coordinates, and the cuboid in the relabelled frame. A pose ``C`` of
    the original body corresponds to ``C * G`` of the relabelled one.
    """
    n = _FACES[face]
    z = -n
    x = next(e for e in np.eye(3) if abs(e @ n) < 0.5)
    y = np.cross(z, x)
    G = np.column_stack([x, y, z])
    h = np.abs(G.T @ obj.h)
    Gq = UnitDualQuaternion.from_rotation_translation(UnitQuaternion.from_matrix(G))
    return Gq, CuboidObject(tuple(h))


def edge_state_of(obj: CuboidObject, C: UnitDualQuaternion) -> ContactEdgeState:
    """Planar contact-edge state of pose ``C`` (gait convention, edge on the ground)."""
    a = C.transform_point(obj.edge_a)
    b = C.transform_point(obj.edge_b)
    if max(abs(a[2]), abs(b[2])) > CONTACT_TOL:
        raise ValidationError("contact edge is not on the support plane")
    d = b[:2] - a[:2]
    return ContactEdgeState(a[:2], b[:2], math.atan2(d[1], d[0]))


def _rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _pose_with_vertex(R: np.ndarray, body_pt: np.ndarray, world_pt: np.ndarray) -> UnitDualQuaternion:
    q = UnitQuaternion.from_matrix(R)
    return UnitDualQuaternion.from_rotation_translation(q, world_pt - R @ body_pt)


def flat_pose(obj: CuboidObject, state: ContactEdgeState) -> UnitDualQuaternion:
    """Pose resting on the ``-z`` face with the contact edge at ``state``."""
    R = _rot_z(state.alpha + math.pi / 2)
    return _pose_with_vertex(R, obj.edge_a, np.r_[state.a, 0.0])


def leaned_pose(obj: CuboidObject, state: ContactEdgeState, gamma: float) -> UnitDualQuaternion:
    """Pose balanced on the contact edge at ``state``, tilted by ``gamma``."""
    R = _rot_z(state.alpha + math.pi / 2) @ _rot_y(-gamma)
    return _pose_with_vertex(R, obj.edge_a, np.r_[state.a, 0.0])


def _check_edge_contact(obj: CuboidObject, C1: UnitDualQuaternion, gamma: float) -> None:
    za = C1.transform_point(obj.edge_a)[2]
    zb = C1.transform_point(obj.edge_b)[2]
    if max(abs(za), abs(zb)) > CONTACT_TOL:
        raise ValidationError("C1 does not have its contact edge on the support plane")
    # lean: body z axis tilted by gamma towards world -x_body direction
    z_axis = C1.rotation_matrix()[:, 2]
    tilt = math.acos(max(-1.0, min(1.0, z_axis[2])))
    if abs(tilt - gamma) > CONTACT_TOL:
        raise ValidationError(f"C1 is tilted by {tilt:.6g} rad, expected gamma = {gamma:.6g}")
    others = [v for v in obj.world_vertices(C1)[:, 2]]
    if min(others) < -CONTACT_TOL:
        raise ValidationError("C1 penetrates the support plane")


def gait_intermediate_poses(
    C1: UnitDualQuaternion, params: GaitPoseParams, alpha: float, obj: CuboidObject
) -> tuple[UnitDualQuaternion, UnitDualQuaternion]:
    """Lifted pose ``C2`` and landed pose ``C3`` for one pivot starting at ``C1``.

    ``alpha`` is the heading change of the contact edge (positive is
    counter-clockwise seen from above). All three poses share the pivot vertex.
    """
    _check_edge_contact(obj, C1, params.gamma)
    if params.pivot_vertex is Vertex.A:
        pivot_body, lift = obj.edge_a, -params.beta
    else:
        pivot_body, lift = obj.edge_b, params.beta
    pivot = C1.transform_point(pivot_body)
    x_world = C1.rotation_matrix()[:, 0]
    C2 = UnitDualQuaternion.from_axis_angle(x_world, lift, pivot) * C1 if lift else C1
    C3 = UnitDualQuaternion.from_axis_angle([0.0, 0.0, 1.0], alpha, pivot) * C1 if alpha else C1
    return C2, C3


def _rotations(alphas: Iterable[float], start_vertex: Vertex) -> np.ndarray:
    alphas = np.asarray(list(alphas), dtype=float)
    signs = np.where(np.arange(len(alphas)) % 2 == 0, 1.0, -1.0)
    if Vertex(start_vertex) is Vertex.B:
        signs = -signs
    return signs * alphas


def gait_states(
    start: ContactEdgeState, alphas: Sequence[float], start_vertex: Vertex, w: float
) -> list[ContactEdgeState]:
    """Edge states after each pivot (the start state first)."""
    if not w > 0.0:
        raise ValidationError("w must be positive")
    a, b = start.a.copy(), start.b.copy()
    heading = start.alpha
    pivot = Vertex(start_vertex)
    states = [start]
    for phi in _rotations(alphas, pivot):
        heading += phi
        u = w * np.array([math.cos(heading), math.sin(heading)])
        if pivot is Vertex.A:
            b = a + u
            pivot = Vertex.B
        else:
            a = b - u
            pivot = Vertex.A
        states.append(ContactEdgeState(a.copy(), b.copy(), _wrap(heading)))
    return states


def forward_gait(
    start: ContactEdgeState, alphas: Sequence[float], start_vertex: Vertex, w: float
) -> ContactEdgeState:
    """Apply the pivots one by one as planar rotations; return the last edge."""
    return gait_states(start, alphas, start_vertex, w)[-1]


def closure_residuals(reached: ContactEdgeState, goal: ContactEdgeState) -> tuple[float, float]:
    """(max vertex distance in m, wrapped heading error in rad)."""
    pos = max(np.linalg.norm(reached.a - goal.a), np.linalg.norm(reached.b - goal.b))
    return float(pos), abs(_wrap(reached.alpha - goal.alpha))


def gait_residuals(problem: GaitProblem, alphas: np.ndarray, start_vertex: Vertex) -> np.ndarray:
    """Constraint residuals of the gait equations: ``[dx, dy, dheading]``.

    The displacement of the last-moved vertex is written as the alternating sum
    of edge directions; the heading as the alternating sum of angles.
    """
    r, _ = _residuals_and_jac(problem, np.asarray(alphas, dtype=float), Vertex(start_vertex))
    return r


def _residuals_and_jac(problem: GaitProblem, alphas: np.ndarray, vertex: Vertex):
    k = len(alphas)
    s0, g = problem.start, problem.goal
    w = problem.w
    sigma = -1.0 if vertex is Vertex.A else 1.0
    alt = np.where(np.arange(1, k + 1) % 2 == 0, 1.0, -1.0)  # (-1)^i
    abar = np.cumsum(alt * alphas)
    e = s0.alpha + sigma * abar
    c, s = np.cos(e), np.sin(e)
    x_pred = sigma * w * np.array([alt @ c, alt @ s])
    if vertex is Vertex.A:
        x = (g.b if k % 2 else g.a) - s0.a
    else:
        x = (g.a if k % 2 else g.b) - s0.b
    ang = _wrap(s0.alpha + sigma * abar[-1] - g.alpha) if k else _wrap(s0.alpha - g.alpha)
    r = np.array([x_pred[0] - x[0], x_pred[1] - x[1], ang])

    # d x_pred / d alpha_j = w (-1)^j sum_{i >= j} (-1)^i [-sin e_i, cos e_i]
    tail_s = np.cumsum((alt * -s)[::-1])[::-1]
    tail_c = np.cumsum((alt * c)[::-1])[::-1]
    J = np.empty((3, k))
    J[0] = w * alt * tail_s
    J[1] = w * alt * tail_c
    J[2] = sigma * alt
    return r, J


def _even_split_seed(problem: GaitProblem, k: int, vertex: Vertex) -> np.ndarray:
    total = _wrap(problem.goal.alpha - problem.start.alpha)
    phi = np.full(k, total / k)
    return np.clip(_rotations(phi, vertex), -problem.alpha_max, problem.alpha_max)


def _polish(problem, x, vertex, bound, iters=20):
    """Minimum-norm Newton corrections onto the constraint set, kept in bounds."""
    scale = np.array([1.0, 1.0, problem.w])
    for _ in range(iters):
        r, J = _residuals_and_jac(problem, x, vertex)
        if np.max(np.abs(r)) < 1e-15:
            break
        step = np.linalg.lstsq(J * scale[:, None], -r * scale, rcond=None)[0]
        x_new = np.clip(x + step, -bound, bound)
        r_new, _ = _residuals_and_jac(problem, x_new, vertex)
        if np.linalg.norm(r_new * scale) >= np.linalg.norm(r * scale):
            break
        x = x_new
    return x


def _check(problem, x, vertex):
    reached = forward_gait(problem.start, x, vertex, problem.w)
    return closure_residuals(reached, problem.goal)


def solve_gait_k(
    problem: GaitProblem,
    k: int,
    start_vertex: Vertex,
    *,
    n_starts: int = 32,
    seed: int = 0,
    seeds: Sequence[Sequence[float]] = (),
    pos_tol: float = 1e-6,
    ang_tol: float = 1e-8,
) -> GaitSolution:
    """Best gait with exactly ``k`` pivots from ``start_vertex``.

    Minimizes ``|alpha|`` under the closure constraints and bounds from a set
    of starting points: the zero vector, an even split of the heading change,
    any caller-supplied ``seeds`` of length ``k`` and ``n_starts`` random
    draws. The returned solution is feasible if any start converged;
    otherwise it is the start with the smallest constraint violation.
    """
    vertex = Vertex(start_vertex)
    bound = problem.alpha_max
    rng = np.random.default_rng(seed)
    starts = [np.zeros(k), _even_split_seed(problem, k, vertex)]
    starts += [np.clip(np.asarray(s, dtype=float), -bound, bound) for s in seeds if len(s) == k]
    starts += list(rng.uniform(-bound, bound, size=(n_starts, k)))
    scale = np.array([1.0, 1.0, problem.w])

    cons = {
        "type": "eq",
        "fun": lambda a: _residuals_and_jac(problem, a, vertex)[0] * scale,
        "jac": lambda a: _residuals_and_jac(problem, a, vertex)[1] * scale[:, None],
    }
    best_ok: Optional[GaitSolution] = None
    best_bad: Optional[tuple[float, GaitSolution]] = None
    for x0 in starts:
        # project onto the constraint set first; cheap and settles infeasible k quickly
        proj = least_squares(
            lambda a: _residuals_and_jac(problem, a, vertex)[0] * scale,
            x0,
            jac=lambda a: _residuals_and_jac(problem, a, vertex)[1] * scale[:, None],
            bounds=(-bound, bound),
            method="trf",
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
            max_nfev=100,
        )
        x = proj.x
        pos, ang = _check(problem, x, vertex)
        if pos <= pos_tol and ang <= ang_tol:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = minimize(
                    lambda a: 0.5 * float(a @ a),
                    x,
                    jac=lambda a: a,
                    method="SLSQP",
                    bounds=[(-bound, bound)] * k,
                    constraints=[cons],
                    options={"ftol": 1e-14, "maxiter": 100},
                )
            x_opt = _polish(problem, np.clip(res.x, -bound, bound), vertex, bound)
            pos_o, ang_o = _check(problem, x_opt, vertex)
            if pos_o <= pos_tol and ang_o <= ang_tol and x_opt @ x_opt <= x @ x:
                x, pos, ang = x_opt, pos_o, ang_o
            else:
                x = _polish(problem, x, vertex, bound)
                pos, ang = _check(problem, x, vertex)
        sol = GaitSolution(k, x, vertex, pos, ang, feasible=pos <= pos_tol and ang <= ang_tol)
        if sol.feasible:
            if best_ok is None or sol.objective < best_ok.objective:
                best_ok = sol
        else:
            viol = pos + problem.w * ang
            if best_bad is None or viol < best_bad[0]:
                best_bad = (viol, sol)
    return best_ok if best_ok is not None else best_bad[1]


def solve_gait(
    problem: GaitProblem,
    *,
    n_starts: int = 32,
    seed: int = 0,
    seeds: Sequence[Sequence[float]] = (),
    pos_tol: float = 1e-6,
    ang_tol: float = 1e-8,
) -> GaitSolution:
    """Fewest pivots (then smallest ``|alpha|``) taking ``start`` to ``goal``.

    ``k`` increases from 1 and both starting vertices are tried at each ``k``;
    the first ``k`` with a feasible gait wins. Identical start and goal give
    ``k = 0``. Raises :class:`GaitInfeasibleError` when nothing up to
    ``k_max`` closes.
    """
    pos, ang = closure_residuals(problem.start, problem.goal)
    if pos <= pos_tol and ang <= ang_tol:
        return GaitSolution(0, np.zeros(0), Vertex.A, pos, ang)

    turn = abs(_wrap(problem.goal.alpha - problem.start.alpha))
    best_bad = None
    for k in range(1, int(problem.k_max) + 1):
        if k * problem.alpha_max < turn - ang_tol:
            continue  # heading change out of reach with k bounded pivots
        found = []
        for i, vertex in enumerate((Vertex.A, Vertex.B)):
            sol = solve_gait_k(
                problem, k, vertex, n_starts=n_starts, seed=seed + 1000 * k + i,
                seeds=seeds, pos_tol=pos_tol, ang_tol=ang_tol,
            )
            if sol.feasible:
                found.append(sol)
            elif best_bad is None or sol.position_residual < best_bad.position_residual:
                best_bad = sol
        if found:
            return min(found, key=lambda s: s.objective)
    raise GaitInfeasibleError(
        f"no feasible gait with k <= {problem.k_max} and |alpha_i| <= "
        f"{math.degrees(problem.alpha_max):.4g} deg", best_bad
    )
