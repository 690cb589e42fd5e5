"""Plan construction: key object poses, shared-parameter paths, joint trajectories."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dualquat import UnitDualQuaternion, ValidationError
from .gait import (
    CuboidObject,
    GaitPoseParams,
    GaitProblem,
    GaitSolution,
    Vertex,
    closure_residuals,
    down_face,
    edge_state_of,
    face_normals,
    gait_frame,
    gait_intermediate_poses,
    lean_angle_gamma,
    leaned_pose,
    solve_gait,
)
from .kinematics import (
    ManipulatorModel,
    RMRCError,
    TrackResult,
    forward_kinematics,
    rmrc_track,
    solve_ik,
)
from .screw import (
    GeneralScrew,
    ScrewDecomposition,
    StepPolicy,
    extract_screw,
    fixed_point_of,
    relative,
    sclerp_path,
    sclerp_taus,
)
from .tolerances import COINCIDENCE_TOL, CONTACT_TOL

__all__ = [
    "Case",
    "ArmSetup",
    "Scenario",
    "PoseSequence",
    "SegmentDiagnostics",
    "PlanResult",
    "PlanningError",
    "classify_case",
    "build_pose_sequence",
    "gait_problem",
    "tumble_sequence",
    "plan",
]


class Case(str, enum.Enum):
    I = "CaseI"
    II = "CaseII"
    III = "CaseIII"


@dataclass
class ArmSetup:
    model: ManipulatorModel
    theta0: np.ndarray
    base_pose: UnitDualQuaternion = field(default_factory=UnitDualQuaternion.identity)
    # object pose expressed in the end-effector frame, one per stage
    grasps: Optional[list[UnitDualQuaternion]] = None

    def __post_init__(self):
        self.theta0 = np.asarray(self.theta0, dtype=float)
        if self.theta0.shape != (self.model.dof,):
            raise ValidationError(f"{self.model.name}: theta0 needs {self.model.dof} values")


@dataclass
class Scenario:
    object: CuboidObject
    C_O: UnitDualQuaternion
    C_F: UnitDualQuaternion
    arms: list[ArmSetup]
    beta: float = math.radians(10.0)
    alpha_max: float = math.radians(35.0)
    k_max: int = 10
    policy: StepPolicy = field(default_factory=StepPolicy)
    waypoints: Optional[list[UnitDualQuaternion]] = None
    stage_breaks: list[int] = field(default_factory=list)
    gait_face: str = "-z"
    case3_order: str = "PGP"
    lam: float = 0.5
    tol: float = 1e-8
    max_inner: int = 200
    angular_scale: float = 1.0
    seed: int = 0
    # validated source document, when loaded from a file
    document: Optional[dict] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.arms:
            raise ValidationError("a scenario needs at least one arm")
        if self.case3_order not in ("PGP", "GP", "PG"):
            raise ValidationError(f"case3_order must be PGP, GP or PG, got {self.case3_order!r}")
        if self.gait_face not in face_normals():
            raise ValidationError(f"unknown gait face {self.gait_face!r}")
        if sorted(set(self.stage_breaks)) != list(self.stage_breaks) or any(b < 1 for b in self.stage_breaks):
            raise ValidationError("stage_breaks must be increasing segment indices >= 1")
        n_stages = len(self.stage_breaks) + 1
        for arm in self.arms:
            if arm.grasps is not None and len(arm.grasps) != n_stages:
                raise ValidationError(
                    f"{arm.model.name}: {len(arm.grasps)} grasp transforms for {n_stages} stages"
                )


@dataclass
class PoseSequence:
    poses: list[UnitDualQuaternion]
    case: Optional[Case]
    gait: Optional[GaitSolution] = None
    notes: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.poses)


@dataclass
class SegmentDiagnostics:
    index: int
    stage: int
    screw: ScrewDecomposition
    pivot_point: Optional[np.ndarray]
    contact_drift: float
    ground_vertices: list[int]
    rigidity_deviation: float
    relative_ee_deviation: float
    iterations: list[int] = field(default_factory=list)
    max_task_error: list[float] = field(default_factory=list)


@dataclass
class PlanResult:
    case: Optional[Case]
    gait: Optional[GaitSolution]
    key_poses: list[UnitDualQuaternion]
    object_poses: list[UnitDualQuaternion]
    taus: np.ndarray
    segment_of: np.ndarray
    stage_of: np.ndarray
    arm_names: list[str]
    ee_poses: list[list[UnitDualQuaternion]]
    joint_trajectories: list[np.ndarray]
    stage_markers: list[int]
    segment_markers: list[int]
    segments: list[SegmentDiagnostics]
    notes: list[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def max_contact_drift(self) -> float:
        return max((s.contact_drift for s in self.segments), default=0.0)


class PlanningError(RuntimeError):
    """Planning failed; ``partial`` is the plan up to the failure, if any."""

    def __init__(self, message: str, partial: Optional[PlanResult] = None):
        super().__init__(message)
        self.partial = partial


def _ground_vertices(obj: CuboidObject, C: UnitDualQuaternion) -> tuple[np.ndarray, np.ndarray]:
    V = obj.world_vertices(C)
    return V, np.flatnonzero(np.abs(V[:, 2]) <= CONTACT_TOL)


def _common_contacts(obj, C1, C2) -> list[int]:
    V1, g1 = _ground_vertices(obj, C1)
    V2, g2 = _ground_vertices(obj, C2)
    return [int(i) for i in np.intersect1d(g1, g2) if np.linalg.norm(V1[i] - V2[i]) <= COINCIDENCE_TOL]


def classify_case(C_O: UnitDualQuaternion, C_F: UnitDualQuaternion, obj: CuboidObject) -> Case:
    """Case I: shared ground vertex/edge. II: same face down. III: otherwise."""
    for name, C in (("C_O", C_O), ("C_F", C_F)):
        if len(_ground_vertices(obj, C)[1]) == 0:
            raise ValidationError(f"{name} has no vertex on the support plane")
    if _common_contacts(obj, C_O, C_F):
        return Case.I
    return Case.II if down_face(C_O) == down_face(C_F) else Case.III


def _require_flat(obj2: CuboidObject, C: UnitDualQuaternion, what: str) -> None:
    V = obj2.world_vertices(C)
    bottom = V[obj2.vertices()[:, 2] < 0]
    if np.max(np.abs(bottom[:, 2])) > CONTACT_TOL:
        raise ValidationError(f"{what}: gaiting needs the object resting on a face")


def _gait_setup(obj, C_start, C_goal, face):
    G, obj2 = gait_frame(obj, face)
    S, F = C_start * G, C_goal * G
    _require_flat(obj2, S, "gait start")
    _require_flat(obj2, F, "gait goal")
    return G, obj2, S, F, edge_state_of(obj2, S), edge_state_of(obj2, F)


def gait_problem(scenario: Scenario) -> GaitProblem:
    """Gait problem between C_O and C_F, which must rest on the same face."""
    face = down_face(scenario.C_O)
    if down_face(scenario.C_F) != face:
        raise ValidationError("start and goal rest on different faces; no single gait connects them")
    _, obj2, _, _, s_state, g_state = _gait_setup(scenario.object, scenario.C_O, scenario.C_F, face)
    return GaitProblem(s_state, g_state, obj2.edge_length, scenario.alpha_max, scenario.k_max)


def _gait_sequence(
    obj: CuboidObject,
    C_start: UnitDualQuaternion,
    C_goal: UnitDualQuaternion,
    face: str,
    beta: float,
    alpha_max: float,
    k_max: int,
    seed: int,
) -> tuple[list[UnitDualQuaternion], Optional[GaitSolution]]:
    G, obj2, S, F, s_state, g_state = _gait_setup(obj, C_start, C_goal, face)
    Gi = G.conj()
    pos, ang = closure_residuals(s_state, g_state)
    if pos <= COINCIDENCE_TOL and ang <= 1e-8:
        return [C_start], None

    problem = GaitProblem(s_state, g_state, obj2.edge_length, alpha_max, k_max)
    sol = solve_gait(problem, seed=seed)
    gamma = lean_angle_gamma(obj2, "y", "z")
    poses = [S, leaned_pose(obj2, s_state, gamma)]
    pivot = sol.start_vertex
    for phi in sol.rotations():
        C2, C3 = gait_intermediate_poses(poses[-1], GaitPoseParams(beta, gamma, pivot), float(phi), obj2)
        poses += [C2, C3]
        pivot = Vertex.B if pivot is Vertex.A else Vertex.A
    # land exactly on the goal edge; the solver closes to round-off
    poses[-1] = leaned_pose(obj2, g_state, gamma)
    out = [P * Gi for P in poses[1:]]
    return [C_start, *out, C_goal], sol


def _tumble_once(obj: CuboidObject, C: UnitDualQuaternion, to_face: str) -> UnitDualQuaternion:
    normals = face_normals()
    f = down_face(C)
    n_f, n_t = normals[f], normals[to_face]
    if abs(n_f @ n_t) > 0.5:
        raise ValidationError(f"faces {f} and {to_face} are not adjacent")
    h = obj.h
    edge_mid = np.abs(n_f) @ h * n_f + np.abs(n_t) @ h * n_t
    axis = C.rotation_matrix() @ np.cross(n_f, n_t)
    return UnitDualQuaternion.from_axis_angle(axis, -math.pi / 2, C.transform_point(edge_mid)) * C


def tumble_sequence(
    obj: CuboidObject, C: UnitDualQuaternion, to_face: str, toward: Optional[Sequence[float]] = None
) -> tuple[list[UnitDualQuaternion], list[str]]:
    """Edge tumbles taking the object from its current face down to ``to_face``.

    Opposite faces take two tumbles; the intermediate face is chosen greedily
    to keep the centre of mass closest to ``toward`` (xy) and is reported.
    """
    normals = face_normals()
    f = down_face(C)
    if f == to_face:
        return [C], []
    if abs(normals[f] @ normals[to_face]) < 0.5:
        return [C, _tumble_once(obj, C, to_face)], []
    mids = [g for g in normals if abs(normals[g] @ normals[f]) < 0.5]
    target = np.zeros(2) if toward is None else np.asarray(toward, dtype=float)[:2]

    def score(g):
        Cm = _tumble_once(obj, C, g)
        return np.linalg.norm(_tumble_once(obj, Cm, to_face).translation()[:2] - target)

    mid = min(mids, key=score)
    C1 = _tumble_once(obj, C, mid)
    return [C, C1, _tumble_once(obj, C1, to_face)], [f"two tumbles {f} -> {mid} -> {to_face} (greedy)"]


def build_pose_sequence(scenario: Scenario) -> PoseSequence:
    """Key object poses such that each consecutive pair is one pivoting move."""
    obj, C_O, C_F = scenario.object, scenario.C_O, scenario.C_F
    if scenario.waypoints is not None:
        poses, case, sol, notes = [C_O, *scenario.waypoints, C_F], None, None, ["explicit waypoints"]
    elif C_O.same_pose(C_F, 1e-12):
        return PoseSequence([C_O], classify_case(C_O, C_F, obj))
    else:
        case = classify_case(C_O, C_F, obj)
        notes = []
        args = (scenario.beta, scenario.alpha_max, scenario.k_max, scenario.seed)
        if case is Case.I:
            poses, sol = [C_O, C_F], None
        elif case is Case.II:
            poses, sol = _gait_sequence(obj, C_O, C_F, down_face(C_O), *args)
        else:
            gface = {
                "PGP": scenario.gait_face,
                "GP": down_face(C_O),
                "PG": down_face(C_F),
            }[scenario.case3_order]
            head, n1 = tumble_sequence(obj, C_O, gface, toward=C_F.translation())
            tail, n2 = tumble_sequence(obj, C_F, gface, toward=C_O.translation())
            mid, sol = _gait_sequence(obj, head[-1], tail[-1], gface, *args)
            poses = head[:-1] + mid + tail[::-1][1:]
            notes += n1 + n2
    poses = _dedupe(poses)
    _check_pivots(poses)
    return PoseSequence(poses, case, sol, notes)


def _dedupe(poses):
    out = [poses[0]]
    for P in poses[1:]:
        if not out[-1].same_pose(P, 1e-12):
            out.append(P)
    return out


def _check_pivots(poses) -> None:
    for i, (A, B) in enumerate(zip(poses, poses[1:])):
        if fixed_point_of(relative(A, B)) is None:
            dec = extract_screw(relative(A, B))
            raise ValidationError(
                f"segment {i}: poses are not related by a pivot (theta={dec.theta:.4g}, d={dec.d:.4g})"
            )


def _segment_contacts(obj, A, B, path):
    """Max drift of the screw-axis point and of shared ground vertices along ``path``."""
    body_pt = fixed_point_of(relative(A, B))
    ref = A.transform_point(body_pt)
    drift = max(np.linalg.norm(P.transform_point(body_pt) - ref) for P in path)
    common = _common_contacts(obj, A, B)
    if common:
        V0 = obj.world_vertices(A)[common]
        for P in path:
            Vp = obj.world_vertices(P)[common]
            drift = max(drift, float(np.max(np.linalg.norm(Vp - V0, axis=1))))
    return ref, float(drift), common


def plan(scenario: Scenario, arm_indices: Optional[Sequence[int]] = None) -> PlanResult:
    """Full plan: key poses, object/EE paths on a shared tau grid, joint trajectories.

    Raises :class:`PlanningError` with the partial plan if tracking fails.
    """
    seq = build_pose_sequence(scenario)
    arms = scenario.arms if arm_indices is None else [scenario.arms[i] for i in arm_indices]
    poses = seq.poses
    nseg = len(poses) - 1
    if scenario.stage_breaks and scenario.stage_breaks[-1] >= max(nseg, 1):
        raise ValidationError(f"stage break {scenario.stage_breaks[-1]} beyond last segment {nseg - 1}")
    stage_of_seg = [sum(1 for b in scenario.stage_breaks if b <= s) for s in range(max(nseg, 1))]

    obj_path: list[UnitDualQuaternion] = [poses[0]]
    taus: list[float] = [0.0]
    seg_of: list[int] = [0]
    st_of: list[int] = [0]
    ee = [[] for _ in arms]
    joints = [[a.theta0.copy()] for a in arms]
    stage_markers, segment_markers, diags = [], [], []
    notes = list(seq.notes)

    grasps = []
    theta = [a.theta0.copy() for a in arms]
    for k, arm in enumerate(arms):
        E0 = arm.base_pose * forward_kinematics(arm.model, theta[k])
        if arm.grasps is None:
            G = E0.conj() * poses[0]
        else:
            G = arm.grasps[0]
            theta[k] = solve_ik(arm.model, theta[k], arm.base_pose.conj() * poses[0] * G.conj(),
                                tol=scenario.tol, angular_scale=scenario.angular_scale)
            joints[k][0] = theta[k].copy()
        grasps.append(G)
        ee[k].append(poses[0] * G.conj())

    def result(error=None):
        n = min([len(obj_path)] + [len(j) for j in joints])
        return PlanResult(
            case=seq.case, gait=seq.gait, key_poses=poses,
            object_poses=obj_path[:n], taus=np.array(taus[:n]), segment_of=np.array(seg_of[:n]),
            stage_of=np.array(st_of[:n]), arm_names=[a.model.name for a in arms],
            ee_poses=[e[:n] for e in ee], joint_trajectories=[np.array(j[:n]) for j in joints],
            stage_markers=stage_markers, segment_markers=segment_markers, segments=diags,
            notes=notes, error=error,
        )

    for s in range(nseg):
        A, B = poses[s], poses[s + 1]
        stage = stage_of_seg[s]
        if s > 0 and stage != stage_of_seg[s - 1]:
            # regrasp: same object pose, new grasp and arm configuration
            stage_markers.append(len(obj_path) - 1)
            obj_path.append(A)
            taus.append(0.0)
            seg_of.append(s)
            st_of.append(stage)
            for k, arm in enumerate(arms):
                if arm.grasps is not None:
                    grasps[k] = arm.grasps[stage]
                target = arm.base_pose.conj() * A * grasps[k].conj()
                try:
                    theta[k] = solve_ik(arm.model, theta[k], target, tol=scenario.tol,
                                        angular_scale=scenario.angular_scale)
                except RMRCError as exc:
                    raise PlanningError(f"regrasp before segment {s}: {exc}", result(str(exc))) from exc
                joints[k].append(theta[k].copy())
                ee[k].append(A * grasps[k].conj())

        grid = sclerp_taus(A, B, scenario.policy)
        path = sclerp_path(A, B, taus=grid)
        ref, drift, common = _segment_contacts(scenario.object, A, B, path)

        # end-effector paths: independent ScLERP of the EE endpoints on the same grid
        ee_paths = []
        rigid = 0.0
        for k in range(len(arms)):
            Gi = grasps[k].conj()
            Ep = sclerp_path(A * Gi, B * Gi, taus=grid)
            for P, E in zip(path, Ep):
                rigid = max(rigid, _pose_gap(P * Gi, E))
            ee_paths.append(Ep)
        rel = 0.0
        for k in range(1, len(arms)):
            R0 = ee_paths[0][0].conj() * ee_paths[k][0]
            for E0_, Ek in zip(ee_paths[0], ee_paths[k]):
                rel = max(rel, _pose_gap(E0_.conj() * Ek, R0))

        diag = SegmentDiagnostics(
            index=s, stage=stage, screw=extract_screw(relative(A, B)), pivot_point=ref,
            contact_drift=drift, ground_vertices=common, rigidity_deviation=rigid,
            relative_ee_deviation=rel,
        )
        diags.append(diag)

        for k, arm in enumerate(arms):
            targets = [arm.base_pose.conj() * E for E in ee_paths[k]]
            try:
                tr = rmrc_track(arm.model, theta[k], targets, lam=scenario.lam, tol=scenario.tol,
                                max_inner=scenario.max_inner, angular_scale=scenario.angular_scale)
            except RMRCError as exc:
                tr = exc.partial
                _append(joints[k], ee[k], tr, ee_paths[k])
                diag.iterations.append(int(tr.iterations.sum()))
                diag.max_task_error.append(float(tr.errors.max()))
                done = len(tr.thetas)
                obj_path.extend(path[1:done])
                taus.extend(float(t) for t in grid[1:done])
                seg_of.extend([s] * (done - 1))
                st_of.extend([stage] * (done - 1))
                raise PlanningError(f"segment {s}: {exc}", result(str(exc))) from exc
            _append(joints[k], ee[k], tr, ee_paths[k])
            theta[k] = tr.thetas[-1].copy()
            diag.iterations.append(int(tr.iterations.sum()))
            diag.max_task_error.append(float(tr.errors.max()))

        obj_path.extend(path[1:])
        taus.extend(float(t) for t in grid[1:])
        seg_of.extend([s] * (len(grid) - 1))
        st_of.extend([stage] * (len(grid) - 1))
        segment_markers.append(len(obj_path) - 1)

    return result()


def _append(joint_list, ee_list, tr: TrackResult, ee_path) -> None:
    for th in tr.thetas[1:]:
        joint_list.append(th.copy())
    ee_list.extend(ee_path[1:len(tr.thetas)])


def _pose_gap(A: UnitDualQuaternion, B: UnitDualQuaternion) -> float:
    """Componentwise distance between two poses, ignoring the quaternion sign."""
    a, b = A.as_array(), B.as_array()
    return float(min(np.max(np.abs(a - b)), np.max(np.abs(a + b))))
