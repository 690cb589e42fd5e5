import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pivotplan.dualquat import UnitDualQuaternion, ValidationError
from pivotplan.gait import (
    ContactEdgeState,
    CuboidObject,
    GaitInfeasibleError,
    GaitPoseParams,
    GaitProblem,
    Vertex,
    closure_residuals,
    down_face,
    edge_state_of,
    flat_pose,
    forward_gait,
    gait_frame,
    gait_intermediate_poses,
    gait_residuals,
    lean_angle_gamma,
    leaned_pose,
    solve_gait,
    solve_gait_k,
)
from pivotplan.screw import fixed_point_of, relative

W = 0.2
AMAX = math.radians(35.0)


def planar_walk(a, b, rotations, first_pivot):
    """Oracle: rotate the free vertex about the pivot with 2x2 rotation matrices."""
    a, b = np.array(a, float), np.array(b, float)
    pivot = first_pivot
    for phi in rotations:
        R = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
        if pivot == "A":
            b = a + R @ (b - a)
        else:
            a = b + R @ (a - b)
        pivot = "B" if pivot == "A" else "A"
    return a, b


def signed_rotations(alphas, vertex):
    s = 1.0 if vertex == "A" else -1.0
    return [s * (-1) ** i * a for i, a in enumerate(alphas)]


angles = st.floats(-AMAX, AMAX, allow_nan=False)


@settings(max_examples=200)
@given(st.lists(angles, min_size=1, max_size=8), st.sampled_from(["A", "B"]),
       st.floats(-math.pi, math.pi), st.floats(-1, 1), st.floats(-1, 1))
def test_forward_gait_matches_planar_rotation_oracle(alphas, vertex, heading, x, y):
    start = ContactEdgeState.from_vertex([x, y], heading, W)
    got = forward_gait(start, alphas, Vertex(vertex), W)
    a, b = planar_walk(start.a, start.b, signed_rotations(alphas, vertex), vertex)
    assert np.allclose(got.a, a, atol=1e-12) and np.allclose(got.b, b, atol=1e-12)
    assert got.alpha == pytest.approx(math.atan2(*(b - a)[::-1]), abs=1e-12)


@settings(max_examples=200)
@given(st.lists(angles, min_size=1, max_size=8), st.sampled_from(["A", "B"]),
       st.floats(-math.pi, math.pi))
def test_closed_form_residuals_vanish_on_forward_gait(alphas, vertex, heading):
    start = ContactEdgeState.from_vertex([0.1, -0.2], heading, W)
    goal = forward_gait(start, alphas, Vertex(vertex), W)
    r = gait_residuals(GaitProblem(start, goal, W), np.array(alphas), Vertex(vertex))
    assert np.max(np.abs(r)) < 1e-12


def test_residual_jacobian_matches_finite_differences(rng):
    from pivotplan.gait import _residuals_and_jac

    start = ContactEdgeState.from_vertex([0, 0], 0.3, W)
    goal = ContactEdgeState.from_vertex([0.2, 0.1], -0.5, W)
    prob = GaitProblem(start, goal, W)
    for vertex in Vertex:
        x = rng.uniform(-AMAX, AMAX, 5)
        _, J = _residuals_and_jac(prob, x, vertex)
        h = 1e-6
        for j in range(5):
            e = np.zeros(5)
            e[j] = h
            fd = (_residuals_and_jac(prob, x + e, vertex)[0] - _residuals_and_jac(prob, x - e, vertex)[0]) / (2 * h)
            assert np.allclose(J[:, j], fd, atol=1e-8)


def test_identical_start_and_goal_needs_no_pivot():
    s = ContactEdgeState.from_vertex([0.3, 0.3], 1.0, W)
    sol = solve_gait(GaitProblem(s, s, W))
    assert sol.k == 0 and sol.feasible and len(sol.alphas) == 0


def test_single_pivot_is_found():
    s = ContactEdgeState.from_vertex([0, 0], 0.0, W)
    g = forward_gait(s, [0.3], Vertex.A, W)
    sol = solve_gait(GaitProblem(s, g, W))
    assert sol.k == 1
    assert sol.alphas[0] == pytest.approx(0.3, abs=1e-9)


def test_infeasible_goal_reports_best_attempt():
    s = ContactEdgeState.from_vertex([0, 0], 0.0, W)
    g = ContactEdgeState.from_vertex([1.0, 0.0], 0.0, W)
    with pytest.raises(GaitInfeasibleError) as info:
        solve_gait(GaitProblem(s, g, W, k_max=2), n_starts=4)
    assert info.value.best is not None and not info.value.best.feasible


def test_heading_out_of_reach_is_rejected_without_search():
    s = ContactEdgeState.from_vertex([0, 0], 0.0, W)
    g = ContactEdgeState.from_vertex([0, 0], math.radians(90.0), W)
    with pytest.raises(GaitInfeasibleError):
        solve_gait(GaitProblem(s, g, W, alpha_max=math.radians(1.0), k_max=10))


def test_solve_gait_k_respects_bounds(rng):
    s = ContactEdgeState.from_vertex([0, 0], 0.0, W)
    g = forward_gait(s, [0.2, -0.4, 0.1], Vertex.B, W)
    sol = solve_gait_k(GaitProblem(s, g, W), 3, Vertex.B, n_starts=8)
    assert sol.feasible
    assert np.all(np.abs(sol.alphas) <= AMAX + 1e-12)


def test_solver_is_deterministic():
    s = ContactEdgeState.from_vertex([0, 0], 0.0, W)
    g = ContactEdgeState.from_vertex([0.05, 0.02], math.radians(-30), W)
    a = solve_gait(GaitProblem(s, g, W), seed=3, n_starts=8)
    b = solve_gait(GaitProblem(s, g, W), seed=3, n_starts=8)
    assert a.k == b.k and np.array_equal(a.alphas, b.alphas)


def test_problem_validation():
    s = ContactEdgeState.from_vertex([0, 0], 0.0, W)
    g = ContactEdgeState.from_vertex([0, 0], 0.0, 0.3)
    with pytest.raises(ValidationError):
        GaitProblem(s, g, W)
    with pytest.raises(ValidationError):
        GaitProblem(s, s, W, alpha_max=0.0)
    with pytest.raises(ValidationError):
        ContactEdgeState([0, 0], [0, 0], 0.0)
    with pytest.raises(ValidationError):
        ContactEdgeState([0, 0], [1, 0], 0.5)


def test_lean_angle_puts_centre_of_mass_over_edge():
    obj = CuboidObject((0.1, 0.1, 0.15))
    gamma = lean_angle_gamma(obj, "y", "z")
    assert gamma == pytest.approx(math.atan2(0.1, 0.15))
    s = ContactEdgeState.from_vertex([0.2, 0.3], 0.4, obj.edge_length)
    C = leaned_pose(obj, s, gamma)
    com = C.translation()
    mid = np.r_[(s.a + s.b) / 2, 0.0]
    assert np.allclose(com[:2], mid[:2], atol=1e-15)
    assert edge_state_of(obj, C).alpha == pytest.approx(0.4)


def test_flat_pose_and_edge_state_roundtrip():
    obj = CuboidObject((0.1, 0.12, 0.15))
    s = ContactEdgeState.from_vertex([0.5, -0.1], -1.2, obj.edge_length)
    C = flat_pose(obj, s)
    assert down_face(C) == "-z"
    assert np.allclose(obj.world_vertices(C)[:, 2].min(), 0.0, atol=1e-15)
    back = edge_state_of(obj, C)
    assert closure_residuals(back, s)[0] < 1e-15


@pytest.mark.parametrize("vertex", [Vertex.A, Vertex.B])
@pytest.mark.parametrize("alpha", [-0.5, 0.3])
def test_intermediate_poses_keep_pivot_and_edge_contact(vertex, alpha):
    obj = CuboidObject((0.1, 0.1, 0.15))
    gamma = lean_angle_gamma(obj, "y", "z")
    s = ContactEdgeState.from_vertex([0, 0], 0.2, obj.edge_length)
    C1 = leaned_pose(obj, s, gamma)
    params = GaitPoseParams(math.radians(10), gamma, vertex)
    C2, C3 = gait_intermediate_poses(C1, params, alpha, obj)
    body_pivot = obj.edge_a if vertex is Vertex.A else obj.edge_b
    p = C1.transform_point(body_pivot)
    for C in (C2, C3):
        assert np.allclose(C.transform_point(body_pivot), p, atol=1e-15)
        assert obj.world_vertices(C)[:, 2].min() > -1e-12
    # the other edge vertex is lifted in C2 and back on the ground in C3
    other = obj.edge_b if vertex is Vertex.A else obj.edge_a
    assert C2.transform_point(other)[2] > 1e-3
    assert abs(C3.transform_point(other)[2]) < 1e-15
    # the landed edge heading changed by alpha
    assert edge_state_of(obj, C3).alpha == pytest.approx(0.2 + alpha)
    for A_, B_ in ((C1, C2), (C2, C3)):
        assert fixed_point_of(relative(A_, B_)) is not None


def test_intermediate_poses_reject_a_non_leaning_start():
    obj = CuboidObject((0.1, 0.1, 0.15))
    gamma = lean_angle_gamma(obj, "y", "z")
    s = ContactEdgeState.from_vertex([0, 0], 0.0, obj.edge_length)
    with pytest.raises(ValidationError):
        gait_intermediate_poses(flat_pose(obj, s), GaitPoseParams(0.1, gamma), 0.2, obj)


@pytest.mark.parametrize("face", ["+x", "-x", "+y", "-y", "+z", "-z"])
def test_gait_frame_relabels_the_requested_face_down(face):
    obj = CuboidObject((0.1, 0.2, 0.3))
    G, obj2 = gait_frame(obj, face)
    R = G.rotation_matrix()
    from pivotplan.gait import face_normals

    assert np.allclose(R @ [0, 0, -1], face_normals()[face])
    assert sorted(obj2.half_extents) == sorted(obj.half_extents)
    # a pose of the relabelled body maps back to the same set of world corners
    C2 = UnitDualQuaternion.from_translation([0.1, 0.2, obj2.half_extents[2]])
    V1 = np.sort(obj.world_vertices(C2 * G.conj()), axis=0)
    V2 = np.sort(obj2.world_vertices(C2), axis=0)
    assert np.allclose(V1, V2, atol=1e-15)


def test_walking_example_needs_four_pivots():
    s = ContactEdgeState.from_vertex([0, 0], 0.0, W)
    g = ContactEdgeState.from_vertex([0.13, 0.13], math.radians(-80.0), W)
    prob = GaitProblem(s, g, W, alpha_max=AMAX)
    for k in (1, 2, 3):
        for vertex in Vertex:
            assert not solve_gait_k(prob, k, vertex, n_starts=16).feasible
    assert solve_gait(prob).k == 4
