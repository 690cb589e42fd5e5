"""Pivoting and object-gaiting manipulation planning on dual quaternions."""

from .dualquat import (
    DualQuaternion,
    PoseRp,
    Quaternion,
    UnitDualQuaternion,
    UnitQuaternion,
    ValidationError,
)
from .gait import (
    ContactEdgeState,
    CuboidObject,
    GaitInfeasibleError,
    GaitPoseParams,
    GaitProblem,
    GaitSolution,
    Vertex,
    forward_gait,
    gait_intermediate_poses,
    solve_gait,
)
from .kinematics import (
    Joint,
    ManipulatorModel,
    RMRCError,
    forward_kinematics,
    geometric_jacobian,
    rmrc_track,
    solve_ik,
)
from .pipeline import Case, PlanningError, PlanResult, Scenario, build_pose_sequence, classify_case, plan
from .scenario_io import ScenarioError, export_plan, load_scenario
from .screw import ConfigError, StepPolicy, dq_pow, extract_screw, fixed_point_of, sclerp, sclerp_path

__version__ = "0.1.0"
