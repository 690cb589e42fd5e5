"""Command-line entry points.

Exit codes: 0 success, 1 infeasible or non-convergent, 2 input error.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import warnings
from typing import Optional, Sequence

from .dualquat import UnitDualQuaternion, UnitQuaternion, ValidationError
from .gait import GaitInfeasibleError, solve_gait
from .kinematics import RMRCError
from .pipeline import PlanningError, classify_case, gait_problem, plan
from .scenario_io import export_plan, load_scenario, plan_summary
from .screw import ConfigError, GeneralScrew, PureTranslation, StepPolicy, extract_screw, relative, sclerp_path

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


def _g(x: float) -> str:
    return format(float(x), ".17g")


def _pose_arg(text: str) -> UnitDualQuaternion:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}")
    if len(vals) != 7:
        raise argparse.ArgumentTypeError("pose needs 7 numbers: px,py,pz,qw,qx,qy,qz")
    try:
        return UnitDualQuaternion.from_rotation_translation(UnitQuaternion(*vals[3:]), vals[:3])
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _overrides(sc, args):
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "tol", None) is not None:
        changes["tol"] = args.tol
    return dataclasses.replace(sc, **changes) if changes else sc


def _load(args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sc = load_scenario(args.scenario)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return _overrides(sc, args)


def _cmd_check(args) -> int:
    sc = _load(args)
    print(f"ok: {args.scenario}")
    print(f"arms: {', '.join(a.model.name for a in sc.arms)}")
    if sc.waypoints is None:
        print(f"case: {classify_case(sc.C_O, sc.C_F, sc.object).value}")
    else:
        print(f"waypoints: {len(sc.waypoints)}")
    return EXIT_OK


def _cmd_gait(args) -> int:
    sc = _load(args)
    sol = solve_gait(gait_problem(sc), seed=sc.seed)
    print(f"k={sol.k}")
    print(f"start_vertex={sol.start_vertex.value}")
    for i, a in enumerate(sol.alphas, 1):
        print(f"alpha_{i}_deg={_g(math.degrees(a))}")
    print(f"objective_deg={_g(math.degrees(sol.objective))}")
    print(f"closure_m={_g(sol.position_residual)} closure_deg={_g(math.degrees(sol.angle_residual))}")
    return EXIT_OK


def _screw_line(dec) -> str:
    if isinstance(dec, GeneralScrew):
        p = dec.params
        return (f"screw l={' '.join(map(_g, p.l))} m={' '.join(map(_g, p.m))} "
                f"theta_deg={_g(math.degrees(p.theta))} d={_g(p.d)}")
    if isinstance(dec, PureTranslation):
        return f"translation direction={' '.join(map(_g, dec.direction))} d={_g(dec.d)}"
    return "identity"


def _cmd_sclerp(args) -> int:
    policy = StepPolicy(steps=args.steps)
    print(_screw_line(extract_screw(relative(args.from_pose, args.to_pose))))
    print("index,tau,px,py,pz,qw,qx,qy,qz")
    n = args.steps
    for i, D in enumerate(sclerp_path(args.from_pose, args.to_pose, policy)):
        vals = [*D.translation(), *D.rotation.as_array()]
        print(",".join([str(i), _g(i / (n - 1)), *map(_g, vals)]))
    return EXIT_OK


def _run_plan(args, arm_indices=None) -> int:
    sc = _load(args)
    if arm_indices is not None and not 0 <= arm_indices[0] < len(sc.arms):
        raise ValidationError(f"--arm must lie in [0, {len(sc.arms) - 1}]")
    try:
        result = plan(sc, arm_indices)
    except PlanningError as exc:
        if exc.partial is not None and args.output:
            export_plan(exc.partial, args.output)
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    if args.output:
        for p in export_plan(result, args.output):
            print(f"wrote {p}")
    print(plan_summary(result), end="")
    return EXIT_OK


def _cmd_plan(args) -> int:
    return _run_plan(args)


def _cmd_rmrc(args) -> int:
    return _run_plan(args, [args.arm])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--tol", type=float, help="override the RMRC convergence tolerance")

    parser = argparse.ArgumentParser(prog="pivotplan", description="Pivoting and gaiting motion planner.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], help="run the full pipeline")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", help="directory for CSV export")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("gait", parents=[common], help="solve the gait only")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_gait)

    p = sub.add_parser("sclerp", help="interpolate between two poses")
    p.add_argument("--from", dest="from_pose", type=_pose_arg, required=True, metavar="POSE",
                   help="px,py,pz,qw,qx,qy,qz")
    p.add_argument("--to", dest="to_pose", type=_pose_arg, required=True, metavar="POSE")
    p.add_argument("--steps", type=int, required=True, help="number of poses (>= 2)")
    p.set_defaults(func=_cmd_sclerp)

    p = sub.add_parser("rmrc", parents=[common], help="track the planned path with one arm")
    p.add_argument("scenario")
    p.add_argument("--arm", type=int, default=0)
    p.add_argument("-o", "--output", help="directory for CSV export")
    p.set_defaults(func=_cmd_rmrc)

    p = sub.add_parser("check", parents=[common], help="validate a scenario")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (GaitInfeasibleError, RMRCError, PlanningError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (ValidationError, ConfigError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
