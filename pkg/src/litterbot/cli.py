"""Command-line entry point.

Every subcommand writes line-delimited JSON records to stdout (logs go to
stderr); --pretty renders the same data as aligned tables for humans.
Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import defaults
from .fileio import load_depth, load_mask_pgm
from .geometry import Intrinsics, Pose
from .ik import IKProblem, Task, ik_solve
from .kinematics import ChainModel, forward_kinematics
from .locomotion import (
    ActionHistory,
    DynamicsSample,
    ReferenceCmd,
    TerrainSample,
    compute_rewards,
    default_reward_weights,
    total_reward,
)
from .mission import (
    MissionEvents,
    MissionPhase,
    Primitive,
    PrimitiveLibrary,
    default_primitive_library,
    step_mission,
    IkTrack,
)
from .perception import (
    BottleEstimate,
    StabilizerState,
    estimate_axis_3d,
    refine_mask,
    stabilize,
)
from .simulator import SceneConfig, run_episode, sample_scene

log = logging.getLogger("litterbot")


def emit(record: dict, pretty: bool = False) -> None:
    if pretty:
        width = max(len(k) for k in record)
        for k, v in record.items():
            print(f"{k:<{width}}  {v}")
        print()
    else:
        print(json.dumps(record, sort_keys=True))


def _load_model(path) -> ChainModel:
    return ChainModel.load(path) if path else defaults.default_model()


# --------------------------------------------------------------- perceive
def cmd_perceive(args) -> int:
    mask = refine_mask(load_mask_pgm(args.mask))
    depth = load_depth(args.depth)
    k = Intrinsics.load(args.intrinsics)
    est = estimate_axis_3d(mask, depth, k)
    if args.prev and Path(args.prev).is_file():
        with open(args.prev, "r", encoding="utf-8") as f:
            state = StabilizerState(beta=args.beta, previous=BottleEstimate.from_dict(json.load(f)))
        est = stabilize(state, est)
    record = est.to_dict()
    record["foreground_pixels"] = int(mask.sum())
    emit(record, args.pretty)
    out_state = args.out_state or args.prev
    if out_state and est.valid:
        with open(out_state, "w", encoding="utf-8") as f:
            json.dump(est.to_dict(), f)
            f.write("\n")
    return 0


# --------------------------------------------------------------- ik solve
def _parse_floats(text: str, n: int, what: str) -> np.ndarray:
    vals = [float(x) for x in text.split(",")]
    if len(vals) != n:
        raise ValueError(f"{what} needs {n} comma-separated values, got {len(vals)}")
    return np.asarray(vals)


def cmd_ik_solve(args) -> int:
    model = _load_model(args.model)
    t = _parse_floats(args.target, 7, "--target")
    target = Pose.from_quat(t[3:], t[:3])
    q0 = _parse_floats(args.q0, model.n, "--q0") if args.q0 else defaults.ready_q()
    weight = np.array([1.0, 1, 1, 0, 0, 0]) if args.position_only else None
    tasks = [Task.pose(target, weight=weight, gain=args.gain)]
    if not args.no_regularization:
        tasks.append(Task.posture(q0, weight=defaults.IK_REG_WEIGHT, gain=defaults.IK_REG_GAIN))
    problem = IKProblem(model, tasks, dt=args.dt, tol=args.tol, max_iters=args.max_iters)
    q, converged, iters = ik_solve(problem, q0)
    from .ik import ik_step

    _, norms = ik_step(problem, q)
    emit(
        {
            "q": [float(v) for v in q],
            "residual": norms[0],
            "iterations": iters,
            "converged": bool(converged),
        },
        args.pretty,
    )
    return 0


# ------------------------------------------------------------ rewards eval
def _reward_args_from_sample(d: dict) -> dict:
    z12 = [0.0] * 12
    refs = d.get("refs", {})
    terrain = d.get("terrain", {})
    actions = d.get("actions", {})
    return dict(
        sample=DynamicsSample(
            tau=d.get("tau", z12),
            qddot=d.get("qddot", z12),
            qdot=d.get("qdot", z12),
            base_collisions=int(d.get("base_collisions", 0)),
            contact=d.get("contact", [False] * 4),
            foot_z=d.get("foot_z", [0.0] * 4),
            foot_to_hip_xy=d.get("foot_to_hip_xy", [[0.0, 0.0]] * 4),
            theta=float(d.get("theta", 0.0)),
            h=float(d.get("h", 0.0)),
        ),
        refs=ReferenceCmd(
            v_des=refs.get("v_des", [0.0] * 3),
            w_des=refs.get("w_des", [0.0] * 3),
            h_des=float(refs.get("h_des", 0.0)),
            theta_des=float(refs.get("theta_des", 0.0)),
        ),
        v=d.get("v", [0.0] * 3),
        w=d.get("w", [0.0] * 3),
        terrain=TerrainSample(
            theta_terrain=float(terrain.get("theta_terrain", 0.0)),
            h_terrain=terrain.get("h_terrain", [0.0] * 4),
        ),
        actions=ActionHistory(
            q_k=actions.get("q_k", z12),
            q_k1=actions.get("q_k1", z12),
            q_k2=actions.get("q_k2", z12),
        ),
        c_des=d.get("c_des", [True] * 4),
        foot_z_des=float(d.get("foot_z_des", 0.08)),
    )


def cmd_rewards_eval(args) -> int:
    with open(args.sample, "r", encoding="utf-8") as f:
        sample = json.load(f)
    terms = compute_rewards(**_reward_args_from_sample(sample))
    weights = default_reward_weights()
    if args.weights:
        with open(args.weights, "r", encoding="utf-8") as f:
            weights.update(json.load(f))
    record = dict(terms)
    record["total"] = total_reward(terms, weights)
    emit(record, args.pretty)
    return 0


# ----------------------------------------------------------- mission trace
def cmd_mission_trace(args) -> int:
    with open(args.events, "r", encoding="utf-8") as f:
        events = json.load(f)
    phase = MissionPhase.REST
    for step, ev in enumerate(events):
        phase, command = step_mission(
            phase,
            MissionEvents(
                detection_valid=bool(ev.get("detection_valid", False)),
                ik_converged=bool(ev.get("ik_converged", False)),
                primitive_done=bool(ev.get("primitive_done", False)),
                operator_trigger=ev.get("operator_trigger"),
            ),
        )
        if isinstance(command, Primitive):
            cmd_name = command.value
        elif isinstance(command, IkTrack):
            cmd_name = "ik-target"
        else:
            cmd_name = None
        emit({"step": step, "phase": phase.value, "command": cmd_name}, args.pretty)
    return 0


# ---------------------------------------------------------------- sim run
def _episode_records(report: dict):
    summary = {k: v for k, v in report.items() if k not in ("events", "trajectory")}
    yield {"record": "summary", **summary}
    for e in report["events"]:
        yield {"record": "event", **e}
    for s in report["trajectory"]:
        yield {"record": "trajectory", **s}


def cmd_sim_run(args) -> int:
    scene = SceneConfig.load(args.scene) if args.scene else sample_scene(args.seed)
    report = run_episode(scene, max_time=args.max_time)
    sink = open(args.report, "w", encoding="utf-8") if args.report else None
    try:
        for record in _episode_records(report):
            line = json.dumps(record, sort_keys=True)
            if sink:
                sink.write(line + "\n")
            else:
                print(line)
    finally:
        if sink:
            sink.close()
    return 0


# --------------------------------------------------------------- eval batch
def cmd_eval_batch(args) -> int:
    scenes = []
    if args.scenes:
        paths = sorted(Path(args.scenes).glob("*.json"))
        if not paths:
            raise FileNotFoundError(f"no scene files in {args.scenes}")
        scenes = [SceneConfig.load(p) for p in paths]

    n = args.n
    successes = 0
    grasp_times = []
    axis_errors = []
    ik_converged = 0
    for i in range(n):
        if scenes:
            scene = scenes[i % len(scenes)]
        else:
            scene = sample_scene(args.seed + i)
        report = run_episode(scene, max_time=args.max_time)
        ok = report["load_success"] and report["unload_done"]
        successes += ok
        if report["time_to_grasp_s"] is not None:
            grasp_times.append(report["time_to_grasp_s"])
        for e in report["events"]:
            if e["event"] == "grasp" and "axis_error_deg" in e:
                axis_errors.append(e["axis_error_deg"])
        ik_converged += any(e["event"] == "grasp" for e in report["events"])
        emit(
            {
                "record": "episode",
                "index": i,
                "seed": scene.seed,
                "grasp_outcomes": report["grasp_outcomes"],
                "loads": report["loads"],
                "unload_done": report["unload_done"],
                "duration_s": report["duration_s"],
            },
            args.pretty,
        )
    summary = {
        "record": "summary",
        "episodes": n,
        "grasp_load_successes": successes,
        "mean_time_to_grasp_s": float(np.mean(grasp_times)) if grasp_times else None,
        "axis_error_deg_mean": float(np.mean(axis_errors)) if axis_errors else None,
        "axis_error_deg_max": float(np.max(axis_errors)) if axis_errors else None,
        "ik_reached_grasp": ik_converged,
    }
    emit(summary, args.pretty)
    return 0


# ------------------------------------------------------------------- serve
def cmd_serve(args) -> int:
    from .teleop import serve

    bind = os.environ.get("LITTERBOT_BIND", args.bind)
    host, _, port = bind.rpartition(":")
    scene = SceneConfig.load(args.scene) if args.scene else sample_scene(args.seed)
    serve(
        scene,
        host=host or "127.0.0.1",
        port=int(port),
        stream_depth=args.stream_depth,
        scene_dir=Path(args.scene_dir) if args.scene_dir else None,
    )
    return 0


# ------------------------------------------------------------------ parser
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="litterbot",
        description="Desk-scale litter-collection stack: perception, IK, mission, simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_pretty(p):
        p.add_argument("--pretty", action="store_true", help="human-readable output")

    p = sub.add_parser("perceive", help="bottle estimate from mask + depth files")
    p.add_argument("--mask", required=True)
    p.add_argument("--depth", required=True)
    p.add_argument("--intrinsics", required=True)
    p.add_argument("--prev", help="stabilizer state file (JSON estimate)")
    p.add_argument("--beta", type=float, default=0.4)
    p.add_argument("--out-state", help="write the smoothed estimate here")
    add_pretty(p)
    p.set_defaults(func=cmd_perceive)

    ik = sub.add_parser("ik", help="inverse kinematics").add_subparsers(
        dest="subcommand", required=True
    )
    p = ik.add_parser("solve", help="solve for a target pose")
    p.add_argument("--model", help="chain model JSON (default: built-in nominal)")
    p.add_argument("--target", required=True, help="x,y,z,qw,qx,qy,qz")
    p.add_argument("--q0", help="8 comma-separated joint values")
    p.add_argument("--tol", type=float, default=defaults.IK_TOL)
    p.add_argument("--dt", type=float, default=defaults.IK_DT)
    p.add_argument("--gain", type=float, default=defaults.IK_EE_GAIN)
    p.add_argument("--max-iters", type=int, default=defaults.IK_MAX_ITERS)
    p.add_argument("--position-only", action="store_true")
    p.add_argument("--no-regularization", action="store_true")
    add_pretty(p)
    p.set_defaults(func=cmd_ik_solve)

    rewards = sub.add_parser("rewards", help="locomotion reward terms").add_subparsers(
        dest="subcommand", required=True
    )
    p = rewards.add_parser("eval", help="evaluate the 13 reward terms on a sample")
    p.add_argument("--sample", required=True, help="sample JSON (missing fields are zero)")
    p.add_argument("--weights", help="term weight overrides JSON")
    add_pretty(p)
    p.set_defaults(func=cmd_rewards_eval)

    mission = sub.add_parser("mission", help="mission state machine").add_subparsers(
        dest="subcommand", required=True
    )
    p = mission.add_parser("trace", help="phase/command trace for an event sequence")
    p.add_argument("--events", required=True, help="JSON list of event objects")
    add_pretty(p)
    p.set_defaults(func=cmd_mission_trace)

    sim = sub.add_parser("sim", help="kinematic simulator").add_subparsers(
        dest="subcommand", required=True
    )
    p = sim.add_parser("run", help="run one headless episode")
    p.add_argument("--scene", help="scene JSON (default: generated from --seed)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-time", type=float, default=60.0)
    p.add_argument("--headless", action="store_true", help="accepted for compatibility")
    p.add_argument("--report", help="write records here instead of stdout")
    p.set_defaults(func=cmd_sim_run)

    ev = sub.add_parser("eval", help="batch evaluation").add_subparsers(
        dest="subcommand", required=True
    )
    p = ev.add_parser("batch", help="run seeded episodes and summarize")
    p.add_argument("--scenes", help="directory of scene JSON files")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-time", type=float, default=60.0)
    add_pretty(p)
    p.set_defaults(func=cmd_eval_batch)

    p = sub.add_parser("serve", help="websocket teleoperation endpoint")
    p.add_argument("--scene", help="scene JSON (default: generated from --seed)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bind", default="127.0.0.1:8765", help="host:port (env LITTERBOT_BIND overrides)")
    p.add_argument("--stream-depth", action="store_true", help="attach base64 depth rasters")
    p.add_argument("--scene-dir", help="directory for set_scene by name")
    p.set_defaults(func=cmd_serve)

    return parser


def dispatch(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except Exception as e:  # runtime failure -> exit 1, diagnostics on stderr
        log.error("%s: %s", type(e).__name__, e)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
