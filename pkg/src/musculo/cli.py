"""Command-line front end for the toolkit.

One binary, subcommand groups per pipeline stage: model checking, raw
simulation, mocap repair and retargeting, task rollouts, gait analysis, and
muscle parameter helpers.  Every invocation that produces files also drops a
JSON manifest beside the first output recording the command line, seed,
input hashes, toolkit version, and wall-clock duration, so a result can be
traced back to exactly what produced it.

Exit codes: 0 success, 1 usage error, 2 data or model error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__, dynamics, seeding
from .desk_models import pendulum_text
from .dynamics import (SimConfig, SimulationError, TrajectoryLog,
                       default_state, perturbed_state)
from .gait import (GaitError, compare_profiles, gait_profile,
                   load_emg_profile, save_comparison, save_profile)
from .mocap import (IKDivergenceError, MocapError, attachments_from_model,
                    cubic_spline_imputer, evaluate_imputer, impute, ik_fit,
                    load_clip, load_trajectory, make_cyclic, save_clip,
                    save_trajectory, select_interval, zoh_imputer)
from .model import (MeshError, ModelError, load_mesh, load_model,
                    load_model_file, mesh_inertia)
from .muscles import (MuscleDefinitionError, calibrate_length_ranges,
                      solve_rest_lengths)
from .routing import RoutingError
from .tasks import (NeckReachTask, RunForwardTask, TaskError, TrackingTask,
                    action_map)


class _UsageError(Exception):
    """Bad flags or arguments; maps to exit code 1."""


_DATA_ERRORS = (ModelError, MeshError, MocapError, GaitError, TaskError,
                RoutingError, MuscleDefinitionError, SimulationError,
                IKDivergenceError, OSError, ValueError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


# -- small helpers -------------------------------------------------------------

def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _note_input(args, path) -> None:
    if path:
        args._inputs.append(path)


def _note_output(args, path) -> None:
    if path:
        args._outputs.append(path)


def _write_manifest(args, argv, duration: float) -> None:
    if not args._outputs:
        return
    payload = {
        "argv": list(argv),
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "model_sha256": _sha256(args._model_path) if args._model_path else None,
        "input_sha256": {p: _sha256(p) for p in args._inputs
                         if os.path.exists(p)},
        "duration_s": round(duration, 6),
    }
    path = args._outputs[0] + ".manifest.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _load_model_arg(args):
    args._model_path = args.model
    return load_model_file(args.model)


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def _read_columns(path: str) -> dict:
    """CSV file as {column name: float array}; non-numeric cells are errors."""
    import csv as _csv
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = _csv.reader(f)
        header = next(reader, None)
        if not header:
            raise GaitError(f"{path}: empty CSV")
        rows = [row for row in reader if row and "".join(row).strip()]
    data = np.array([[float(v) for v in row] for row in rows], dtype=float)
    if data.size and data.shape[1] != len(header):
        raise GaitError(f"{path}: ragged CSV rows")
    return {name: data[:, i] if data.size else np.zeros(0)
            for i, name in enumerate(header)}


def _parse_pair(text: str, flag: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise _UsageError(f"{flag} expects two comma-separated numbers")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise _UsageError(f"{flag} expects numbers, got {text!r}")


def _imputer_for(name: str):
    if name == "spline":
        return cubic_spline_imputer
    if name == "zoh":
        return zoh_imputer
    raise _UsageError(f"unknown imputer {name!r}")


# -- model group ---------------------------------------------------------------

def _cmd_model_validate(args) -> int:
    model = _load_model_arg(args)
    print(f"ok: {len(model.bodies)} bodies, {len(model.joints)} joints, "
          f"{len(model.sites)} sites, {len(model.muscles)} muscles, "
          f"{len(model.wrap_geoms)} wrap geoms")
    return 0


def _cmd_model_inertia(args) -> int:
    _note_input(args, args.mesh)
    vertices, triangles = load_mesh(_read_text(args.mesh))
    result = mesh_inertia(vertices, triangles, args.density)
    print(f"volume={float(result.volume)!r}")
    print(f"mass={float(result.mass)!r}")
    cx, cy, cz = (float(v) for v in result.com)
    print(f"com={cx!r},{cy!r},{cz!r}")
    for row in result.inertia:
        a, b, c = (float(v) for v in row)
        print(f"inertia={a!r},{b!r},{c!r}")
    return 0


# -- sim group -----------------------------------------------------------------

def _cmd_sim_step(args) -> int:
    model = _load_model_arg(args)
    config = SimConfig()
    M = len(model.muscles)
    if args.excitation is None:
        u = np.zeros(M)
    else:
        vals = [float(v) for v in args.excitation.split(",")]
        u = np.full(M, vals[0]) if len(vals) == 1 else np.asarray(vals)
        if u.shape != (M,):
            raise _UsageError(f"--excitation expects 1 or {M} values")
    if args.init == "perturbed":
        rng = seeding.stream(args.seed, "sim-step", "init")
        state = perturbed_state(model, rng, config)
    else:
        state = default_state(model, config)
    log = TrajectoryLog(model)
    for _ in range(args.steps):
        state = dynamics.step(model, state, u, config)
        log.append(state, u)
    if args.out:
        _note_output(args, args.out)
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            log.write(f)
    print(f"steps={args.steps} time={state.time!r}")
    return 0


def _cmd_sim_pendulum_check(args) -> int:
    model = load_model(pendulum_text(mass=args.mass, length=args.length))
    config = SimConfig(physics_dt=1.0 / 2400.0, control_dt=1.0 / 240.0)
    state = default_state(model, config)
    state.joint_angles = np.array([args.amplitude])
    body = model.bodies[1]
    inertia_pivot = body.inertia[1, 1] + args.mass * args.length ** 2
    exact = 2.0 * np.pi * np.sqrt(inertia_pivot / (args.mass * 9.81 * args.length))
    crossings = []
    prev = state.joint_angles[0]
    for _ in range(int(4 * exact * 240)):
        state = dynamics.step(model, state, np.zeros(0), config)
        cur = state.joint_angles[0]
        if prev < 0.0 <= cur:
            frac = -prev / (cur - prev)
            crossings.append(state.time - (1.0 - frac) * config.control_dt)
        prev = cur
    if len(crossings) < 2:
        raise SimulationError("pendulum period", state.time)
    measured = float(np.mean(np.diff(crossings)))
    exact = float(exact)
    rel = abs(measured - exact) / exact
    print(f"measured_period={measured!r} analytic_period={exact!r} "
          f"relative_error={rel!r}")
    return 0 if rel < 0.01 else 2


# -- mocap group ---------------------------------------------------------------

def _load_clip_file(args, path):
    _note_input(args, path)
    with open(path, "r", encoding="utf-8", newline="") as f:
        return load_clip(f)


def _cmd_mocap_select(args) -> int:
    clip = _load_clip_file(args, args.clip)
    window = select_interval(clip, min_markers=args.min_markers,
                             min_duration=args.min_duration)
    if window is None:
        print("none")
    else:
        print(f"start={window[0]} end={window[1]}")
    return 0


def _cmd_mocap_impute(args) -> int:
    clip = _load_clip_file(args, args.clip)
    filled = impute(clip, imputer=_imputer_for(args.method))
    _note_output(args, args.out)
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        save_clip(filled, f)
    print(f"frames={filled.frames} markers={len(filled.markers)}")
    return 0


def _cmd_mocap_evaluate(args) -> int:
    clip = _load_clip_file(args, args.clip)
    err = evaluate_imputer(clip, imputer=_imputer_for(args.method),
                           mask_prob=args.mask_prob,
                           segment_len=args.segment_len, seed=args.seed)
    print(f"mean_error={err!r}")
    return 0


def _cmd_mocap_ik(args) -> int:
    model = _load_model_arg(args)
    clips = [_load_clip_file(args, p) for p in args.clip]
    attachments = attachments_from_model(model, clips[0].markers)
    result = ik_fit(clips, model, attachments=attachments,
                    regularizer_weight=args.weight,
                    iterations=args.iterations,
                    learning_rate=args.learning_rate, seed=args.seed)
    stem, ext = os.path.splitext(args.out)
    for i, traj in enumerate(result.trajectories):
        path = args.out if i == 0 else f"{stem}_{i}{ext}"
        _note_output(args, path)
        with open(path, "w", encoding="utf-8", newline="") as f:
            save_trajectory(traj, f)
    if args.attachments_out:
        _note_output(args, args.attachments_out)
        with open(args.attachments_out, "w", encoding="utf-8", newline="") as f:
            f.write("marker,body,offset_x,offset_y,offset_z\n")
            for att in result.attachments:
                ox, oy, oz = (float(v) for v in att.offset)
                f.write(f"{att.marker},{att.body},{ox!r},{oy!r},{oz!r}\n")
    print(f"final_loss={result.final_loss!r} iterations={result.iterations} "
          f"clamped={result.clamp_report['entries_clamped']}")
    return 0


def _cmd_mocap_cyclic(args) -> int:
    _note_input(args, args.traj)
    with open(args.traj, "r", encoding="utf-8", newline="") as f:
        traj = load_trajectory(f)
    out = make_cyclic(traj, period_frames=args.period,
                      crossfade_frames=args.crossfade, start=args.start,
                      repeats=args.repeats)
    _note_output(args, args.out)
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        save_trajectory(out, f)
    print(f"frames={out.frames}")
    return 0


# -- env group -----------------------------------------------------------------

def _make_policy(spec: str, action_size: int, seed: int):
    if spec == "random":
        rng = seeding.stream(seed, "policy", "random")
        return lambda k: rng.uniform(-1.0, 1.0, size=action_size)
    if spec == "constant" or spec.startswith("constant:"):
        value = 0.0
        if ":" in spec:
            try:
                value = float(spec.split(":", 1)[1])
            except ValueError:
                raise _UsageError(f"bad constant policy value in {spec!r}")
        act = np.full(action_size, value)
        return lambda k: act
    if spec.startswith("replay:"):
        path = spec.split(":", 1)[1]
        rows = []
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                try:
                    rows.append([float(v) for v in line.split(",")])
                except ValueError:
                    continue  # header line
        if not rows:
            raise _UsageError(f"replay file {path!r} holds no action rows")
        table = np.asarray(rows, dtype=float)
        if table.shape[1] != action_size:
            raise _UsageError(f"replay file has {table.shape[1]} columns, "
                              f"model needs {action_size}")
        return lambda k: table[k % len(table)]
    raise _UsageError(f"unknown policy {spec!r}")


def _cmd_env_run(args) -> int:
    model = _load_model_arg(args)
    config = SimConfig()
    if args.task == "tracking":
        if not args.clip:
            raise _UsageError("--clip is required for --task tracking")
        _note_input(args, args.clip)
        with open(args.clip, "r", encoding="utf-8", newline="") as f:
            reference = load_trajectory(f)
        task = TrackingTask(model, reference, config=config, seed=args.seed)
    elif args.task == "run_forward":
        task = RunForwardTask(model, config=config, seed=args.seed)
    elif args.task == "neck":
        task = NeckReachTask(model, config=config, seed=args.seed)
    else:
        raise _UsageError(f"unknown task {args.task!r}")
    policy = _make_policy(args.policy, task.action_size, args.seed)
    if args.policy.startswith("replay:"):
        _note_input(args, args.policy.split(":", 1)[1])
    log = TrajectoryLog(model) if args.dump else None
    task.reset()
    rewards = []
    episode_lengths = []
    current = 0
    for k in range(args.steps):
        action = policy(k)
        _, status = task.step(action)
        rewards.append(status.reward)
        current += 1
        if log is not None:
            log.append(task.state, action_map(action))
        if status.terminated or status.truncated:
            episode_lengths.append(current)
            current = 0
            task.reset()
    if current:
        episode_lengths.append(current)
    if log is not None:
        _note_output(args, args.dump)
        with open(args.dump, "w", encoding="utf-8", newline="") as f:
            log.write(f)
    mean_reward = float(np.mean(rewards)) if rewards else 0.0
    mean_length = float(np.mean(episode_lengths)) if episode_lengths else 0.0
    print(f"mean_reward={mean_reward!r} mean_episode_length={mean_length!r} "
          f"episodes={len(episode_lengths)}")
    return 0


# -- gait group ----------------------------------------------------------------

def _cmd_gait_analyze(args) -> int:
    _note_input(args, args.traj)
    columns = _read_columns(args.traj)
    contact = None
    for site in args.foot.split(","):
        key = f"contact_{site.strip()}"
        if key not in columns:
            raise GaitError(f"{args.traj}: no column {key!r}")
        flags = columns[key] > 0.5
        contact = flags if contact is None else (contact | flags)
    excitations = {name[2:]: values for name, values in columns.items()
                   if name.startswith("u_")}
    if not excitations:
        raise GaitError(f"{args.traj}: no excitation (u_*) columns")
    profile = gait_profile(excitations, contact,
                           min_phase_frames=args.min_phase, grid=args.grid)
    report = None
    if args.emg:
        _note_input(args, args.emg)
        reference = load_emg_profile(_read_text(args.emg), grid=args.grid)
        report = compare_profiles(profile, reference)
    if args.out:
        _note_output(args, args.out)
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            save_profile(profile, f)
    if report is not None:
        if args.report:
            _note_output(args, args.report)
            with open(args.report, "w", encoding="utf-8", newline="") as f:
                save_comparison(report, f)
        else:
            save_comparison(report, sys.stdout)
    print(f"strides={len(profile.strides)} "
          f"stance_fraction={profile.stance_fraction!r}")
    return 0


# -- muscle group --------------------------------------------------------------

def _cmd_muscle_solve_lengths(args) -> int:
    length_range = _parse_pair(args.lr, "--lr")
    operating_range = _parse_pair(args.r, "--r")
    L0, LT = solve_rest_lengths(length_range, operating_range)
    print(f"L0={L0:g} LT={LT:g}")
    return 0


def _cmd_muscle_calibrate(args) -> int:
    model = _load_model_arg(args)
    lo, hi = calibrate_length_ranges(model, args.muscle, samples=args.samples,
                                     seed=args.seed)
    print(f"min_length={lo!r} max_length={hi!r}")
    return 0


# -- parser --------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="musculo",
                     description="Musculotendon simulation and motion "
                                 "analysis toolkit.")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap for parallel sections (falls back "
                             "to MUSCULO_THREADS; current pipelines are "
                             "single-process, so this only annotates the "
                             "manifest)")
    groups = parser.add_subparsers(dest="group", metavar="GROUP")
    groups.required = True

    model_p = groups.add_parser("model", help="model file checks")
    model_sub = model_p.add_subparsers(dest="command", metavar="COMMAND")
    model_sub.required = True
    p = model_sub.add_parser("validate", help="load and fully check a model file")
    p.add_argument("model")
    p.set_defaults(func=_cmd_model_validate)
    p = model_sub.add_parser("inertia", help="volume, mass, and inertia of a mesh")
    p.add_argument("--mesh", required=True)
    p.add_argument("--density", type=float, default=1000.0)
    p.set_defaults(func=_cmd_model_inertia)

    sim_p = groups.add_parser("sim", help="raw forward simulation")
    sim_sub = sim_p.add_subparsers(dest="command", metavar="COMMAND")
    sim_sub.required = True
    p = sim_sub.add_parser("step", help="run control steps under fixed excitation")
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int, default=40)
    p.add_argument("--excitation", default=None,
                   help="one value for all muscles, or a comma list")
    p.add_argument("--init", choices=("default", "perturbed"), default="default")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="trajectory CSV path")
    p.set_defaults(func=_cmd_sim_step)
    p = sim_sub.add_parser("pendulum-check",
                           help="integrator self-test against the analytic "
                                "pendulum period")
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--length", type=float, default=0.5)
    p.add_argument("--amplitude", type=float, default=0.05)
    p.set_defaults(func=_cmd_sim_pendulum_check)

    mocap_p = groups.add_parser("mocap", help="marker clip pipeline")
    mocap_sub = mocap_p.add_subparsers(dest="command", metavar="COMMAND")
    mocap_sub.required = True
    p = mocap_sub.add_parser("select", help="longest usable frame window")
    p.add_argument("--clip", required=True)
    p.add_argument("--min-markers", type=int, default=10)
    p.add_argument("--min-duration", type=float, default=1.0)
    p.set_defaults(func=_cmd_mocap_select)
    p = mocap_sub.add_parser("impute", help="fill missing markers")
    p.add_argument("--clip", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=("spline", "zoh"), default="spline")
    p.set_defaults(func=_cmd_mocap_impute)
    p = mocap_sub.add_parser("evaluate", help="score an imputer by masking")
    p.add_argument("--clip", required=True)
    p.add_argument("--method", choices=("spline", "zoh"), default="spline")
    p.add_argument("--mask-prob", type=float, default=0.1)
    p.add_argument("--segment-len", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_mocap_evaluate)
    p = mocap_sub.add_parser("ik", help="fit joint trajectories to markers")
    p.add_argument("--clip", action="append", required=True,
                   help="marker CSV; repeat for multiple clips")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="trajectory CSV path")
    p.add_argument("--attachments-out", default=None)
    p.add_argument("--weight", type=float, default=1e-2)
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_mocap_ik)
    p = mocap_sub.add_parser("cyclic", help="tile a stride into a loopable clip")
    p.add_argument("--traj", required=True)
    p.add_argument("--period", type=int, required=True)
    p.add_argument("--crossfade", type=int, required=True)
    p.add_argument("--start", type=int, default=None)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mocap_cyclic)

    env_p = groups.add_parser("env", help="task rollouts")
    env_sub = env_p.add_subparsers(dest="command", metavar="COMMAND")
    env_sub.required = True
    p = env_sub.add_parser("run", help="roll a policy through a task")
    p.add_argument("--task", choices=("run_forward", "tracking", "neck"),
                   required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--clip", default=None,
                   help="reference trajectory CSV (tracking only)")
    p.add_argument("--policy", default="constant",
                   help="random | constant[:v] | replay:<csv>")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump", default=None, help="state log CSV path")
    p.set_defaults(func=_cmd_env_run)

    gait_p = groups.add_parser("gait", help="stride segmentation and profiles")
    gait_sub = gait_p.add_subparsers(dest="command", metavar="COMMAND")
    gait_sub.required = True
    p = gait_sub.add_parser("analyze", help="phase-normalized excitation profile")
    p.add_argument("--traj", required=True, help="state log CSV from env run")
    p.add_argument("--foot", required=True,
                   help="contact site name; comma list is OR-ed")
    p.add_argument("--emg", default=None, help="reference profile CSV")
    p.add_argument("--out", default=None, help="profile CSV path")
    p.add_argument("--report", default=None, help="comparison CSV path")
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--min-phase", type=int, default=3)
    p.set_defaults(func=_cmd_gait_analyze)

    muscle_p = groups.add_parser("muscle", help="muscle parameter helpers")
    muscle_sub = muscle_p.add_subparsers(dest="command", metavar="COMMAND")
    muscle_sub.required = True
    p = muscle_sub.add_parser("solve-lengths",
                              help="rest and tendon length from ranges")
    p.add_argument("--lr", required=True, help="actuator length range min,max")
    p.add_argument("--r", required=True, help="operating range min,max")
    p.set_defaults(func=_cmd_muscle_solve_lengths)
    p = muscle_sub.add_parser("calibrate",
                              help="measure a muscle's actuator length range")
    p.add_argument("--model", required=True)
    p.add_argument("--muscle", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_muscle_calibrate)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except SystemExit as exc:  # --help and friends
        return 0 if exc.code in (0, None) else 1
    if args.threads is None:
        env = os.environ.get("MUSCULO_THREADS")
        if env is not None:
            try:
                args.threads = int(env)
            except ValueError:
                sys.stderr.write("error: MUSCULO_THREADS must be an integer\n")
                return 1
    args._outputs = []
    args._inputs = []
    args._model_path = None
    start = time.time()
    try:
        code = args.func(args)
    except _UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except _DATA_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    _write_manifest(args, argv, time.time() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
