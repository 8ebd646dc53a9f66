"""Command-line entry point.

Subcommands: `gaze-eval` (accuracy protocol), `task-eval` (scripted task
protocol), `serve` (session service), `replay` (verify a recorded session
log), `print-config` (effective configuration).  The config file comes
from --config, falling back to the GAZE_GRAMMAR_CONFIG environment
variable, falling back to built-in defaults.

Exit codes: 0 success, 1 replay divergence, 2 bad input or configuration.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import AppConfig, NoiseModel, load_config
from .errors import GazeGrammarError
from .harness import run_gaze_eval, run_task_eval
from .session import replay_log

ENV_CONFIG = "GAZE_GRAMMAR_CONFIG"


def _load(args: argparse.Namespace) -> AppConfig:
    path = args.config or os.environ.get(ENV_CONFIG)
    return load_config(path)


def _cmd_gaze_eval(args: argparse.Namespace) -> int:
    config = _load(args)
    noise = config.noise
    if args.pixel_sigma is not None:
        noise = replace(noise, pixel_sigma_px=args.pixel_sigma)
    if args.depth_sigma is not None:
        noise = replace(noise, depth_sigma_m=args.depth_sigma)
    if args.bias_scale is not None:
        noise = replace(noise, trial_bias_scale=args.bias_scale)
    seeds = list(range(args.base_seed, args.base_seed + args.seeds))
    result = run_gaze_eval(config, seeds, noise=noise, out_dir=args.out)
    print(
        f"gaze-eval: {len(result.trials)} trials, "
        f"mean error {result.mean_error_m * 100:.2f} cm "
        f"(sd {result.sd_error_m * 100:.2f} cm)"
    )
    if args.out:
        print(f"wrote {Path(args.out) / 'trials.csv'} and summary.json")
    return 0


def _cmd_task_eval(args: argparse.Namespace) -> int:
    config = _load(args)
    if args.p_grasp_fail is not None or args.p_slip is not None:
        robot = config.robot
        if args.p_grasp_fail is not None:
            robot = replace(robot, p_grasp_fail=args.p_grasp_fail)
        if args.p_slip is not None:
            robot = replace(robot, p_slip_during_pour=args.p_slip)
        config = replace(config, robot=robot)
    result = run_task_eval(config, args.task, args.repeats, base_seed=args.seed, out_dir=args.out)
    print(
        f"task-eval {args.task}: {result.success_rate * 100:.1f}% success "
        f"over {len(result.trials)} repeats"
    )
    if args.out:
        print(f"wrote {Path(args.out) / 'trials.csv'}, summary.json, events.ndjson")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve

    config = _load(args)
    serve(config, host=args.host, port=args.port)
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    path = Path(args.logfile)
    if not path.exists():
        print(f"replay: no such file {path}", file=sys.stderr)
        return 2
    ok, detail = replay_log(path)
    if ok:
        print(f"replay: OK ({detail})")
        return 0
    print(f"replay: DIVERGED ({detail})", file=sys.stderr)
    return 1


def _cmd_print_config(args: argparse.Namespace) -> int:
    print(_load(args).to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaze-grammar",
        description="Gaze-driven reach/grasp pipeline simulator and evaluation harness",
    )
    parser.add_argument("--config", help=f"config file (JSON); falls back to ${ENV_CONFIG}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gaze-eval", help="run the gaze accuracy protocol")
    p.add_argument("--seeds", type=int, default=20, help="number of consecutive seeds")
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--pixel-sigma", type=float, default=None, help="override pixel jitter sigma")
    p.add_argument("--depth-sigma", type=float, default=None, help="override depth jitter sigma")
    p.add_argument("--bias-scale", type=float, default=None, help="override per-trial bias scale")
    p.add_argument("--out", help="directory for trials.csv and summary.json")
    p.set_defaults(func=_cmd_gaze_eval)

    p = sub.add_parser("task-eval", help="run the scripted task protocol")
    p.add_argument("--task", choices=("pp", "ppp"), required=True)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-grasp-fail", type=float, default=None)
    p.add_argument("--p-slip", type=float, default=None)
    p.add_argument("--out", help="directory for trials.csv, summary.json, events.ndjson")
    p.set_defaults(func=_cmd_task_eval)

    p = sub.add_parser("serve", help="run the HTTP/WebSocket session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("replay", help="re-run a session log and verify it byte for byte")
    p.add_argument("logfile")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("print-config", help="print the effective configuration")
    p.set_defaults(func=_cmd_print_config)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GazeGrammarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
