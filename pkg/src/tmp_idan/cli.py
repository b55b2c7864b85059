"""``tmp-idan`` command line: gen, solve, replay and bench."""

from __future__ import annotations

import argparse
import json
import sys

from .bench import BenchConfig, run_sweep, state_space_report, write_reports
from .geometry import SceneError, generate_scene, load_scene, save_scene
from .motion import MotionPlannerHandle
from .network import ObjectCostWeights, solve
from .trace import TraceMismatchError, load_trace, replay, save_trace


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _probability(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tmp-idan", description="Retrieve a target from 2D table-top clutter.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random scene file")
    g.add_argument("--objects", type=_positive_int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="run one episode on a scene")
    s.add_argument("--scene", required=True)
    s.add_argument("--planner", choices=("rrt", "grid"), default="rrt")
    s.add_argument("--pfail", type=_probability, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--limit", type=_positive_int, default=None, help="depth limit (default 10 x objects)")
    s.add_argument("--budget", type=float, default=1.0, help="motion-planning time budget per query [s]")
    s.add_argument("--trace", default=None, help="write the action trace here")
    s.add_argument("--timings", action="store_true", help="include wall-clock times in the printed log")

    r = sub.add_parser("replay", help="re-execute and validate a trace")
    r.add_argument("--trace", required=True)
    r.add_argument("--scene", required=True)
    r.add_argument("--check", action="store_true", help="exit non-zero on any violation")

    b = sub.add_parser("bench", help="benchmark sweep, or the state-space count with 'state-space'")
    b.add_argument("mode", nargs="?", choices=("sweep", "state-space"), default="sweep")
    b.add_argument("--config", default=None, help="JSON bench config (defaults otherwise)")
    b.add_argument("--out", default=None, help="per-episode CSV; summary and by-depth CSVs go alongside")
    b.add_argument("--objects", type=_positive_int, default=6, help="object count for state-space")
    b.add_argument("--quiet", action="store_true")
    return p


def cmd_gen(args) -> int:
    scene = generate_scene(args.objects, args.seed)
    save_scene(scene, args.out)
    print(f"wrote {args.out}: {args.objects} objects, target {scene.target_id}")
    return 0


def cmd_solve(args) -> int:
    scene = load_scene(args.scene)
    planner = MotionPlannerHandle(args.planner, time_budget=args.budget)
    result = solve(scene, ObjectCostWeights(), planner, limit=args.limit, rng_seed=args.seed, p_fail=args.pfail)
    print(json.dumps(result.log.to_dict(timings=args.timings), indent=2))
    if args.trace:
        save_trace(result, scene, args.trace)
    print(f"status: {result.log.outcome}")
    return 0 if result.solved else 3


def cmd_replay(args) -> int:
    scene = load_scene(args.scene)
    trace = load_trace(args.trace)
    report = replay(trace, scene)
    for v in report.violations:
        print(f"violation: {v}")
    print(f"replayed {report.actions} actions, {len(report.violations)} violations, "
          f"target {'retrieved' if report.retrieved else 'not retrieved'}")
    return 1 if args.check and not report.ok else 0


def cmd_bench(args) -> int:
    if args.mode == "state-space":
        for line in state_space_report(args.objects).lines():
            print(line)
        return 0
    config = BenchConfig.load(args.config) if args.config else BenchConfig()
    if not args.out:
        raise ValueError("bench sweep needs --out")

    def progress(row):
        if not args.quiet:
            print(f"K={row['object_count']} repeat={row['repeat']} {row['outcome']} depth={row['depth']}",
                  file=sys.stderr)

    rows = run_sweep(config, progress)
    for path in write_reports(rows, args.out):
        print(f"wrote {path}")
    return 0


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "replay": cmd_replay, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except TraceMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (OSError, SceneError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
