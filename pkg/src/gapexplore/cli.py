"""Command-line entry point: ``run``, ``batch``, ``render`` and ``selfcheck``.

Exit codes: 0 success, 1 usage or I/O error, 2 exploration dead-end
(NoSafeHeading), 3 self-check failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from .geometry import Pose
from .grid_world import CoverageLedger, load_map_file, mark_seen
from .lidar import PoseInsideObstacle, PoseOutOfBounds, acquire_scan
from .planner import DEFAULT_A_R, PlannerConfig
from .render import render_episode
from .safe_heading import POLICIES
from .runner import (
    EpisodeConfig,
    EpisodeReport,
    HaltReason,
    StartNotTraversable,
    atomic_write,
    parse_trace,
    run_episode,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DEAD_END = 2
EXIT_SELFCHECK = 3

# flag dest -> (converter, default); shared by flags and the config file
EPISODE_OPTIONS: dict[str, tuple[Any, Any]] = {
    "map": (str, None),
    "start": (str, None),
    "lidar_range_m": (float, 5.0),
    "d_tilde_m": (float, None),
    "radius_m": (float, 0.3),
    "a_r_cos": (float, DEFAULT_A_R),
    "window_L": (int, 3),
    "policy": (str, "widest"),
    "strategy": (str, "gap"),
    "noise_sigma_m": (float, 0.0),
    "seed": (int, 0),
    "max_waypoints": (int, 400),
    "angular_step_deg": (float, 1.0),
    "trace_out": (str, None),
    "report_out": (str, None),
    "render_out": (str, None),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors exit 1 instead of argparse's 2, which is reserved."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment. Keys use flag spelling."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{n}: expected key=value")
        key = key.strip().lstrip("-").replace("-", "_")
        if key == "window_l":
            key = "window_L"
        if key not in EPISODE_OPTIONS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def resolve_options(args: argparse.Namespace) -> dict[str, Any]:
    """Defaults, overlaid by the config file, overlaid by explicit flags."""
    file_values = read_config(args.config) if getattr(args, "config", None) else {}
    merged = {}
    for key, (conv, default) in EPISODE_OPTIONS.items():
        value = getattr(args, key, None)
        if value is None and key in file_values:
            try:
                value = conv(file_values[key])
            except ValueError:
                raise UsageError(f"config value for {key}: {file_values[key]!r}") from None
        merged[key] = default if value is None else value
    return merged


def episode_config(opts: dict[str, Any], require_start: bool = True) -> EpisodeConfig:
    if opts["map"] is None:
        raise UsageError("--map is required")
    if require_start and opts["start"] is None:
        raise UsageError("--start is required")
    if opts["policy"] not in POLICIES:
        raise UsageError(f"--policy must be one of {', '.join(POLICIES)}")
    if opts["strategy"] not in ("gap", "frontier"):
        raise UsageError("--strategy must be gap or frontier")
    if opts["noise_sigma_m"] < 0:
        raise UsageError("--noise-sigma-m must be >= 0")
    try:
        start = Pose.parse(opts["start"]) if opts["start"] is not None else Pose(0, 0, 0)
    except ValueError as exc:
        raise UsageError(f"--start: {exc}") from None
    try:
        planner = PlannerConfig(
            l=opts["lidar_range_m"],
            d_tilde=opts["d_tilde_m"],
            window=opts["window_L"],
            r=opts["radius_m"],
            a_r=opts["a_r_cos"],
            policy=opts["policy"],
            max_waypoints=opts["max_waypoints"],
            angular_step=opts["angular_step_deg"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return EpisodeConfig(
        map_path=opts["map"],
        start=start,
        planner=planner,
        noise_sigma=opts["noise_sigma_m"],
        seed=opts["seed"],
        strategy=opts["strategy"],
        trace_out=opts["trace_out"],
        report_out=opts["report_out"],
        render_out=opts["render_out"],
    )


def summary(report: EpisodeReport) -> str:
    return (
        f"strategy={report.strategy} waypoints={report.waypoint_count} "
        f"coverage={report.coverage:.4f} path_length_m={report.path_length:.3f} "
        f"reverses={report.reverse_count} halt={report.halt_reason.value}"
    )


def exit_code_for(report: EpisodeReport) -> int:
    """A dead-end after everything reachable was seen counts as completion."""
    stuck = report.halt_reason is HaltReason.NO_SAFE_HEADING and report.coverage < 1.0
    return EXIT_DEAD_END if stuck else EXIT_OK


def _episode(cfg: EpisodeConfig) -> EpisodeReport:
    try:
        return run_episode(cfg)
    except (StartNotTraversable, PoseOutOfBounds, PoseInsideObstacle) as exc:
        raise UsageError(f"--start: {exc}") from None


def cmd_run(args: argparse.Namespace) -> int:
    cfg = episode_config(resolve_options(args))
    report = _episode(cfg)
    print(summary(report))
    return exit_code_for(report)


def _batch_job(job: tuple[EpisodeConfig, str]) -> tuple[str, int, str]:
    cfg, label = job
    try:
        report = _episode(cfg)
    except (UsageError, OSError, ValueError) as exc:
        return label, EXIT_USAGE, f"error: {exc}"
    return label, exit_code_for(report), summary(report)


def cmd_batch(args: argparse.Namespace) -> int:
    opts = resolve_options(args)
    maps = args.maps or ([opts["map"]] if opts["map"] else [])
    if not maps:
        raise UsageError("--maps (or --map) is required")
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    jobs = []
    for entry in maps:
        # PATH or PATH@X,Y,THETA_DEG to give a map its own start
        map_path, _, start = entry.partition("@")
        for seed in range(opts["seed"], opts["seed"] + args.seeds):
            label = f"{Path(map_path).stem}_seed{seed}"
            out = Path(args.out_dir) / label
            per = dict(opts, map=map_path, seed=seed, start=start or opts["start"],
                       trace_out=str(out / "trace.csv"),
                       report_out=str(out / "report.txt"),
                       render_out=str(out / "render.ppm"))
            jobs.append((episode_config(per), label))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_batch_job, jobs))
    else:
        results = [_batch_job(j) for j in jobs]
    for label, _, text in results:
        print(f"{label}: {text}")
    return max(code for _, code, _ in results)


def cmd_render(args: argparse.Namespace) -> int:
    """Rebuild coverage by rescanning at each trace pose, then draw."""
    opts = resolve_options(args)
    if opts["map"] is None:
        raise UsageError("--map is required")
    if opts["render_out"] is None:
        raise UsageError("--render-out is required")
    grid = load_map_file(opts["map"])
    rows = parse_trace(Path(args.trace).read_text())
    if not rows:
        raise UsageError(f"--trace: no waypoints in {args.trace}")
    poses = [row.pose for row in rows]
    ledger = CoverageLedger.for_grid(grid, poses[0].xy)
    for p in poses:
        scan = acquire_scan(grid, p, opts["lidar_range_m"], opts["angular_step_deg"])
        mark_seen(ledger, grid, scan.footprint)
    atomic_write(opts["render_out"], render_episode(grid, ledger, poses))
    return EXIT_OK


def cmd_selfcheck(args: argparse.Namespace) -> int:
    from .selfcheck import run_all

    results = run_all(fault=args.inject_fault)
    for res in results:
        print(res.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_SELFCHECK


def _add_episode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key=value file; flags override it")
    p.add_argument("--map", metavar="PATH")
    p.add_argument("--start", metavar="X,Y,THETA_DEG")
    p.add_argument("--lidar-range-m", dest="lidar_range_m", type=float, metavar="F",
                   help="sensor range l (default 5.0)")
    p.add_argument("--d-tilde-m", dest="d_tilde_m", type=float, metavar="F",
                   help="waypoint step (default l/2)")
    p.add_argument("--radius-m", dest="radius_m", type=float, metavar="F",
                   help="robot radius (default 0.3)")
    p.add_argument("--a-r-cos", dest="a_r_cos", type=float, metavar="F",
                   help="orientation-similarity cosine (default cos 30)")
    p.add_argument("--window-L", dest="window_L", type=int, metavar="N",
                   help="half-planes retained (default 3)")
    p.add_argument("--policy", choices=POLICIES)
    p.add_argument("--strategy", choices=("gap", "frontier"))
    p.add_argument("--noise-sigma-m", dest="noise_sigma_m", type=float, metavar="F")
    p.add_argument("--seed", type=int, metavar="N")
    p.add_argument("--max-waypoints", dest="max_waypoints", type=int, metavar="N")
    p.add_argument("--angular-step-deg", dest="angular_step_deg", type=float, metavar="F")
    p.add_argument("--trace-out", dest="trace_out", metavar="PATH")
    p.add_argument("--report-out", dest="report_out", metavar="PATH")
    p.add_argument("--render-out", dest="render_out", metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gapexplore", description="Gap-based safe-heading exploration.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one episode")
    _add_episode_flags(run)
    run.set_defaults(func=cmd_run)

    batch = sub.add_parser("batch", help="run maps x seeds, one output directory each")
    _add_episode_flags(batch)
    batch.add_argument("--maps", nargs="+", metavar="PATH[@X,Y,TH]")
    batch.add_argument("--seeds", type=int, default=1, metavar="N",
                       help="consecutive seeds starting at --seed")
    batch.add_argument("--out-dir", dest="out_dir", default="batch_out", metavar="DIR")
    batch.add_argument("--workers", type=int, default=os.cpu_count() or 1, metavar="N")
    batch.set_defaults(func=cmd_batch)

    render = sub.add_parser("render", help="draw a PPM from a map and a trace")
    _add_episode_flags(render)
    render.add_argument("--trace", required=True, metavar="PATH")
    render.set_defaults(func=cmd_render)

    check = sub.add_parser("selfcheck", help="compare core routines against oracles")
    check.add_argument("--inject-fault", dest="inject_fault", default=None,
                       choices=("gap-grouping",), help=argparse.SUPPRESS)
    check.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gapexplore {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        # unreadable or malformed inputs (maps, traces)
        print(f"gapexplore {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
