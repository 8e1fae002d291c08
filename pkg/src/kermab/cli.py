"""Command-line entry point: ``kermab run | graph-info | plot``."""

from __future__ import annotations

import argparse
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

import kermab
from kermab.config import PRESETS, SEED_ENV_VAR, ExperimentConfig, flatten, load_config
from kermab.errors import KermabError
from kermab.netgraph import perron_matrix
from kermab.plot import render_svg
from kermab.results import read_summary, write_actions, write_failures, write_summary, write_trials
from kermab.simcore import TrialFailure, TrialRecord, aggregate, build_graph, run_experiment, trial_seeds

log = logging.getLogger("kermab")


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_meta(path: Path, cfg: ExperimentConfig, lambda2: float, seeds: list[int]) -> None:
    lines = [f"{k}={_format_value(v)}" for k, v in flatten(cfg).items()]
    lines += [
        f"lambda2={lambda2!r}",
        f"kermab_version={kermab.__version__}",
        f"numpy_version={np.__version__}",
        f"scipy_version={scipy.__version__}",
        f"python_version={platform.python_version()}",
        "trial_seeds=" + ",".join(str(s) for s in seeds),
    ]
    path.write_text("\n".join(lines) + "\n")


def cmd_run(config: str | None, out: str, preset: str | None = None, overrides: list[str] | None = None) -> int:
    try:
        cfg = load_config(config, preset, overrides)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        graph = build_graph(cfg)
        lambda2 = perron_matrix(graph).lambda2
    except (KermabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    start = time.perf_counter()
    results = run_experiment(cfg)
    records = [r for r in results if isinstance(r, TrialRecord)]
    failures = [r for r in results if isinstance(r, TrialFailure)]
    log.info("%d trials finished in %.1fs (%d failed)", len(results), time.perf_counter() - start, len(failures))
    try:
        write_trials(out_dir / "trials.csv", records)
        write_actions(out_dir / "actions.csv", records)
        if records:
            write_summary(out_dir / "summary.csv", aggregate(records))
        if failures:
            write_failures(out_dir / "failures.csv", failures)
        write_meta(out_dir / "meta.txt", cfg, lambda2, trial_seeds(cfg.sim.base_seed, cfg.sim.n_trials))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not records:
        print("error: every trial failed; see failures.csv", file=sys.stderr)
        return 1
    for f in failures:
        print(f"warning: trial {f.trial} failed: {f.error}", file=sys.stderr)
    return 0


def cmd_graph_info(config: str | None, preset: str | None = None, overrides: list[str] | None = None) -> int:
    try:
        cfg = load_config(config, preset, overrides)
        g = build_graph(cfg)
    except (KermabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    connected = g.is_connected()
    print(f"n={g.n}")
    print(f"edges={len(g.edges)}")
    print(f"connectivity={'true' if connected else 'false'}")
    print(f"lambda2={perron_matrix(g).lambda2:.6f}" if connected else "lambda2=undefined")
    return 0


def cmd_plot(paths: list[str], out: str, labels: list[str] | None = None) -> int:
    if labels is not None and len(labels) != len(paths):
        print(f"error: got {len(labels)} labels for {len(paths)} files", file=sys.stderr)
        return 2
    series = []
    try:
        for k, p in enumerate(paths):
            series.append((labels[k] if labels else Path(p).stem, read_summary(p)))
        Path(out).write_text(render_svg(series))
    except (KermabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kermab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def config_args(p):
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named preset")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one config value (repeatable)")

    run = sub.add_parser("run", help="run an experiment and write CSV results",
                         epilog=f"{SEED_ENV_VAR} overrides sim.base_seed.")
    config_args(run)
    run.add_argument("--out", required=True, help="output directory")

    info = sub.add_parser("graph-info", help="print size, connectivity and lambda2 of the configured graph")
    config_args(info)

    plot = sub.add_parser("plot", help="plot cumulative regret from summary.csv files to SVG")
    plot.add_argument("summaries", nargs="+")
    plot.add_argument("--out", required=True)
    plot.add_argument("--labels", nargs="+", help="legend labels (default: file stems)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return cmd_run(args.config, args.out, args.preset, args.overrides)
    if args.command == "graph-info":
        return cmd_graph_info(args.config, args.preset, args.overrides)
    return cmd_plot(args.summaries, args.out, args.labels)


if __name__ == "__main__":
    sys.exit(main())
