"""Command line entry point: ``graphbandit simulate ...`` and ``graphbandit report ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path
from typing import List, Optional

from . import graphs, report
from .environment import EnvironmentConfigError, read_env
from .harness import ConfigError, ExperimentConfig, InvariantViolation, run
from .hierarchy import SchedulerError

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2

log = logging.getLogger("graphbandit")


def parse_seeds(text: str) -> List[int]:
    """``3``, ``0..29`` (inclusive) or ``1,5,9``."""
    if ".." in text:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValueError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    return [int(s) for s in text.split(",") if s]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphbandit", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run seeded replications and write CSV traces")
    sim.add_argument("--graph", required=True, help="file | line:N | tree:N | gnp:N,P")
    sim.add_argument("--labels", default=None, help="file | blocks:f (default: labels from --graph or --env)")
    sim.add_argument("--K", type=int, required=True)
    sim.add_argument("--T", type=int, required=True)
    sim.add_argument("--f", type=int, default=None, help="cutsize estimate handed to the algorithm")
    sim.add_argument("--mode", choices=["general", "easy"], default="general")
    sim.add_argument("--D", type=int, default=None, help="override the split threshold")
    sim.add_argument("--gen", default="iid", help="iid | rr | block:d | cutadv:u,q")
    sim.add_argument("--algo", choices=["hier", "global", "pervertex"], default="hier")
    sim.add_argument("--seeds", default="0", help="s0..s1 | s0,s1,... | s")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--env", default=None, help="environment config file with group means")
    sim.add_argument("--gap", type=float, default=0.3, help="best-arm gap for synthetic means")
    sim.add_argument("--center", type=float, default=0.5, help="midpoint of synthetic means")
    sim.add_argument("--tree-per", choices=["seed", "experiment"], default="seed",
                     help="resample the random spanning tree per seed or fix one per experiment")
    sim.add_argument("--instance-seed", type=int, default=0,
                     help="seed for synthetic graphs and for a per-experiment spanning tree")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--no-traces", action="store_true", help="write only the summary")

    rep = sub.add_parser("report", help="fit regret scaling over simulate outputs and draw figures")
    rep.add_argument("--in", dest="indir", required=True)
    rep.add_argument("--out", required=True, help="scaling CSV; figures are written next to it")
    return p


def _config_from_args(args) -> ExperimentConfig:
    means = None
    labels = args.labels
    if args.env is not None:
        env = read_env(args.env)
        means = env.group_means
        if labels is None:
            labels = str(Path(args.out) / "labels_from_env.txt")
            Path(args.out).mkdir(parents=True, exist_ok=True)
            Path(labels).write_text("".join(f"{c} {g}\n" for c, g in sorted(env.labels.items())),
                                    encoding="utf-8")
    return ExperimentConfig(
        graph=args.graph, K=args.K, T=args.T, labels=labels, f_est=args.f, D=args.D,
        mode=args.mode, gen=args.gen, seeds=parse_seeds(args.seeds), algo=args.algo,
        group_means=means, gap=args.gap, center=args.center, tree_per=args.tree_per,
        instance_seed=args.instance_seed,
    )


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    out = Path(args.out)
    traces = run(cfg, workers=args.workers)
    out.mkdir(parents=True, exist_ok=True)
    if not args.no_traces:
        for tr in traces:
            report.emit_csv(tr, out / f"trace_seed{tr.seed}.csv")
    report.emit_summary(traces, out / "summary.csv")
    meta = {k: v for k, v in vars(args).items() if k not in ("func",)}
    meta["D_used"] = sorted({tr.D for tr in traces if tr.D is not None})
    meta["graph_cutsize"] = traces[0].graph_cutsize
    meta["observable_cutsize"] = {tr.seed: tr.observable_cutsize for tr in traces}
    (out / "config.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("wrote %d replications to %s", len(traces), out)
    return EXIT_OK


def cmd_report(args) -> int:
    indir = Path(args.indir)
    files = sorted(indir.rglob("summary.csv"))
    if not files:
        raise ConfigError(f"no summary.csv under {indir}")
    rows = [r for f in files for r in report.read_summary(f)]
    groups = report.group_summaries(rows)
    fits = {}
    for name, by_T in groups.items():
        if len(by_T) < 2:
            log.warning("group %s has a single horizon; skipped in the scaling fit", name)
            continue
        fits[name] = report.scaling_report(by_T)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.write_scaling_csv(fits, out)
    if fits:
        report.plot_scaling(fits, out.with_suffix(".png"))
    curves = defaultdict(list)
    for f in files:
        for tf in sorted(f.parent.glob("trace_seed*.csv")):
            curves[str(f.parent.relative_to(indir)) or "."].append(report.read_trace(tf)["cum_regret"])
    if curves:
        report.plot_regret_curves(curves, out.with_name(out.stem + "_curves.png"))
    for name, rep in sorted(fits.items()):
        print(f"{name}\tslope={rep.slope:.4f}\thorizons={len(rep.rows)}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        return cmd_report(args)
    except (InvariantViolation, SchedulerError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, EnvironmentConfigError, graphs.GraphError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
