"""CSV output, log-log scaling fits, and figures for regret experiments."""
from __future__ import annotations

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

TRACE_FIELDS = ["t", "slot", "arm", "reward", "inst_regret", "cum_regret"]
SUMMARY_FIELDS = ["seed", "T", "K", "f_true", "f_est", "D", "algo", "final_regret",
                  "nodes_activated", "bad_nodes"]
SCALING_FIELDS = ["group", "T", "mean", "stderr", "median", "n", "slope"]


def _num(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit_csv(trace, path: str | Path) -> None:
    """Per-round trace. Floats are written with ``repr`` so reruns are byte-identical."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        if trace is None:
            return
        cols = zip(trace.slot.tolist(), trace.arm.tolist(), trace.reward.tolist(),
                   trace.inst_regret.tolist(), trace.cum_regret.tolist())
        for t, (c, a, r, ir, cr) in enumerate(cols, start=1):
            w.writerow([t, c, a, r, repr(ir), repr(cr)])


def _aggregate_row(rows: Sequence[dict]) -> dict:
    agg = {"seed": "mean"}
    for key in ("T", "K", "f_true", "f_est", "D", "algo"):
        vals = {r[key] for r in rows}
        agg[key] = vals.pop() if len(vals) == 1 else ""
    for key in ("final_regret", "nodes_activated", "bad_nodes"):
        agg[key] = float(np.mean([float(r[key]) for r in rows]))
    return agg


def emit_summary(traces: Iterable, path: str | Path) -> None:
    """One row per seed (sorted) plus a ``seed=mean`` aggregate row."""
    rows = sorted((tr.summary_row() for tr in traces), key=lambda r: r["seed"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _num(v) for k, v in r.items()})
        if rows:
            w.writerow({k: _num(v) for k, v in _aggregate_row(rows).items()})


def read_summary(path: str | Path) -> List[dict]:
    """Per-seed rows of a summary file; the aggregate row is dropped."""
    with open(path, newline="", encoding="utf-8") as fh:
        return [r for r in csv.DictReader(fh) if r["seed"] != "mean"]


def read_trace(path: str | Path) -> Dict[str, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(TRACE_FIELDS)}


@dataclass
class ScalingRow:
    T: int
    mean: float
    stderr: float
    median: float
    n: int


@dataclass
class ScalingReport:
    rows: List[ScalingRow]
    slope: float
    intercept: float

    def predicted(self, T: float) -> float:
        return math.exp(self.intercept) * T ** self.slope


def scaling_report(final_by_T: Mapping[int, Sequence[float]]) -> ScalingReport:
    """Least-squares slope of log(mean final regret) against log T.

    Horizons whose mean regret is zero are dropped from the fit; if fewer
    than two remain the curve is flat and the slope is 0.
    """
    if len(final_by_T) < 2:
        raise ValueError("scaling report needs at least 2 distinct T values")
    if len(final_by_T) < 4 or min(len(v) for v in final_by_T.values()) < 20:
        log.warning("scaling fit on %d horizons with as few as %d seeds is weak",
                    len(final_by_T), min(len(v) for v in final_by_T.values()))
    rows = []
    for T in sorted(final_by_T):
        x = np.asarray(final_by_T[T], dtype=float)
        se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
        rows.append(ScalingRow(int(T), float(x.mean()), se, float(np.median(x)), len(x)))
    fit = [(math.log(r.T), math.log(r.mean)) for r in rows if r.mean > 0]
    if len(fit) < 2:
        return ScalingReport(rows, 0.0, 0.0)
    xs, ys = np.array(fit).T
    slope, intercept = np.polyfit(xs, ys, 1)
    return ScalingReport(rows, float(slope), float(intercept))


def write_scaling_csv(reports: Mapping[str, ScalingReport], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCALING_FIELDS)
        for name in sorted(reports):
            rep = reports[name]
            for r in rep.rows:
                w.writerow([name, r.T, repr(r.mean), repr(r.stderr), repr(r.median), r.n, repr(rep.slope)])


def group_summaries(rows: Iterable[dict]) -> Dict[str, Dict[int, List[float]]]:
    """Group per-seed summary rows by algorithm, K and f estimate, then by T."""
    out: Dict[str, Dict[int, List[float]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        key = f"{r['algo']}_K{r['K']}_f{r['f_est'] or r['f_true']}"
        out[key][int(r["T"])].append(float(r["final_regret"]))
    return {k: dict(v) for k, v in out.items()}


# --- figures -----------------------------------------------------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams.update({
        "font.size": 9,
        "axes.labelsize": 9,
        "legend.fontsize": 8,
        "axes.spines.top": False,
        "axes.spines.right": False,
    })
    return plt


def plot_scaling(reports: Mapping[str, ScalingReport], path: str | Path) -> None:
    """Log-log mean final regret vs T with one fitted line per group."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for name in sorted(reports):
        rep = reports[name]
        T = np.array([r.T for r in rep.rows], dtype=float)
        mean = np.array([r.mean for r in rep.rows])
        se = np.array([r.stderr for r in rep.rows])
        line = ax.errorbar(T, mean, yerr=se, marker="o", ms=3, lw=1, capsize=2,
                           label=f"{name} (slope {rep.slope:.2f})")
        if rep.slope != 0.0:
            ax.plot(T, [rep.predicted(x) for x in T], ls="--", lw=0.8, color=line[0].get_color())
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("horizon T")
    ax.set_ylabel("mean final pseudo-regret")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_regret_curves(curves: Mapping[str, Sequence[np.ndarray]], path: str | Path) -> None:
    """Mean cumulative regret per round with a one-standard-error band."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for name in sorted(curves):
        runs = curves[name]
        length = min(len(c) for c in runs)
        stack = np.vstack([np.asarray(c[:length]) for c in runs])
        mean = stack.mean(axis=0)
        t = np.arange(1, length + 1)
        ax.plot(t, mean, lw=1, label=name)
        if len(runs) > 1:
            se = stack.std(axis=0, ddof=1) / math.sqrt(len(runs))
            ax.fill_between(t, mean - se, mean + se, alpha=0.25, lw=0)
    ax.set_xlabel("round t")
    ax.set_ylabel("cumulative pseudo-regret")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
