"""CSV and SVG output for runs and sweeps.

Every CSV starts with one schema line ``# adadiff-csv <kind> v<version>``
followed by a header row. Kinds and columns:

``trace``            iteration, objective, avg_objective, gap, avg_gap,
                     mean_stepsize, diff_sq, lemma1_residual, fejer_residual
``runs``             policy, eta, seed, status, final_objective,
                     final_avg_objective, final_gap, best_objective, message
``gap_vs_eta``       policy, eta, mean_gap, std_gap, median_gap, n_ok, n_failed
``gap_vs_iter``      policy, eta, iteration, mean_gap, std_gap, mean_avg_gap, std_avg_gap
``stepsize_vs_iter`` policy, eta, iteration, mean_stepsize, std_stepsize

Gaps are ``F - F*`` with the sweep's single ``F*`` estimate and keep their
sign. Means and standard deviations (``ddof = 0``) are taken over seeds.
Plots clamp gaps to ``GAP_FLOOR`` so they can use log axes; CSVs never do.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import os
from collections import defaultdict
from typing import Optional, Sequence

import numpy as np

from ..solver import Trace
from .sweep import RunRecord, SweepResult

__all__ = [
    "ReportKind",
    "SCHEMA_VERSION",
    "GAP_FLOOR",
    "write_trace_csv",
    "write_csv",
    "runs_rows",
    "trace_filename",
    "read_csv",
    "report",
    "write_sweep",
    "report_from_dir",
    "aggregate_traces",
    "plot_from_csv",
]

SCHEMA_VERSION = 1
GAP_FLOOR = 1e-16


class ReportKind(enum.Enum):
    GAP_VS_ETA = "gap_vs_eta"
    GAP_VS_ITER = "gap_vs_iter"
    STEPSIZE_VS_ITER = "stepsize_vs_iter"

    @classmethod
    def parse(cls, name) -> "ReportKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {"gapvseta": "gap_vs_eta", "gapvsiter": "gap_vs_iter", "stepsizevsiter": "stepsize_vs_iter"}
        key = aliases.get(key.replace("_", ""), key)
        return cls(key)


TRACE_COLUMNS = [
    "iteration", "objective", "avg_objective", "gap", "avg_gap",
    "mean_stepsize", "diff_sq", "lemma1_residual", "fejer_residual",
]
RUNS_COLUMNS = [
    "policy", "eta", "seed", "status", "final_objective", "final_avg_objective",
    "final_gap", "best_objective", "message",
]
COLUMNS = {
    "trace": TRACE_COLUMNS,
    "runs": RUNS_COLUMNS,
    "gap_vs_eta": ["policy", "eta", "mean_gap", "std_gap", "median_gap", "n_ok", "n_failed"],
    "gap_vs_iter": ["policy", "eta", "iteration", "mean_gap", "std_gap", "mean_avg_gap", "std_avg_gap"],
    "stepsize_vs_iter": ["policy", "eta", "iteration", "mean_stepsize", "std_stepsize"],
}


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else ("nan" if math.isnan(v) else str(float(v)))
    return str(v)


def write_csv(path: str, kind: str, rows) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# adadiff-csv {kind} v{SCHEMA_VERSION}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS[kind])
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: str) -> tuple[str, list[dict]]:
    """Read one of our CSVs; returns ``(kind, rows)`` with numeric fields as floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        schema = fh.readline().split()
        if len(schema) != 4 or schema[0] != "#" or schema[1] != "adadiff-csv":
            raise ValueError(f"{path}: missing adadiff schema line")
        kind = schema[2]
        reader = csv.DictReader(fh)
        if reader.fieldnames != COLUMNS[kind]:
            raise ValueError(f"{path}: header does not match schema {kind}")
        rows = []
        for raw in reader:
            row = {}
            for k, v in raw.items():
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
            rows.append(row)
    return kind, rows


def write_trace_csv(trace: Trace, path: str, fstar: Optional[float] = None) -> str:
    """One row per iteration of a single run."""
    n = trace.objective.size
    fs = math.nan if fstar is None else fstar

    def mon(arr, i):
        return arr[i] if arr is not None and i < arr.size else math.nan

    rows = (
        (i + 1, trace.objective[i], trace.avg_objective[i], trace.objective[i] - fs,
         trace.avg_objective[i] - fs, trace.mean_stepsize[i], trace.diff_sq[i],
         mon(trace.lemma1_residual, i), mon(trace.fejer_residual, i))
        for i in range(n)
    )
    return write_csv(path, "trace", rows)


def trace_filename(policy: str, eta: float, seed: int) -> str:
    return f"{policy}_eta{eta:.6g}_seed{seed}.csv"


def aggregate_traces(traces: dict, fstar: float) -> tuple[list, list]:
    """Mean/std over seeds of per-iteration gaps and stepsizes.

    ``traces`` maps ``(policy, eta, seed)`` to dicts or :class:`Trace` objects
    with ``objective``, ``avg_objective`` and ``mean_stepsize`` arrays.
    """
    groups = defaultdict(list)
    for (policy, eta, seed), tr in sorted(traces.items()):
        groups[(policy, eta)].append(tr)
    gap_rows, step_rows = [], []
    for (policy, eta), trs in sorted(groups.items()):
        get = (lambda t, k: np.asarray(t[k])) if isinstance(trs[0], dict) else (lambda t, k: getattr(t, k))
        n = min(get(t, "objective").size for t in trs)
        gap = np.stack([get(t, "objective")[:n] for t in trs]) - fstar
        avg_gap = np.stack([get(t, "avg_objective")[:n] for t in trs]) - fstar
        step = np.stack([get(t, "mean_stepsize")[:n] for t in trs])
        for i in range(n):
            gap_rows.append((policy, eta, i + 1, gap[:, i].mean(), gap[:, i].std(),
                             avg_gap[:, i].mean(), avg_gap[:, i].std()))
            step_rows.append((policy, eta, i + 1, step[:, i].mean(), step[:, i].std()))
    return gap_rows, step_rows


def runs_rows(records: Sequence[RunRecord], fstar: float):
    for r in records:
        yield (r.policy.value, r.eta, r.seed, "ok" if r.ok else "failed", r.final_objective,
               r.final_avg_objective, r.final_avg_objective - fstar, r.best_objective, r.message)


def report(result: SweepResult, kind, out_dir: str, plot: bool = True) -> list[str]:
    """Write the CSV (and optionally an SVG) for one report kind."""
    kind = ReportKind.parse(kind)
    if not result.records:
        raise ValueError("empty sweep result")
    fstar = result.fstar.value
    paths = []
    if kind is ReportKind.GAP_VS_ETA:
        rows = [(a["policy"], a["eta"], a["mean_gap"], a["std_gap"], a["median_gap"], a["n_ok"], a["n_failed"])
                for a in result.aggregates]
        paths.append(write_csv(os.path.join(out_dir, "gap_vs_eta.csv"), "gap_vs_eta", rows))
    else:
        traces = {(r.policy.value, r.eta, r.seed): r.trace for r in result.panel_records
                  if r.ok and r.trace is not None}
        gap_rows, step_rows = aggregate_traces(traces, fstar)
        name = kind.value
        rows = gap_rows if kind is ReportKind.GAP_VS_ITER else step_rows
        paths.append(write_csv(os.path.join(out_dir, f"{name}.csv"), name, rows))
    if plot:
        paths.append(plot_from_csv(paths[0], os.path.splitext(paths[0])[0] + ".svg"))
    return paths


def write_sweep(result: SweepResult, out_dir: str, plot: bool = True) -> list[str]:
    """Everything a sweep produces: runs, aggregates, per-seed panel traces, F* summary."""
    os.makedirs(out_dir, exist_ok=True)
    fstar = result.fstar.value
    paths = [write_csv(os.path.join(out_dir, "runs.csv"), "runs", runs_rows(result.records, fstar))]
    if result.panel_records:
        paths.append(write_csv(os.path.join(out_dir, "panel_runs.csv"), "runs",
                            runs_rows(result.panel_records, fstar)))
    for kind in ReportKind:
        if kind is not ReportKind.GAP_VS_ETA and not result.panel_records:
            continue
        paths.extend(report(result, kind, out_dir, plot=plot))
    for r in result.panel_records:
        if r.trace is not None:
            paths.append(write_trace_csv(
                r.trace, os.path.join(out_dir, "traces", trace_filename(r.policy.value, r.eta, r.seed)), fstar))
    summary = {
        "schema": f"adadiff-fstar v{SCHEMA_VERSION}",
        "preset": result.config.preset.value,
        "fstar": fstar,
        "pool_min": result.fstar.pool_min,
        "refined_min": result.fstar.refined_min,
        "refine_policy": result.fstar.best_policy.value,
        "refine_eta": result.fstar.best_eta,
        "best_eta": result.best_eta,
        "reference_eta": result.reference_eta,
        "panel_etas": list(result.panel_etas),
        "n_runs": len(result.records),
        "n_failed": len(result.failed()),
    }
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    paths.append(path)
    return paths


def report_from_dir(out_dir: str, kind, plot: bool = True) -> list[str]:
    """Rebuild one report from the files a sweep left in ``out_dir``.

    ``gap_vs_eta`` is recomputed from ``runs.csv``; the per-iteration kinds
    from the per-seed trace CSVs listed in ``panel_runs.csv``.
    """
    kind = ReportKind.parse(kind)
    with open(os.path.join(out_dir, "summary.json"), encoding="utf-8") as fh:
        fstar = float(json.load(fh)["fstar"])
    if kind is ReportKind.GAP_VS_ETA:
        _, runs = read_csv(os.path.join(out_dir, "runs.csv"))
        groups = defaultdict(list)
        for r in runs:
            groups[(r["policy"], r["eta"])].append(r)
        rows = []
        for (policy, eta), rs in sorted(groups.items()):
            gaps = np.array([r["final_gap"] for r in rs if r["status"] == "ok"])
            stats = (gaps.mean(), gaps.std(), float(np.median(gaps))) if gaps.size else (math.nan,) * 3
            rows.append((policy, eta, *stats, gaps.size, len(rs) - gaps.size))
        path = write_csv(os.path.join(out_dir, "gap_vs_eta.csv"), "gap_vs_eta", rows)
    else:
        _, runs = read_csv(os.path.join(out_dir, "panel_runs.csv"))
        traces = {}
        for r in (r for r in runs if r["status"] == "ok"):
            seed = int(r["seed"])
            _, trows = read_csv(os.path.join(out_dir, "traces", trace_filename(r["policy"], r["eta"], seed)))
            traces[(r["policy"], r["eta"], seed)] = {
                k: np.array([t[k] for t in trows]) for k in ("objective", "avg_objective", "mean_stepsize")
            }
        gap_rows, step_rows = aggregate_traces(traces, fstar)
        rows = gap_rows if kind is ReportKind.GAP_VS_ITER else step_rows
        path = write_csv(os.path.join(out_dir, f"{kind.value}.csv"), kind.value, rows)
    paths = [path]
    if plot:
        paths.append(plot_from_csv(path, os.path.splitext(path)[0] + ".svg"))
    return paths


# --------------------------------------------------------------------------
# plots


def plot_from_csv(csv_path: str, svg_path: str) -> str:
    """Render a gap/stepsize CSV as a self-contained SVG line plot (mean +- std)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    kind, rows = read_csv(csv_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    if kind == "gap_vs_eta":
        by_policy = defaultdict(list)
        for r in rows:
            by_policy[r["policy"]].append(r)
        for policy, rs in sorted(by_policy.items()):
            eta = np.array([r["eta"] for r in rs])
            mean = np.array([r["mean_gap"] for r in rs])
            std = np.array([r["std_gap"] for r in rs])
            ax.plot(eta, np.maximum(mean, GAP_FLOOR), label=policy)
            ax.fill_between(eta, np.maximum(mean - std, GAP_FLOOR), np.maximum(mean + std, GAP_FLOOR), alpha=0.2)
        ax.set_xlabel("eta")
        ax.set_ylabel("final gap F(x_avg) - F*")
        ax.set_xscale("log")
    else:
        ycol, scol = ("mean_gap", "std_gap") if kind == "gap_vs_iter" else ("mean_stepsize", "std_stepsize")
        by_key = defaultdict(list)
        for r in rows:
            by_key[(r["policy"], r["eta"])].append(r)
        for (policy, eta), rs in sorted(by_key.items()):
            it = np.array([r["iteration"] for r in rs])
            mean = np.array([r[ycol] for r in rs])
            std = np.array([r[scol] for r in rs])
            ax.plot(it, np.maximum(mean, GAP_FLOOR), label=f"{policy}, eta={eta:.3g}")
            ax.fill_between(it, np.maximum(mean - std, GAP_FLOOR), np.maximum(mean + std, GAP_FLOOR), alpha=0.2)
        ax.set_xlabel("iteration")
        ax.set_ylabel("gap F(x) - F*" if kind == "gap_vs_iter" else "mean effective stepsize")
    ax.set_yscale("log")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)
    return svg_path
