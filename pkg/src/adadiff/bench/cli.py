"""Command line entry point: ``adadiff-bench <command> [options]``.

Commands
--------
datagen   write a preset's dataset as a LIBSVM file
run       a few runs at one ``eta`` with per-iteration traces and monitors
sweep     eta grid x seeds x policies, reference panels, F* and all reports
fstar     only the optimal-value estimate
report    rebuild one report (CSV and SVG) from a sweep directory

Options can also come from ``--config FILE`` (see :mod:`adadiff.bench.config`);
flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from typing import Optional, Sequence

import numpy as np

from ..data import Task, dump_libsvm, gen_synthetic, gen_two_moons
from ..exceptions import AdaDiffError, DivergenceError
from ..solver import Monitor, SolverConfig, run, monitored_min, summability_report
from .config import ExperimentConfig, Preset, coerce, initial_point, read_config_file, synthetic_spec
from .report import (
    ReportKind, SCHEMA_VERSION, report_from_dir, runs_rows, trace_filename, write_csv,
    write_sweep, write_trace_csv,
)
from .sweep import RunRecord, fstar_protocol, problem_for, grid_items, run_items, sweep

log = logging.getLogger("adadiff.bench")

# flag dest -> ExperimentConfig field
_CONFIG_FLAGS = (
    "preset", "data", "data_seed", "n_features", "max_rows", "lam", "sigma", "width",
    "noise_std", "N", "d", "nnz", "budget", "eta", "eta_grid", "seeds", "policies", "out",
    "monitors", "threads", "init", "eps", "panels", "refine_factor",
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="flat key = value config file")
    p.add_argument("--preset", help="hinge, lad, logreg-l2, logreg-l1 or svm-dual")
    p.add_argument("--data", help="LIBSVM file, or 'synthetic'")
    p.add_argument("--data-seed", type=int)
    p.add_argument("--n-features", type=int, help="fix d when reading a LIBSVM file")
    p.add_argument("--max-rows", type=int, help="keep only the first rows of the data")
    p.add_argument("--N", "-N", dest="N", type=int, help="samples (synthetic data)")
    p.add_argument("--d", "-d", dest="d", type=int, help="features (synthetic data)")
    p.add_argument("--nnz", type=int, help="planted nonzeros (synthetic data)")
    p.add_argument("--lam", type=float, help="l1 weight (or SVM lambda)")
    p.add_argument("--sigma", type=float, help="l2 weight for logreg-l2")
    p.add_argument("--width", type=float, help="Gaussian kernel width (svm-dual)")
    p.add_argument("--noise-std", type=float, help="two-moons noise (svm-dual)")
    p.add_argument("--budget", type=int, help="iterations per run")
    p.add_argument("--eta", type=float, help="single stepsize parameter")
    p.add_argument("--eta-grid", metavar="MIN,MAX,COUNT", help="log-spaced eta grid")
    p.add_argument("--seeds", help="e.g. 0-9 or 0,3,5")
    p.add_argument("--policy", dest="policies", help="adagrad, adagrad-diff or both")
    p.add_argument("--out", help="output directory")
    p.add_argument("--monitors", help="comma list of lemma1, fejer, summability")
    p.add_argument("--threads", type=int, help="worker threads for independent runs")
    p.add_argument("--init", choices=("uniform", "zero"))
    p.add_argument("--eps", type=float)
    p.add_argument("--panels", choices=("derived", "paper", "none"))
    p.add_argument("--refine-factor", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adadiff-bench", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="write a preset's dataset as LIBSVM text")
    _add_common(p)
    p.add_argument("--file", help="output file (default: <out>/<preset>.libsvm)")

    p = sub.add_parser("run", help="runs at one eta with traces and monitors")
    _add_common(p)

    p = sub.add_parser("sweep", help="eta grid sweep with reports")
    _add_common(p)
    p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("fstar", help="estimate the optimal value")
    _add_common(p)

    p = sub.add_parser("report", help="rebuild a report from a sweep directory")
    p.add_argument("--out", required=True, help="sweep output directory")
    p.add_argument("--kind", default="all", help="gap-vs-eta, gap-vs-iter, stepsize-vs-iter or all")
    p.add_argument("--no-plots", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for name in _CONFIG_FLAGS:
        val = getattr(args, name, None)
        if val is not None:
            values[name] = val
    if "preset" not in values:
        raise AdaDiffError("a preset is required (--preset or 'preset' in the config file)")
    return ExperimentConfig(**coerce(values))


# --------------------------------------------------------------------------
# commands


def cmd_datagen(config: ExperimentConfig, args) -> int:
    dflt = config.defaults
    if config.preset is Preset.SVM_DUAL:
        noise = dflt.noise_std if config.noise_std is None else config.noise_std
        data = gen_two_moons(config.N or dflt.N, noise, config.data_seed)
    else:
        data, _ = gen_synthetic(synthetic_spec(config))
    path = args.file or os.path.join(config.out, f"{config.preset.value}.libsvm")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        dump_libsvm(data, fh)
    kind = "regression" if dflt.task is Task.REGRESSION and config.preset is not Preset.SVM_DUAL else "binary"
    print(f"wrote {path}: N={data.N} d={data.d} labels={kind}")
    return 0


def _run_eta(config: ExperimentConfig) -> float:
    if config.eta is not None:
        return float(config.eta)
    return float(config.defaults.reference_etas[1])


def cmd_run(config: ExperimentConfig, args) -> int:
    problem = problem_for(config)
    eta = _run_eta(config)
    budget = config.effective_budget
    monitors = set(config.monitors)
    os.makedirs(config.out, exist_ok=True)
    records = []
    for policy in config.policies:
        for seed in config.seeds:
            x1 = initial_point(config, problem, seed)
            x_star = None
            if Monitor.FEJER in monitors:
                # x* from a longer run of the same configuration
                ref_cfg = SolverConfig(eta=eta, budget=config.refine_factor * budget, policy=policy,
                                       eps=config.eps)
                x_star = run(problem, ref_cfg, x1).x_final
            scfg = SolverConfig(eta=eta, budget=budget, policy=policy, eps=config.eps,
                                monitors=frozenset(monitors), reference_point=x_star)
            t0 = time.perf_counter()
            try:
                tr = run(problem, scfg, x1)
                ok, msg = True, ""
            except DivergenceError as exc:
                tr, ok, msg = exc.trace, False, str(exc)
            elapsed = time.perf_counter() - t0
            records.append(RunRecord(policy, eta, seed, ok, tr.best_objective() if tr else math.inf,
                                     tr.final_objective if ok else math.nan,
                                     tr.final_avg_objective if ok else math.nan, msg, tr))
            line = f"{policy.value:13s} eta={eta:.4g} seed={seed} "
            if ok:
                line += f"F(x_avg)={tr.final_avg_objective:.10g} ({elapsed:.2f}s)"
            else:
                line += f"FAILED: {msg}"
            if tr is not None and tr.lemma1_residual is not None:
                line += f" lemma1_min={monitored_min(tr.lemma1_residual):.3g}"
            if tr is not None and tr.fejer_residual is not None:
                line += f" fejer_min={monitored_min(tr.fejer_residual):.3g}"
            if tr is not None and Monitor.DIFF_SUMMABILITY in monitors:
                total, tail = summability_report(tr)
                line += f" diff_total={total:.3g} tail_frac={tail:.3g}"
            print(line)
    # gaps in a single run are relative to the best value these runs observed
    finite = [r.best_objective for r in records if math.isfinite(r.best_objective)]
    fstar = min(finite) if finite else math.nan
    for r in records:
        if r.trace is not None:
            write_trace_csv(r.trace, os.path.join(config.out, "traces",
                                                  trace_filename(r.policy.value, r.eta, r.seed)), fstar)
    write_csv(os.path.join(config.out, "runs.csv"), "runs", runs_rows(records, fstar))
    return 0 if all(r.ok for r in records) else 1


def cmd_sweep(config: ExperimentConfig, args) -> int:
    t0 = time.perf_counter()
    result = sweep(config)
    paths = write_sweep(result, config.out, plot=not args.no_plots)
    print(f"F* = {result.fstar.value:.12g} (refined with {result.fstar.best_policy.value}, "
          f"eta={result.fstar.best_eta:.4g})")
    for policy, eta in sorted(result.best_eta.items()):
        print(f"best eta {policy}: {eta:.4g}")
    print(f"reference eta {result.reference_eta:.4g}; panels {', '.join(f'{e:.4g}' for e in result.panel_etas)}")
    print(f"{len(result.records)} grid runs, {len(result.failed())} failed, "
          f"{len(paths)} files in {config.out} ({time.perf_counter() - t0:.1f}s)")
    return 0


def cmd_fstar(config: ExperimentConfig, args) -> int:
    est = fstar_protocol(config, run_items(config, grid_items(config)))
    os.makedirs(config.out, exist_ok=True)
    path = os.path.join(config.out, "fstar.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({
            "schema": f"adadiff-fstar v{SCHEMA_VERSION}",
            "preset": config.preset.value,
            "fstar": est.value,
            "pool_min": est.pool_min,
            "refined_min": est.refined_min,
            "refine_policy": est.best_policy.value,
            "refine_eta": est.best_eta,
            "n_runs": est.n_candidates,
            "x_star_norm": float(np.linalg.norm(est.x_star)),
        }, fh, indent=2, sort_keys=True)
    print(f"F* = {est.value:.12g}  (pool {est.pool_min:.12g}, refined {est.refined_min:.12g})")
    return 0


def cmd_report(args) -> int:
    kinds = list(ReportKind) if args.kind == "all" else [ReportKind.parse(args.kind)]
    for kind in kinds:
        for path in report_from_dir(args.out, kind, plot=not args.no_plots):
            print(path)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            return cmd_report(args)
        config = config_from_args(args)
        handler = {"datagen": cmd_datagen, "run": cmd_run, "sweep": cmd_sweep, "fstar": cmd_fstar}
        return handler[args.command](config, args)
    except (AdaDiffError, ValueError, OSError) as exc:
        print(f"adadiff-bench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
