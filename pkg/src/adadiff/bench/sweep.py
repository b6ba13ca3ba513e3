"""Stepsize sweeps, multi-seed runs and estimation of the optimal value.

Every ``(policy, eta, seed)`` combination is an independent work item. Items
run on a thread pool of ``config.threads`` workers and results are sorted by
key before anything is aggregated, so outputs do not depend on scheduling.

The optimal value ``F*`` is estimated as the smallest objective seen over
every run, iteration and averaged iterate; the configuration with the lowest
mean final objective is then rerun for ``refine_factor`` times the budget and
the estimate is updated with that run.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from ..exceptions import DivergenceError, EstimationError
from ..metrics import PolicyKind
from ..problems import Problem
from ..solver import SolverConfig, Trace, run
from .config import ExperimentConfig, build_problem, initial_point

__all__ = [
    "RunRecord",
    "FstarEstimate",
    "SweepResult",
    "cached_problem",
    "run_items",
    "estimate_fstar",
    "fstar_protocol",
    "sweep",
]

log = logging.getLogger(__name__)


@dataclass
class RunRecord:
    policy: PolicyKind
    eta: float
    seed: int
    ok: bool
    best_objective: float
    final_objective: float
    final_avg_objective: float
    message: str = ""
    trace: Optional[Trace] = None

    @property
    def key(self):
        return (self.policy.value, self.eta, self.seed)


@dataclass
class FstarEstimate:
    value: float
    pool_min: float
    refined_min: float
    best_policy: PolicyKind
    best_eta: float
    x_star: np.ndarray
    n_candidates: int

    def __float__(self):
        return self.value


@dataclass
class SweepResult:
    config: ExperimentConfig
    fstar: FstarEstimate
    records: list[RunRecord]
    aggregates: list[dict]
    best_eta: dict
    reference_eta: float
    panel_etas: tuple[float, ...]
    panel_records: list[RunRecord] = field(default_factory=list)

    def gap(self, record: RunRecord) -> float:
        return record.final_avg_objective - self.fstar.value

    def failed(self) -> list[RunRecord]:
        return [r for r in self.records + self.panel_records if not r.ok]


@lru_cache(maxsize=8)
def cached_problem(config: ExperimentConfig) -> Problem:
    return build_problem(config)


def _problem_key(config: ExperimentConfig) -> ExperimentConfig:
    # reset fields that do not affect the problem so runs share one cache entry
    return replace(
        config, eta=None, seeds=(0,), policies=("adagrad",), out="", monitors=frozenset(),
        threads=1, budget=None, eta_grid=(1e-5, 1e2, 200), panels="derived",
        refine_factor=10, init="uniform",
    )


def problem_for(config: ExperimentConfig) -> Problem:
    return cached_problem(_problem_key(config))


def _one(problem: Problem, config: ExperimentConfig, policy: PolicyKind, eta: float,
         seed: int, budget: int, keep_trace: bool) -> RunRecord:
    x1 = initial_point(config, problem, seed)
    scfg = SolverConfig(eta=float(eta), budget=budget, policy=policy, eps=config.eps)
    try:
        tr = run(problem, scfg, x1)
    except DivergenceError as exc:
        tr = exc.trace
        best = tr.best_objective() if tr is not None else math.inf
        return RunRecord(policy, float(eta), seed, False, best, math.nan, math.nan, str(exc),
                         tr if keep_trace else None)
    return RunRecord(policy, float(eta), seed, True, tr.best_objective(), tr.final_objective,
                     tr.final_avg_objective, "", tr if keep_trace else None)


def run_items(config: ExperimentConfig, items: Sequence[tuple], budget: Optional[int] = None,
              keep_trace: bool = False, problem: Optional[Problem] = None) -> list[RunRecord]:
    """Run ``(policy, eta, seed)`` items; results sorted by key."""
    problem = problem or problem_for(config)
    budget = budget or config.effective_budget
    jobs = [(PolicyKind.parse(p), float(e), int(s)) for p, e, s in items]
    if config.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            futures = [pool.submit(_one, problem, config, p, e, s, budget, keep_trace) for p, e, s in jobs]
            records = [f.result() for f in futures]
    else:
        records = [_one(problem, config, p, e, s, budget, keep_trace) for p, e, s in jobs]
    return sorted(records, key=lambda r: r.key)


def grid_items(config: ExperimentConfig, etas=None) -> list[tuple]:
    etas = config.etas() if etas is None else etas
    return [(p, float(e), s) for p in config.policies for e in etas for s in config.seeds]


def _mean_final(records: Sequence[RunRecord]) -> dict:
    groups: dict = {}
    for r in records:
        groups.setdefault((r.policy, r.eta), []).append(r)
    out = {}
    for key, recs in groups.items():
        vals = [r.final_avg_objective for r in recs if r.ok and math.isfinite(r.final_avg_objective)]
        out[key] = float(np.mean(vals)) if len(vals) == len(recs) else math.inf
    return out


def fstar_protocol(config: ExperimentConfig, records: Optional[Sequence[RunRecord]] = None,
                   problem: Optional[Problem] = None) -> FstarEstimate:
    """Full estimate with provenance; see :func:`estimate_fstar`."""
    problem = problem or problem_for(config)
    if records is None:
        records = run_items(config, grid_items(config), problem=problem)
    finite = [r.best_objective for r in records if math.isfinite(r.best_objective)]
    if not finite:
        raise EstimationError("no finite objective value observed in the sweep")
    pool_min = float(min(finite))
    means = _mean_final(records)
    ranked = sorted((v, k[0].value, k[1]) for k, v in means.items() if math.isfinite(v))
    if ranked:
        _, policy_name, eta = ranked[0]
    else:
        best = min((r for r in records if math.isfinite(r.best_objective)), key=lambda r: r.best_objective)
        policy_name, eta = best.policy.value, best.eta
    policy = PolicyKind.parse(policy_name)
    seed = config.seeds[0]
    long_budget = config.refine_factor * config.effective_budget
    x1 = initial_point(config, problem, seed)
    try:
        tr = run(problem, SolverConfig(eta=eta, budget=long_budget, policy=policy, eps=config.eps), x1)
        refined = tr.best_objective()
        x_star = tr.x_final
    except DivergenceError as exc:
        log.warning("refinement run diverged: %s", exc)
        refined = math.inf
        x_star = np.full(problem.dim, np.nan)
    value = min(pool_min, refined)
    return FstarEstimate(value, pool_min, refined, policy, eta, x_star, len(records))


def estimate_fstar(config: ExperimentConfig, records: Optional[Sequence[RunRecord]] = None) -> float:
    """Empirical optimal value: minimum over the sweep, refined by a 10x-budget run."""
    return fstar_protocol(config, records).value


def _aggregate(records: Sequence[RunRecord], fstar: float) -> list[dict]:
    rows = []
    groups: dict = {}
    for r in records:
        groups.setdefault((r.policy.value, r.eta), []).append(r)
    for (policy, eta), recs in sorted(groups.items()):
        gaps = np.array([r.final_avg_objective - fstar for r in recs if r.ok])
        rows.append({
            "policy": policy,
            "eta": eta,
            "mean_gap": float(np.mean(gaps)) if gaps.size else math.nan,
            "std_gap": float(np.std(gaps)) if gaps.size else math.nan,
            "median_gap": float(np.median(gaps)) if gaps.size else math.nan,
            "n_ok": int(gaps.size),
            "n_failed": len(recs) - int(gaps.size),
        })
    return rows


def sweep(config: ExperimentConfig) -> SweepResult:
    """Grid over ``eta`` for every policy and seed, plus the three reference panels.

    The reference ``eta`` is the arithmetic mean of the best grid value of
    each policy; panels sit at 0.1x, 1x and 10x of it (or at the preset's
    published values when ``panels = paper``).
    """
    problem = problem_for(config)
    records = run_items(config, grid_items(config), problem=problem)
    means = _mean_final(records)
    best_eta = {}
    for policy in config.policies:
        cands = [(v, eta) for (p, eta), v in means.items() if p is policy and math.isfinite(v)]
        if cands:
            best_eta[policy.value] = min(cands)[1]
    reference = float(np.mean(list(best_eta.values()))) if best_eta else math.nan

    if config.panels == "paper":
        panel_etas = tuple(config.defaults.reference_etas)
    elif config.panels == "derived" and math.isfinite(reference):
        panel_etas = (0.1 * reference, reference, 10.0 * reference)
    else:
        panel_etas = ()
    panel_records = []
    if panel_etas:
        panel_records = run_items(config, grid_items(config, panel_etas), keep_trace=True, problem=problem)

    fstar = fstar_protocol(config, records + panel_records, problem=problem)
    neg = [r for r in records if r.ok and r.final_avg_objective - fstar.value < -1e-12]
    if neg:
        log.warning("%d runs ended below the estimated F*; gaps are signed", len(neg))
    return SweepResult(
        config=config,
        fstar=fstar,
        records=records,
        aggregates=_aggregate(records, fstar.value),
        best_eta=best_eta,
        reference_eta=reference,
        panel_etas=panel_etas,
        panel_records=panel_records,
    )
