"""Variable-metric proximal (sub)gradient loop.

One iteration ``n`` does

1. ``g^n`` in ``df(x^n)``;
2. update the metric ``W_n`` with the chosen policy;
3. ``x^{n+1} = prox^{W_n}_{eta phi}(x^n - eta W_n^{-1} g^n)``;
4. update the running average ``xbar^{n+1} = n^{-1} sum_{k=2}^{n+1} x^k``.

Trace row ``n`` (1-based) stores quantities *at* ``x^n``: ``F(x^n)``,
``F(xbar^n)`` (with ``xbar^1 := x^1``), the mean effective stepsize
``mean_i eta / w_i^n`` and ``||g^n - g^{n-1}||^2``. Monitors for step
``n -> n+1`` need ``g^{n+1}``, so they are evaluated during iteration
``n+1`` and the monitor arrays are one row shorter than the budget.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .blockspace import BlockVector, wnorm_sq_arr, winv_norm_sq_arr
from .exceptions import ConfigurationError, DivergenceError, DomainError, NumericalError
from .metrics import DEFAULT_EPS, AccumulatorState, PolicyKind
from .problems import Problem

__all__ = [
    "Monitor",
    "SolverConfig",
    "Trace",
    "IterationSnapshot",
    "run",
    "monitor_lemma1",
    "monitor_fejer",
    "summability_report",
    "monitored_min",
]


class Monitor(enum.Enum):
    LEMMA1 = "lemma1"
    FEJER = "fejer"
    DIFF_SUMMABILITY = "summability"

    @classmethod
    def parse(cls, name) -> "Monitor":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        for m in cls:
            if key in (m.value, m.name.lower()):
                return m
        raise ValueError(f"unknown monitor {name!r}")


@dataclass(frozen=True)
class SolverConfig:
    eta: float
    budget: int
    policy: PolicyKind = PolicyKind.ADAGRAD_DIFF
    eps: float = DEFAULT_EPS
    monitors: frozenset = frozenset()
    reference_point: Optional[np.ndarray] = None
    monitor_stride: int = 1
    record_iterates: bool = False

    def __post_init__(self):
        object.__setattr__(self, "policy", PolicyKind.parse(self.policy))
        object.__setattr__(self, "monitors", frozenset(Monitor.parse(m) for m in self.monitors))
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigurationError(f"eta must be positive and finite, got {self.eta}")
        # eps = 0 is accepted so hand-worked examples stay exact; weights then
        # must stay positive on their own or the run aborts
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise ConfigurationError(f"eps must be >= 0, got {self.eps}")
        if int(self.budget) < 2:
            raise ConfigurationError("budget must be >= 2")
        object.__setattr__(self, "budget", int(self.budget))
        if self.monitor_stride < 1:
            raise ConfigurationError("monitor_stride must be >= 1")
        if self.reference_point is not None:
            ref = np.array(self.reference_point, dtype=np.float64).ravel()
            ref.setflags(write=False)
            object.__setattr__(self, "reference_point", ref)


@dataclass
class Trace:
    """Per-iteration record of one run. Arrays have one entry per iteration."""

    objective: np.ndarray
    avg_objective: np.ndarray
    mean_stepsize: np.ndarray
    diff_sq: np.ndarray
    lemma1_residual: Optional[np.ndarray]
    fejer_residual: Optional[np.ndarray]
    x_final: np.ndarray
    x_avg_final: np.ndarray
    final_objective: float
    final_avg_objective: float
    weights_final: np.ndarray
    max_iterate_norm: float
    tail_spread: float
    iterations: int
    policy: PolicyKind
    eta: float
    iterates: Optional[np.ndarray] = None
    monitor_steps: Optional[np.ndarray] = None

    def best_objective(self) -> float:
        vals = np.concatenate(
            [self.objective, self.avg_objective, [self.final_objective, self.final_avg_objective]]
        )
        vals = vals[np.isfinite(vals)]
        return float(vals.min()) if vals.size else float("inf")

    def to_bytes(self) -> bytes:
        """Canonical byte serialization, used for determinism checks."""
        parts = [
            self.objective, self.avg_objective, self.mean_stepsize, self.diff_sq,
            self.x_final, self.x_avg_final, self.weights_final,
        ]
        for extra in (self.lemma1_residual, self.fejer_residual):
            if extra is not None:
                parts.append(extra)
        return b"".join(np.ascontiguousarray(p, dtype=np.float64).tobytes() for p in parts)


@dataclass(frozen=True)
class IterationSnapshot:
    """State around one iteration, as consumed by the monitors.

    ``x`` is ``x^n``, ``g`` is ``g^n``, ``w`` the per-coordinate weights of
    ``W_n`` and ``F`` the objective at ``x``.
    """

    x: np.ndarray
    g: np.ndarray
    w: np.ndarray
    F: float


def _w_diff_sq(a: np.ndarray, b: np.ndarray, ref: np.ndarray, w: np.ndarray) -> float:
    # ||a - ref||_W^2 - ||b - ref||_W^2 without subtracting two large numbers
    return float(np.dot(w * (a - b), a + b - 2.0 * ref))


def monitor_lemma1(prev: IterationSnapshot, nxt: IterationSnapshot, x_ref, F_ref: float, eta: float) -> float:
    """Slack ``RHS - LHS`` of the one-step descent inequality

    ``2 eta (F(x^{n+1}) - F(x)) <= ||x^n - x||^2_{W_n} - ||x^{n+1} - x||^2_{W_n}
    + eta^2 ||g^{n+1} - g^n||^2_{W_n^{-1}}``,

    valid for every reference point ``x``. ``prev`` carries ``W_n``.
    """
    x_ref = np.asarray(x_ref, dtype=np.float64)
    w = prev.w
    rhs = _w_diff_sq(prev.x, nxt.x, x_ref, w) + eta * eta * winv_norm_sq_arr(nxt.g - prev.g, w)
    lhs = 2.0 * eta * (nxt.F - F_ref)
    return rhs - lhs


def monitor_fejer(prev: IterationSnapshot, nxt: IterationSnapshot, x_star, eta: float) -> float:
    """Slack of the quasi-Fejer inequality

    ``||x^{n+1} - x*||^2_{W_{n+1}} <= (1 + chi) ||x^n - x*||^2_{W_n} + eta^2 ||g^{n+1} - g^n||^2_{W_n^{-1}}``

    with ``chi = max_i w_i^{n+1} / w_i^n - 1``. ``nxt.w`` must hold ``W_{n+1}``.
    """
    x_star = np.asarray(x_star, dtype=np.float64)
    chi = float(np.max(nxt.w / prev.w) - 1.0)
    lhs = wnorm_sq_arr(nxt.x - x_star, nxt.w)
    alpha = eta * eta * winv_norm_sq_arr(nxt.g - prev.g, prev.w)
    rhs = (1.0 + chi) * wnorm_sq_arr(prev.x - x_star, prev.w) + alpha
    return rhs - lhs


def summability_report(trace: Trace) -> tuple[float, float]:
    """Total of ``||g^n - g^{n-1}||^2`` and the share of it in the last 10% of rows."""
    diff = trace.diff_sq
    total = float(np.sum(diff))
    if total == 0.0:
        return 0.0, 0.0
    n_tail = max(1, int(math.ceil(0.1 * diff.size)))
    return total, float(np.sum(diff[-n_tail:])) / total


def run(problem: Problem, config: SolverConfig, x1=None) -> Trace:
    """Run ``config.budget`` iterations from ``x1`` (default: the problem's zero start).

    Raises :class:`DivergenceError` (with the partial trace attached) if an
    iterate or gradient becomes non-finite, and :class:`ConfigurationError`
    if a monitor is requested that does not apply.
    """
    if x1 is None:
        x = problem.default_start()
    elif isinstance(x1, BlockVector):
        x = x1.data.copy()
    else:
        x = np.array(x1, dtype=np.float64).ravel()
    if x.shape[0] != problem.dim:
        raise DomainError(f"x1 has {x.shape[0]} entries, problem has {problem.dim}")
    if not np.all(np.isfinite(x)):
        raise DomainError("x1 must be finite")

    monitors = config.monitors
    want_lemma1 = Monitor.LEMMA1 in monitors
    want_fejer = Monitor.FEJER in monitors
    if want_fejer and not problem.smooth:
        raise ConfigurationError("the quasi-Fejer monitor requires a smooth f")
    if want_fejer and config.reference_point is None:
        raise ConfigurationError("the quasi-Fejer monitor needs reference_point (x*)")
    ref = config.reference_point
    if want_lemma1 and ref is None:
        ref = x.copy()
    if ref is not None and ref.shape[0] != problem.dim:
        raise DomainError("reference point has the wrong dimension")
    F_ref = problem.F(ref) if want_lemma1 else 0.0
    if want_lemma1 and not math.isfinite(F_ref):
        raise ConfigurationError("F(reference_point) is not finite")

    space = problem.space
    phi = problem.phi
    eta = config.eta
    budget = config.budget
    n_blocks = space.n_blocks
    acc = AccumulatorState(space, config.eps)

    objective = np.full(budget, np.nan)
    avg_objective = np.full(budget, np.nan)
    mean_stepsize = np.full(budget, np.nan)
    diff_sq = np.full(budget, np.nan)
    n_mon = budget - 1
    lemma1 = np.full(n_mon, np.nan) if want_lemma1 else None
    fejer = np.full(n_mon, np.nan) if want_fejer else None
    iterates = np.empty((budget + 1, problem.dim)) if config.record_iterates else None

    tail_start = budget + 1 - max(1, int(math.ceil(0.1 * (budget + 1))))
    tail_anchor = None
    tail_spread = 0.0
    max_norm = float(np.linalg.norm(x))

    x_sum = np.zeros_like(x)
    x_avg = x.copy()
    prev_snap = None
    done = 0

    def partial_trace():
        return _finish(
            objective[:done], avg_objective[:done], mean_stepsize[:done], diff_sq[:done],
            None if lemma1 is None else lemma1[: max(done - 1, 0)],
            None if fejer is None else fejer[: max(done - 1, 0)],
            x, x_avg, float("nan"), float("nan"), acc, max_norm, tail_spread, done, config,
            None if iterates is None else iterates[: done + 1],
        )

    for n in range(1, budget + 1):
        if iterates is not None:
            iterates[n - 1] = x
        f_val, g = problem.f_oracle(x)
        F_val = f_val + phi.value(x)
        g = np.asarray(g, dtype=np.float64)
        if not (np.all(np.isfinite(g)) and math.isfinite(f_val)):
            raise DivergenceError(f"non-finite value or gradient at iteration {n}", partial_trace())
        d = g - acc.prev_grad
        diff_sq[n - 1] = float(d @ d)
        try:
            w_blocks = acc.update(config.policy, g)
        except NumericalError as exc:  # pragma: no cover - guarded above
            raise DivergenceError(str(exc), partial_trace()) from exc
        if np.any(w_blocks <= 0):
            raise DivergenceError(f"zero metric weight at iteration {n} (eps = 0?)", partial_trace())
        w = space.expand(w_blocks)
        objective[n - 1] = F_val
        avg_objective[n - 1] = F_val if n == 1 else problem.F(x_avg)
        mean_stepsize[n - 1] = eta * float(np.sum(1.0 / w_blocks)) / n_blocks

        snap = IterationSnapshot(x, g, w, F_val)
        if prev_snap is not None and (n - 2) % config.monitor_stride == 0:
            if want_lemma1:
                lemma1[n - 2] = monitor_lemma1(prev_snap, snap, ref, F_ref, eta)
            if want_fejer:
                fejer[n - 2] = monitor_fejer(prev_snap, snap, ref, eta)
        prev_snap = snap

        x_new = phi.prox(x - (eta / w) * g, eta, w)
        if not np.all(np.isfinite(x_new)):
            done = n
            raise DivergenceError(f"non-finite iterate after iteration {n}", partial_trace())
        x = x_new
        x_sum += x
        x_avg = x_sum / n
        max_norm = max(max_norm, float(np.linalg.norm(x)))
        if n + 1 >= tail_start:
            if tail_anchor is None:
                tail_anchor = x.copy()
            else:
                tail_spread = max(tail_spread, float(np.linalg.norm(x - tail_anchor)))
        done = n

    if iterates is not None:
        iterates[budget] = x
    return _finish(
        objective, avg_objective, mean_stepsize, diff_sq, lemma1, fejer, x, x_avg,
        problem.F(x), problem.F(x_avg), acc, max_norm, tail_spread, budget, config, iterates,
    )


def _finish(objective, avg_objective, mean_stepsize, diff_sq, lemma1, fejer, x, x_avg,
            F_final, F_avg_final, acc, max_norm, tail_spread, done, config, iterates):
    steps = None
    if lemma1 is not None or fejer is not None:
        steps = np.arange(1, len(lemma1 if lemma1 is not None else fejer) + 1)
    return Trace(
        objective=objective,
        avg_objective=avg_objective,
        mean_stepsize=mean_stepsize,
        diff_sq=diff_sq,
        lemma1_residual=lemma1,
        fejer_residual=fejer,
        x_final=np.array(x, copy=True),
        x_avg_final=np.array(x_avg, copy=True),
        final_objective=float(F_final),
        final_avg_objective=float(F_avg_final),
        weights_final=acc.weights_array(),
        max_iterate_norm=max_norm,
        tail_spread=tail_spread,
        iterations=done,
        policy=config.policy,
        eta=config.eta,
        iterates=iterates,
        monitor_steps=steps,
    )


def monitored_min(residuals: Optional[np.ndarray]) -> float:
    """Smallest evaluated residual (strided monitors leave NaN gaps)."""
    if residuals is None or residuals.size == 0:
        return float("nan")
    vals = residuals[np.isfinite(residuals)]
    return float(vals.min()) if vals.size else float("nan")

