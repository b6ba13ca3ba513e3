"""Metric-weight policies.

Both policies keep a per-block running sum ``v_sq`` and set
``w_i = eps + sqrt(v_sq_i)``. They differ only in what is accumulated:

* ``ADAGRAD`` adds ``||g_i^n||^2``;
* ``ADAGRAD_DIFF`` adds ``||g_i^n - g_i^{n-1}||^2`` with ``g^0 = 0``.

Under ``ADAGRAD_DIFF`` a stretch of identical gradients therefore leaves the
metric untouched, while ``ADAGRAD`` keeps shrinking the step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .blockspace import BlockVector, MetricWeights, SpaceDescriptor
from .exceptions import DomainError, NumericalError, SignatureMismatch

__all__ = [
    "PolicyKind",
    "AccumulatorState",
    "update_weights",
    "chi_n",
    "accumulation_bound",
]

DEFAULT_EPS = 1e-8


class PolicyKind(enum.Enum):
    ADAGRAD = "adagrad"
    ADAGRAD_DIFF = "adagrad-diff"

    @classmethod
    def parse(cls, name) -> "PolicyKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"adagraddiff": "adagrad-diff", "diff": "adagrad-diff"}
        key = aliases.get(key, key)
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown policy {name!r}")

    def __str__(self):
        return self.value


@dataclass
class AccumulatorState:
    """Running state of one metric policy.

    Owned by a single solver run. ``update`` mutates in place; use
    :meth:`snapshot` to keep a copy for later comparison (e.g. ``chi_n``).
    """

    space: SpaceDescriptor
    eps: float = DEFAULT_EPS
    v_sq: np.ndarray = field(default=None)
    prev_grad: np.ndarray = field(default=None)
    step_count: int = 0

    def __post_init__(self):
        if not (self.eps >= 0 and np.isfinite(self.eps)):
            raise DomainError(f"eps must be finite and >= 0, got {self.eps}")
        if self.v_sq is None:
            self.v_sq = np.zeros(self.space.n_blocks)
        if self.prev_grad is None:
            self.prev_grad = np.zeros(self.space.dim)

    @classmethod
    def for_dim(cls, d: int, eps: float = DEFAULT_EPS) -> "AccumulatorState":
        return cls(SpaceDescriptor.coordinates(d), eps)

    def snapshot(self) -> "AccumulatorState":
        return AccumulatorState(
            self.space, self.eps, self.v_sq.copy(), self.prev_grad.copy(), self.step_count
        )

    def weights_array(self) -> np.ndarray:
        return self.eps + np.sqrt(self.v_sq)

    def weights(self) -> MetricWeights:
        return MetricWeights(self.weights_array())

    def update(self, policy: PolicyKind, g: np.ndarray) -> np.ndarray:
        """Fold the gradient of the current iteration in; return per-block weights.

        Array-level twin of :func:`update_weights` used by the solver loop.
        """
        if g.shape != self.prev_grad.shape:
            raise SignatureMismatch(
                f"gradient has shape {g.shape}, state expects {self.prev_grad.shape}"
            )
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient at step {self.step_count + 1}")
        if policy is PolicyKind.ADAGRAD_DIFF:
            self.v_sq = self.v_sq + self.space.block_sq_norms(g - self.prev_grad)
        elif policy is PolicyKind.ADAGRAD:
            self.v_sq = self.v_sq + self.space.block_sq_norms(g)
        else:
            raise ValueError(f"unknown policy {policy!r}")
        self.prev_grad = np.array(g, dtype=np.float64, copy=True)
        self.step_count += 1
        return self.weights_array()


def update_weights(state: AccumulatorState, policy: PolicyKind, g: BlockVector) -> MetricWeights:
    """Advance ``state`` by one gradient and return the new metric weights."""
    if g.space.block_lengths != state.space.block_lengths:
        raise SignatureMismatch("gradient layout does not match the accumulator")
    return MetricWeights(state.update(PolicyKind.parse(policy), g.data))


def chi_n(state_before: AccumulatorState, state_after: AccumulatorState) -> float:
    """Largest relative growth of a weight between two consecutive states.

    ``max_i w_i(after) / w_i(before) - 1``; zero when nothing changed.
    """
    before = state_before.weights_array()
    after = state_after.weights_array()
    return float(np.max(after / before) - 1.0)


def accumulation_bound(a, eps: float) -> tuple[float, float]:
    """Both sides of ``sum_k a_k / (eps + sqrt(sum_{j<=k} a_j)) <= 2 sqrt(sum_k a_k)``.

    Returns ``(lhs, rhs)``. The inequality is what makes the metric's
    running sums pay for themselves; it holds for any nonnegative sequence
    and ``eps > 0``.
    """
    a = np.asarray(a, dtype=np.float64)
    if np.any(a < 0):
        raise DomainError("sequence must be nonnegative")
    if eps <= 0:
        raise DomainError("eps must be positive")
    partial = np.cumsum(a)
    lhs = float(np.sum(a / (eps + np.sqrt(partial))))
    rhs = 2.0 * float(np.sqrt(partial[-1])) if a.size else 0.0
    return lhs, rhs
