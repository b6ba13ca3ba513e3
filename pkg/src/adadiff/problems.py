"""Composite objectives ``F = f + phi`` used in the experiments.

Losses return ``(value, subgradient)`` pairs computed on flat float64
arrays. Regularizers expose ``value`` and a diagonal-metric ``prox``:

    prox(y, eta, w) = argmin_x  phi(x) + sum_j w_j (x_j - y_j)^2 / (2 eta)

For a diagonal metric and a separable ``phi`` this problem splits into
scalar problems with effective step ``eta / w_j``, which is how both
proxes below are computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .blockspace import BlockVector, MetricWeights, SpaceDescriptor
from .exceptions import DomainError, SignatureMismatch, UnsupportedConfiguration

__all__ = [
    "Dataset",
    "Zero",
    "L1",
    "Box",
    "SignedBox",
    "Problem",
    "hinge_eval",
    "lad_eval",
    "logistic_eval",
    "svm_dual_eval",
    "prox_l1",
    "prox_signed_box",
    "objective",
    "hinge_problem",
    "lad_problem",
    "logistic_problem",
    "svm_dual_problem",
]

Matrix = Union[np.ndarray, sp.csr_matrix]

# logistic margins beyond this are treated as saturated
_MARGIN_CLIP = 500.0


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix ``A`` (N x d, dense or CSR) and targets ``b``."""

    A: Matrix
    b: np.ndarray

    def __post_init__(self):
        A = self.A
        if sp.issparse(A):
            A = sp.csr_matrix(A, dtype=np.float64)
        else:
            A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        b = np.asarray(self.b, dtype=np.float64).ravel()
        if A.shape[0] != b.shape[0]:
            raise SignatureMismatch(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.A)

    def is_classification(self) -> bool:
        return bool(np.all(np.abs(self.b) == 1.0))

    def dense(self) -> np.ndarray:
        return self.A.toarray() if self.is_sparse else self.A

    def head(self, n_rows: int) -> "Dataset":
        return Dataset(self.A[:n_rows], self.b[:n_rows])


def _as_array(x) -> tuple[np.ndarray, SpaceDescriptor | None]:
    if isinstance(x, BlockVector):
        return x.data, x.space
    return np.asarray(x, dtype=np.float64).ravel(), None


def _wrap(g: np.ndarray, space: SpaceDescriptor | None):
    return g if space is None else BlockVector(g, space)


def _check_dim(x: np.ndarray, d: int):
    if x.shape[0] != d:
        raise SignatureMismatch(f"x has {x.shape[0]} entries, data has d={d}")


# --------------------------------------------------------------------------
# losses


def _hinge(x: np.ndarray, data: Dataset):
    _check_dim(x, data.d)
    margins = data.b * (data.A @ x)
    slack = 1.0 - margins
    value = float(np.mean(np.maximum(slack, 0.0)))
    # margin exactly 1 contributes the zero subgradient
    coef = np.where(margins < 1.0, -data.b, 0.0) / data.N
    return value, np.asarray(data.A.T @ coef).ravel()


def _lad(x: np.ndarray, data: Dataset):
    _check_dim(x, data.d)
    r = data.b - data.A @ x
    value = float(np.mean(np.abs(r)))
    return value, np.asarray(data.A.T @ (-np.sign(r) / data.N)).ravel()


def _softplus(t: np.ndarray) -> np.ndarray:
    out = np.logaddexp(0.0, t)
    out = np.where(t > _MARGIN_CLIP, t, out)
    return np.where(t < -_MARGIN_CLIP, 0.0, out)


def _logistic(x: np.ndarray, data: Dataset, sigma: float):
    _check_dim(x, data.d)
    z = data.b * (data.A @ x)
    value = float(np.mean(_softplus(-z))) + 0.5 * sigma * float(x @ x)
    s = np.where(z > _MARGIN_CLIP, 0.0, np.where(z < -_MARGIN_CLIP, 1.0, expit(-z)))
    grad = np.asarray(data.A.T @ (-data.b * s / data.N)).ravel() + sigma * x
    return value, grad


def _svm_dual(alpha: np.ndarray, K: np.ndarray, b: np.ndarray, lam: float):
    Ka = K @ alpha
    value = float(alpha @ Ka) / (2.0 * lam) - float(alpha @ b)
    return value, Ka / lam - b


def hinge_eval(x, data: Dataset):
    """Mean hinge loss ``N^-1 sum max(0, 1 - b_j <x, a_j>)`` and a subgradient."""
    arr, space = _as_array(x)
    value, g = _hinge(arr, data)
    return value, _wrap(g, space)


def lad_eval(x, data: Dataset):
    """Mean absolute deviation ``N^-1 sum |b_j - <x, a_j>|``; uses ``sign(0) = 0``."""
    arr, space = _as_array(x)
    value, g = _lad(arr, data)
    return value, _wrap(g, space)


def logistic_eval(x, data: Dataset, sigma: float = 0.0):
    """Mean logistic loss plus ``sigma/2 ||x||^2`` and its exact gradient."""
    if sigma < 0:
        raise DomainError("sigma must be >= 0")
    arr, space = _as_array(x)
    value, g = _logistic(arr, data, sigma)
    return value, _wrap(g, space)


def _check_kernel(K: np.ndarray, n: int):
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise SignatureMismatch(f"kernel must be square, got shape {K.shape}")
    if K.shape[0] != n:
        raise SignatureMismatch(f"kernel is {K.shape[0]}x{K.shape[0]} but alpha has {n} entries")


def svm_dual_eval(alpha, K: np.ndarray, b, lam: float):
    """SVM dual smooth part ``alpha' K alpha / (2 lam) - <alpha, b>`` and gradient."""
    arr, space = _as_array(alpha)
    K = np.asarray(K, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    _check_kernel(K, arr.shape[0])
    if b.shape[0] != arr.shape[0]:
        raise SignatureMismatch("labels and alpha differ in length")
    if lam <= 0:
        raise DomainError("lambda must be positive")
    value, g = _svm_dual(arr, K, b, lam)
    return value, _wrap(g, space)


# --------------------------------------------------------------------------
# regularizers


class Zero:
    """``phi = 0``; the prox is the identity."""

    name = "zero"

    def value(self, x: np.ndarray) -> float:
        return 0.0

    def prox(self, y: np.ndarray, eta: float, w_coord: np.ndarray) -> np.ndarray:
        return y

    def check_space(self, space: SpaceDescriptor):
        pass

    def __repr__(self):
        return "Zero()"


class L1:
    """``phi = lam ||x||_1`` with coordinate-wise soft thresholding."""

    name = "l1"

    def __init__(self, lam: float):
        if not lam > 0:
            raise DomainError(f"l1 weight must be positive, got {lam}")
        self.lam = float(lam)

    def value(self, x: np.ndarray) -> float:
        return self.lam * float(np.sum(np.abs(x)))

    def prox(self, y: np.ndarray, eta: float, w_coord: np.ndarray) -> np.ndarray:
        tau = eta * self.lam / w_coord
        return np.sign(y) * np.maximum(np.abs(y) - tau, 0.0)

    def check_space(self, space: SpaceDescriptor):
        if not space.is_coordinatewise:
            raise UnsupportedConfiguration(
                "l1 prox needs one coordinate per block; got block lengths "
                f"{space.block_lengths}"
            )

    def __repr__(self):
        return f"L1(lam={self.lam!r})"


class Box:
    """Indicator of ``lower <= x <= upper``.

    With a diagonal metric the weighted projection onto a box is plain
    clipping, whatever the weights are.
    """

    name = "box"
    FEAS_TOL = 1e-12

    def __init__(self, lower, upper):
        lower = np.asarray(lower, dtype=np.float64).ravel()
        upper = np.asarray(upper, dtype=np.float64).ravel()
        if lower.shape != upper.shape:
            raise SignatureMismatch("box bounds differ in shape")
        if np.any(lower > upper):
            raise DomainError("box lower bound exceeds upper bound")
        self.lower, self.upper = lower, upper
        self._scale = float(max(np.max(np.abs(lower), initial=0.0), np.max(np.abs(upper), initial=0.0)))

    def value(self, x: np.ndarray) -> float:
        # averages of feasible points can leave the box by rounding; FEAS_TOL absorbs that
        tol = self.FEAS_TOL * (1.0 + self._scale)
        inside = np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol)
        return 0.0 if inside else float("inf")

    def prox(self, y: np.ndarray, eta: float, w_coord: np.ndarray) -> np.ndarray:
        return np.clip(y, self.lower, self.upper)

    def check_space(self, space: SpaceDescriptor):
        if space.dim != self.lower.size:
            raise SignatureMismatch(f"box has {self.lower.size} coordinates, space {space.dim}")

    def __repr__(self):
        return f"Box(dim={self.lower.size})"


class SignedBox(Box):
    """Indicator of ``0 <= b_j x_j <= 1/N`` for labels ``b_j`` in {+1, -1}."""

    name = "signed_box"

    def __init__(self, labels, N: int | None = None):
        labels = np.asarray(labels, dtype=np.float64).ravel()
        if not np.all(np.abs(labels) == 1.0):
            raise DomainError("signed box labels must be +1 or -1")
        N = labels.size if N is None else int(N)
        if N < 1:
            raise DomainError("N must be >= 1")
        cap = 1.0 / N
        super().__init__(np.where(labels > 0, 0.0, -cap), np.where(labels > 0, cap, 0.0))
        self.labels, self.N = labels, N

    def __repr__(self):
        return f"SignedBox(N={self.N})"


def prox_l1(y: BlockVector, lam: float, eta: float, w: MetricWeights) -> BlockVector:
    """Weighted soft threshold with per-coordinate threshold ``eta * lam / w_i``."""
    reg = L1(lam)
    reg.check_space(y.space)
    if w.w.size != y.space.n_blocks:
        raise SignatureMismatch("weights do not match the vector layout")
    return BlockVector(reg.prox(y.data, eta, w.w), y.space)


def prox_signed_box(y: BlockVector, b, N: int) -> BlockVector:
    """Clip ``y_j`` to ``[0, 1/N]`` when ``b_j = +1`` and to ``[-1/N, 0]`` when ``b_j = -1``."""
    reg = SignedBox(b, N)
    reg.check_space(y.space)
    return BlockVector(reg.prox(y.data, 1.0, np.ones(y.space.dim)), y.space)


# --------------------------------------------------------------------------
# problems


@dataclass(eq=False)
class Problem:
    """``F = f + phi``.

    ``f_oracle`` maps a flat array to ``(f(x), g)`` with ``g`` a subgradient.
    ``smooth`` marks Lipschitz-smooth ``f`` (required by the quasi-Fejer
    monitor); nonsmooth problems are assumed Lipschitz-continuous.
    """

    f_oracle: Callable[[np.ndarray], tuple[float, np.ndarray]]
    phi: object
    dim: int
    smooth: bool
    name: str = "problem"
    space: SpaceDescriptor = field(default=None)

    def __post_init__(self):
        if self.space is None:
            self.space = SpaceDescriptor.coordinates(self.dim)
        if self.space.dim != self.dim:
            raise SignatureMismatch("space dimension differs from problem dimension")
        self.phi.check_space(self.space)

    def f(self, x) -> float:
        return self.f_oracle(_as_array(x)[0])[0]

    def F(self, x) -> float:
        arr = _as_array(x)[0]
        return self.f_oracle(arr)[0] + self.phi.value(arr)

    def default_start(self) -> np.ndarray:
        """Zero, which is feasible for every regularizer used here."""
        return np.zeros(self.dim)


def objective(problem: Problem, x) -> float:
    """``F(x) = f(x) + phi(x)``; ``+inf`` outside the domain of ``phi``."""
    return problem.F(x)


def hinge_problem(data: Dataset, lam: float) -> Problem:
    return Problem(lambda x: _hinge(x, data), L1(lam), data.d, smooth=False, name="hinge_l1")


def lad_problem(data: Dataset, lam: float) -> Problem:
    return Problem(lambda x: _lad(x, data), L1(lam), data.d, smooth=False, name="lad_l1")


def logistic_problem(data: Dataset, sigma: float = 0.0, lam: float | None = None) -> Problem:
    """Logistic regression; ``sigma`` lives in ``f``, ``lam`` (if given) is an l1 ``phi``."""
    if sigma < 0:
        raise DomainError("sigma must be >= 0")
    phi = Zero() if lam is None else L1(lam)
    name = "logreg_l1" if lam is not None else "logreg_l2"
    return Problem(lambda x: _logistic(x, data, sigma), phi, data.d, smooth=True, name=name)


def svm_dual_problem(K: np.ndarray, b, lam: float) -> Problem:
    K = np.asarray(K, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    _check_kernel(K, b.size)
    if lam <= 0:
        raise DomainError("lambda must be positive")
    return Problem(
        lambda a: _svm_dual(a, K, b, lam), SignedBox(b), b.size, smooth=True, name="svm_dual"
    )
