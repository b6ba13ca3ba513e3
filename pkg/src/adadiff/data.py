"""Datasets: seeded synthetic generators, LIBSVM text I/O and Gaussian kernels.

Random streams
--------------
Every generator draws from ``numpy.random.Generator(PCG64(seed))`` and
uses ``Generator.standard_normal`` (ziggurat) for Gaussians. The draw order
is part of the contract and is documented on each function; changing it
changes every dataset.

LIBSVM grammar
--------------
::

    line    := label (WS index ":" value)* [WS] ["#" comment] NEWLINE
    label   := float; one of {-1, 0, +1} (0 is read as -1), or any finite
               float when reading regression targets
    index   := integer >= 1, strictly increasing within a line
    value   := finite float

Blank lines and lines holding only a comment are skipped. Serialization
writes classification labels as ``+1``/``-1`` (other targets with ``%.17g``), values with ``%.17g``, single spaces and a
trailing newline, and omits explicit zeros.
"""

from __future__ import annotations

import enum
import io
import math
import os
from dataclasses import dataclass
from typing import IO, Iterable, Union

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import pdist, squareform

from .exceptions import DomainError, ParseError
from .problems import Dataset

__all__ = [
    "Task",
    "SyntheticSpec",
    "rng_stream",
    "gen_synthetic",
    "parse_libsvm",
    "load_libsvm",
    "dump_libsvm",
    "gen_two_moons",
    "gaussian_kernel",
]

RNG_ALGORITHM = "numpy.PCG64+ziggurat-normal"


class Task(enum.Enum):
    SIGN_REGRESSION = "sign"
    REGRESSION = "regression"


@dataclass(frozen=True)
class SyntheticSpec:
    N: int
    d: int
    nnz: int
    task: Task = Task.SIGN_REGRESSION
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))
        if self.N < 1 or self.d < 1:
            raise DomainError("N and d must be positive")
        if not 0 <= self.nnz <= self.d:
            raise DomainError(f"nnz must lie in [0, d={self.d}], got {self.nnz}")


def rng_stream(seed: int) -> np.random.Generator:
    """The package's seeded stream (see module docstring)."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def gen_synthetic(spec: SyntheticSpec) -> tuple[Dataset, np.ndarray]:
    """Gaussian design with a sparse planted vector.

    Draw order: ``A`` (N x d, row-major), ``w`` (d), support of ``w`` as
    ``nnz`` indices chosen without replacement, noise (N). Targets are
    ``sgn(A w + noise)`` (with ``sgn(0) = +1``) or ``A w + noise``.
    Returns the dataset and the planted ``w``.
    """
    rng = rng_stream(spec.seed)
    A = rng.standard_normal((spec.N, spec.d))
    w = rng.standard_normal(spec.d)
    support = rng.choice(spec.d, size=spec.nnz, replace=False)
    mask = np.zeros(spec.d, dtype=bool)
    mask[support] = True
    w = np.where(mask, w, 0.0)
    noise = rng.standard_normal(spec.N)
    y = A @ w + noise
    if spec.task is Task.SIGN_REGRESSION:
        y = np.where(y >= 0, 1.0, -1.0)
    return Dataset(A, y), w


# --------------------------------------------------------------------------
# LIBSVM


def _parse_float(tok: str, lineno: int, what: str) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise ParseError(f"non-numeric {what} {tok!r}", lineno) from None
    if not math.isfinite(val):
        raise ParseError(f"non-finite {what} {tok!r}", lineno)
    return val


def parse_libsvm(stream: Union[IO[str], Iterable[str], str], n_features: int | None = None,
                 real_labels: bool = False) -> Dataset:
    """Read a LIBSVM text stream into a sparse :class:`Dataset`.

    ``stream`` may be a file object, any iterable of lines, or a string
    holding the whole file. ``d`` is the largest index seen unless
    ``n_features`` is given (useful to align train and test files).
    With ``real_labels`` the label column is kept as a real target.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    labels, indptr, indices, values = [], [0], [], []
    max_index = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        label = _parse_float(tokens[0], lineno, "label")
        if real_labels:
            labels.append(label)
        elif label in (-1.0, 0.0, 1.0):
            labels.append(1.0 if label > 0 else -1.0)
        else:
            raise ParseError(f"label must be -1, 0 or +1, got {tokens[0]!r}", lineno)
        last = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"expected index:value, got {tok!r}", lineno)
            try:
                idx = int(idx_s)
            except ValueError:
                raise ParseError(f"non-integer index {idx_s!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"index must be >= 1, got {idx}", lineno)
            if idx <= last:
                raise ParseError(f"indices must increase strictly ({last} then {idx})", lineno)
            last = idx
            indices.append(idx - 1)
            values.append(_parse_float(val_s, lineno, "value"))
        max_index = max(max_index, last)
        indptr.append(len(indices))
    d = max_index if n_features is None else int(n_features)
    if n_features is not None and max_index > d:
        raise DomainError(f"file uses index {max_index} but n_features={d}")
    A = sp.csr_matrix(
        (np.asarray(values, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(labels), d),
    )
    return Dataset(A, np.asarray(labels))


def load_libsvm(path: Union[str, os.PathLike], n_features: int | None = None,
                max_rows: int | None = None, real_labels: bool = False) -> Dataset:
    """Parse a LIBSVM file from disk, optionally keeping only the first ``max_rows`` rows."""
    with open(path, "r", encoding="utf-8") as fh:
        if max_rows is None:
            return parse_libsvm(fh, n_features, real_labels)
        lines = []
        for line in fh:
            if line.split("#", 1)[0].strip():
                lines.append(line)
                if len(lines) >= max_rows:
                    break
        return parse_libsvm(lines, n_features, real_labels)


def dump_libsvm(data: Dataset, stream: IO[str]) -> None:
    """Write ``data`` in LIBSVM format; output parses back to an identical dataset."""
    A = sp.csr_matrix(data.A)
    A.sort_indices()
    binary = data.is_classification()
    for j in range(A.shape[0]):
        parts = [("+1" if data.b[j] > 0 else "-1") if binary else f"{data.b[j]:.17g}"]
        lo, hi = A.indptr[j], A.indptr[j + 1]
        for idx, val in zip(A.indices[lo:hi], A.data[lo:hi]):
            if val != 0.0:
                parts.append(f"{idx + 1}:{val:.17g}")
        stream.write(" ".join(parts) + "\n")


# --------------------------------------------------------------------------
# two moons and kernels


def gen_two_moons(N: int = 300, noise_std: float = 0.1, seed: int = 0) -> Dataset:
    """Two interleaving half circles in the plane.

    The first ``ceil(N/2)`` points lie on ``(cos t, sin t)`` and get label
    +1; the remaining ``floor(N/2)`` lie on ``(1 - cos t, 0.5 - sin t)`` and
    get label -1, with ``t`` evenly spaced on ``[0, pi]`` for each arc.
    Gaussian noise of std ``noise_std`` is then added to every coordinate
    (one ``N x 2`` draw).
    """
    if N < 2:
        raise DomainError("two moons needs N >= 2")
    if noise_std < 0:
        raise DomainError("noise_std must be >= 0")
    n_up = (N + 1) // 2
    n_down = N // 2
    t_up = np.linspace(0.0, np.pi, n_up)
    t_down = np.linspace(0.0, np.pi, n_down)
    X = np.vstack([
        np.column_stack([np.cos(t_up), np.sin(t_up)]),
        np.column_stack([1.0 - np.cos(t_down), 0.5 - np.sin(t_down)]),
    ])
    y = np.concatenate([np.ones(n_up), -np.ones(n_down)])
    if noise_std > 0:
        X = X + noise_std * rng_stream(seed).standard_normal(X.shape)
    return Dataset(X, y)


def gaussian_kernel(A, width: float = 1.0) -> np.ndarray:
    """``K_jk = exp(-||a_j - a_k||^2 / (2 width^2))``, exactly symmetric."""
    if not width > 0:
        raise DomainError("kernel width must be positive")
    A = A.toarray() if sp.issparse(A) else np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.shape[0] == 1:
        return np.ones((1, 1))
    K = squareform(np.exp(-pdist(A, "sqeuclidean") / (2.0 * width * width)))
    np.fill_diagonal(K, 1.0)
    return K
