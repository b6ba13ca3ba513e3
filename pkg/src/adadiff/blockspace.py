"""Direct-sum vectors and the block-diagonal norms used by the solvers.

A point of ``X = X_1 (+) ... (+) X_d`` is stored as one flat float64 array
together with a :class:`SpaceDescriptor` that records how the array is cut
into blocks. A diagonal metric assigns one positive weight per block, so
every norm below is a weighted sum of per-block squared Euclidean norms.

The solver works on raw arrays for speed; the ``*_arr`` helpers here are
the array-level kernels and the public functions wrap them with layout
checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DomainError, SignatureMismatch

__all__ = [
    "SpaceDescriptor",
    "BlockVector",
    "MetricWeights",
    "wnorm_sq",
    "winv_norm_sq",
    "scaled_step",
]


@dataclass(frozen=True)
class SpaceDescriptor:
    """Block layout of a direct sum: the length of every block, in order."""

    block_lengths: tuple[int, ...]
    _offsets: np.ndarray = field(init=False, repr=False, compare=False)
    _unit: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lengths = tuple(int(n) for n in self.block_lengths)
        if len(lengths) < 1:
            raise DomainError("a space needs at least one block")
        if any(n < 1 for n in lengths):
            raise DomainError(f"block lengths must be >= 1, got {lengths}")
        object.__setattr__(self, "block_lengths", lengths)
        offsets = np.concatenate(([0], np.cumsum(lengths)[:-1])).astype(np.intp)
        offsets.setflags(write=False)
        object.__setattr__(self, "_offsets", offsets)
        object.__setattr__(self, "_unit", all(n == 1 for n in lengths))

    @classmethod
    def coordinates(cls, d: int) -> "SpaceDescriptor":
        """``R^d`` split into ``d`` one-dimensional blocks."""
        return cls((1,) * int(d))

    @property
    def n_blocks(self) -> int:
        return len(self.block_lengths)

    @property
    def dim(self) -> int:
        return int(sum(self.block_lengths))

    @property
    def is_coordinatewise(self) -> bool:
        return self._unit

    def block_sq_norms(self, arr: np.ndarray) -> np.ndarray:
        """Squared Euclidean norm of each block of a flat array."""
        sq = arr * arr
        if self._unit:
            return sq
        return np.add.reduceat(sq, self._offsets)

    def expand(self, per_block: np.ndarray) -> np.ndarray:
        """Broadcast one value per block to every coordinate of that block."""
        if self._unit:
            return per_block
        return np.repeat(per_block, self.block_lengths)

    def split(self, arr: np.ndarray) -> list[np.ndarray]:
        return np.split(arr, self._offsets[1:])


def _readonly(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class BlockVector:
    """Immutable element of a direct sum, stored as a flat float64 array."""

    data: np.ndarray
    space: SpaceDescriptor

    def __post_init__(self):
        data = _readonly(np.ravel(self.data))
        if data.shape[0] != self.space.dim:
            raise SignatureMismatch(
                f"data has {data.shape[0]} entries, space expects {self.space.dim}"
            )
        object.__setattr__(self, "data", data)

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[float]]) -> "BlockVector":
        arrs = [np.atleast_1d(np.asarray(b, dtype=np.float64)).ravel() for b in blocks]
        space = SpaceDescriptor(tuple(a.size for a in arrs))
        return cls(np.concatenate(arrs), space)

    @classmethod
    def coordinates(cls, values) -> "BlockVector":
        values = np.atleast_1d(np.asarray(values, dtype=np.float64)).ravel()
        return cls(values, SpaceDescriptor.coordinates(values.size))

    @classmethod
    def zeros(cls, space: SpaceDescriptor) -> "BlockVector":
        return cls(np.zeros(space.dim), space)

    @property
    def blocks(self) -> list[np.ndarray]:
        return self.space.split(self.data)

    def block_sq_norms(self) -> np.ndarray:
        return self.space.block_sq_norms(self.data)

    def _check(self, other: "BlockVector"):
        if not isinstance(other, BlockVector):
            return NotImplemented
        if other.space.block_lengths != self.space.block_lengths:
            raise SignatureMismatch(
                f"block signatures differ: {self.space.block_lengths} "
                f"vs {other.space.block_lengths}"
            )
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return BlockVector(self.data + other.data, self.space)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return BlockVector(self.data - other.data, self.space)

    def __neg__(self):
        return BlockVector(-self.data, self.space)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return BlockVector(self.data * float(scalar), self.space)

    __rmul__ = __mul__

    def dot(self, other: "BlockVector") -> float:
        self._check(other)
        return float(self.data @ other.data)

    def __eq__(self, other):
        if not isinstance(other, BlockVector):
            return NotImplemented
        return (
            self.space.block_lengths == other.space.block_lengths
            and np.array_equal(self.data, other.data)
        )

    def __hash__(self):
        return hash((self.space.block_lengths, self.data.tobytes()))

    def __len__(self):
        return self.space.n_blocks

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


@dataclass(frozen=True, eq=False)
class MetricWeights:
    """One positive weight per block; defines ``W = (+) w_i Id_i``."""

    w: np.ndarray

    def __post_init__(self):
        w = _readonly(np.atleast_1d(self.w).ravel())
        if not np.all(np.isfinite(w)):
            raise DomainError("metric weights must be finite")
        if np.any(w <= 0):
            raise DomainError("metric weights must be strictly positive")
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.w.size

    def inverse(self) -> "MetricWeights":
        return MetricWeights(1.0 / self.w)

    def max(self) -> float:
        return float(self.w.max())


def _check_weights(v: BlockVector, w: MetricWeights):
    if w.w.size != v.space.n_blocks:
        raise SignatureMismatch(
            f"{w.w.size} weights for a vector with {v.space.n_blocks} blocks"
        )


def wnorm_sq_arr(v: np.ndarray, w_coord: np.ndarray) -> float:
    """``sum_j w_j v_j^2`` with weights already expanded to coordinates."""
    return float(np.dot(w_coord * v, v))


def winv_norm_sq_arr(v: np.ndarray, w_coord: np.ndarray) -> float:
    return float(np.dot(v / w_coord, v))


def wnorm_sq(v: BlockVector, w: MetricWeights) -> float:
    """Squared ``W``-norm, ``sum_i w_i ||v_i||^2``."""
    _check_weights(v, w)
    return float(np.dot(w.w, v.block_sq_norms()))


def winv_norm_sq(v: BlockVector, w: MetricWeights) -> float:
    """Squared ``W^{-1}``-norm, ``sum_i ||v_i||^2 / w_i``."""
    _check_weights(v, w)
    if np.any(w.w <= 0):  # pragma: no cover - MetricWeights already forbids this
        raise DomainError("weights must be positive")
    return float(np.dot(1.0 / w.w, v.block_sq_norms()))


def scaled_step(x: BlockVector, g: BlockVector, eta: float, w: MetricWeights) -> BlockVector:
    """Forward step ``x - eta W^{-1} g`` computed block by block."""
    if x.space.block_lengths != g.space.block_lengths:
        raise SignatureMismatch("x and g have different block signatures")
    _check_weights(x, w)
    if eta < 0:
        raise DomainError("eta must be nonnegative")
    scale = x.space.expand(eta / w.w)
    return BlockVector(x.data - scale * g.data, x.space)
