"""Experiment presets and configuration.

Config files are flat ``key = value`` text::

    # comment
    preset = logreg-l1
    data = /path/to/splice.t
    eta-grid = 1e-5, 1e2, 200
    seeds = 0-9
    policy = both

Keys are the CLI long options without the leading dashes (``-`` and ``_``
are interchangeable). Blank lines and ``#`` comments are ignored; a
repeated key overrides the earlier one. CLI flags override the file.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from ..data import SyntheticSpec, Task, gaussian_kernel, gen_synthetic, gen_two_moons, load_libsvm, rng_stream
from ..exceptions import ConfigurationError
from ..metrics import DEFAULT_EPS, PolicyKind
from ..problems import Problem, hinge_problem, lad_problem, logistic_problem, svm_dual_problem
from ..solver import Monitor

__all__ = [
    "Preset",
    "PresetDefaults",
    "PRESETS",
    "ExperimentConfig",
    "parse_seeds",
    "parse_policies",
    "parse_eta_grid",
    "read_config_file",
    "build_problem",
    "synthetic_spec",
    "initial_point",
]


class Preset(enum.Enum):
    HINGE_SYNTH = "hinge"
    LAD_SYNTH = "lad"
    LOGREG_L2 = "logreg-l2"
    LOGREG_L1 = "logreg-l1"
    SVM_DUAL = "svm-dual"

    @classmethod
    def parse(cls, name) -> "Preset":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {
            "hingesynth": "hinge", "ladsynth": "lad", "logregl2": "logreg-l2",
            "logregl1": "logreg-l1", "svmdual": "svm-dual", "news20": "logreg-l2",
            "splice": "logreg-l1", "2moons": "svm-dual",
        }
        key = aliases.get(key.replace("-", ""), key)
        for p in cls:
            if p.value == key:
                return p
        raise ConfigurationError(f"unknown preset {name!r}")


@dataclass(frozen=True)
class PresetDefaults:
    budget: int
    reference_etas: tuple[float, float, float]
    lam: Optional[float] = None
    sigma: float = 0.0
    # synthetic fallback shape
    N: int = 500
    d: int = 100
    nnz: int = 20
    task: Task = Task.SIGN_REGRESSION
    needs_file: bool = False
    width: float = 1.0
    noise_std: float = 0.1


PRESETS = {
    Preset.HINGE_SYNTH: PresetDefaults(1000, (0.0063, 0.063, 0.63), lam=1e-2),
    Preset.LAD_SYNTH: PresetDefaults(1000, (0.0042, 0.042, 0.42), lam=1e-2, task=Task.REGRESSION),
    Preset.LOGREG_L2: PresetDefaults(
        2500, (0.0863, 0.863, 8.63), sigma=1e-4, N=2000, d=500, nnz=50, needs_file=True
    ),
    Preset.LOGREG_L1: PresetDefaults(
        1000, (0.0238, 0.238, 2.38), lam=1e-2, N=2175, d=60, nnz=20, needs_file=True
    ),
    Preset.SVM_DUAL: PresetDefaults(20, (0.0002, 0.002, 0.02), lam=1e-3, N=300, d=2),
}


def parse_seeds(text) -> tuple[int, ...]:
    """``"0-9"``, ``"1,2,5"`` or a mix such as ``"0-2,7"``."""
    if isinstance(text, (list, tuple)):
        return tuple(int(s) for s in text)
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        lo, hi = int(lo), int(hi) if sep else int(lo)
        if lo < 0 or hi < lo:
            raise ConfigurationError(f"bad seed range {part!r}")
        seeds.extend(range(lo, hi + 1))
    if not seeds:
        raise ConfigurationError("seed list is empty")
    return tuple(seeds)


def parse_policies(text) -> tuple[PolicyKind, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(PolicyKind.parse(p) for p in text)
    key = str(text).strip().lower()
    if key in ("both", "all"):
        return (PolicyKind.ADAGRAD, PolicyKind.ADAGRAD_DIFF)
    return tuple(PolicyKind.parse(p) for p in key.split(",") if p.strip())


def parse_eta_grid(text) -> tuple[float, float, int]:
    if isinstance(text, (list, tuple)):
        lo, hi, count = text
    else:
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 3:
            raise ConfigurationError(f"eta grid must be 'min,max,count', got {text!r}")
        lo, hi, count = parts
    lo, hi, count = float(lo), float(hi), int(count)
    if count < 1:
        raise ConfigurationError("eta grid count must be >= 1")
    if not (0 < lo and (lo < hi or (count == 1 and lo <= hi))):
        raise ConfigurationError(f"eta grid needs 0 < min < max, got {lo}, {hi}")
    return lo, hi, count


@dataclass(frozen=True)
class ExperimentConfig:
    preset: Preset
    data: Optional[str] = None  # LIBSVM path, or "synthetic"; None means preset default
    data_seed: int = 0
    n_features: Optional[int] = None
    max_rows: Optional[int] = None
    lam: Optional[float] = None
    sigma: Optional[float] = None
    width: Optional[float] = None
    noise_std: Optional[float] = None
    N: Optional[int] = None
    d: Optional[int] = None
    nnz: Optional[int] = None
    budget: Optional[int] = None
    eta: Optional[float] = None
    eta_grid: tuple[float, float, int] = (1e-5, 1e2, 200)
    seeds: tuple[int, ...] = tuple(range(10))
    policies: tuple[PolicyKind, ...] = (PolicyKind.ADAGRAD, PolicyKind.ADAGRAD_DIFF)
    out: str = "out"
    monitors: frozenset = frozenset()
    threads: int = 1
    init: str = "uniform"
    eps: float = DEFAULT_EPS
    panels: str = "derived"  # "derived", "paper" or "none"
    refine_factor: int = 10

    def __post_init__(self):
        object.__setattr__(self, "preset", Preset.parse(self.preset))
        object.__setattr__(self, "seeds", parse_seeds(self.seeds))
        object.__setattr__(self, "policies", parse_policies(self.policies))
        object.__setattr__(self, "eta_grid", parse_eta_grid(self.eta_grid))
        object.__setattr__(self, "monitors", frozenset(Monitor.parse(m) for m in self.monitors))
        if not self.policies:
            raise ConfigurationError("at least one policy is required")
        if self.eta is not None and not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigurationError("eta must be positive")
        if self.init not in ("uniform", "zero"):
            raise ConfigurationError("init must be 'uniform' or 'zero'")
        if self.panels not in ("derived", "paper", "none"):
            raise ConfigurationError("panels must be 'derived', 'paper' or 'none'")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        if self.budget is not None and self.budget < 2:
            raise ConfigurationError("budget must be >= 2")

    @property
    def defaults(self) -> PresetDefaults:
        return PRESETS[self.preset]

    @property
    def effective_budget(self) -> int:
        return self.budget if self.budget is not None else self.defaults.budget

    @property
    def effective_lam(self) -> Optional[float]:
        return self.lam if self.lam is not None else self.defaults.lam

    @property
    def effective_sigma(self) -> float:
        return self.sigma if self.sigma is not None else self.defaults.sigma

    def etas(self) -> np.ndarray:
        """Explicit ``eta`` if set, else the log-spaced grid."""
        if self.eta is not None:
            return np.array([float(self.eta)])
        lo, hi, count = self.eta_grid
        if count == 1:
            return np.array([lo])
        return np.logspace(math.log10(lo), math.log10(hi), count)

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs)


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}
_ALIASES = {"policy": "policies", "n": "N"}


def normalize_key(key: str) -> str:
    key = key.strip().lower().replace("-", "_")
    return _ALIASES.get(key, key)


def read_config_file(path) -> dict:
    """Parse a flat key-value file into a dict of raw string values."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
            name = normalize_key(key)
            if name not in _FIELD_NAMES:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key.strip()!r}")
            values[name] = value.strip()
    return values


_INT_KEYS = {"data_seed", "n_features", "max_rows", "N", "d", "nnz", "budget", "threads", "refine_factor"}
_FLOAT_KEYS = {"lam", "sigma", "width", "noise_std", "eta", "eps"}


def coerce(values: dict) -> dict:
    """Turn raw strings from a config file or CLI into field values."""
    out = {}
    for key, val in values.items():
        if val is None:
            continue
        if isinstance(val, str):
            if key in _INT_KEYS:
                val = int(val)
            elif key in _FLOAT_KEYS:
                val = float(val)
            elif key == "monitors":
                val = frozenset(m for m in val.split(",") if m.strip())
        out[key] = val
    return out


# --------------------------------------------------------------------------
# problem construction


def synthetic_spec(config: ExperimentConfig) -> SyntheticSpec:
    """Generator settings for the preset, with config overrides applied."""
    dflt = config.defaults
    d = config.d or dflt.d
    # a smaller d than the preset's caps the default support size
    nnz = min(dflt.nnz, d) if config.nnz is None else config.nnz
    return SyntheticSpec(N=config.N or dflt.N, d=d, nnz=nnz, task=dflt.task, seed=config.data_seed)


def _load_dataset(config: ExperimentConfig):
    dflt = config.defaults
    source = config.data
    if source is None:
        if dflt.needs_file:
            raise ConfigurationError(
                f"preset {config.preset.value!r} needs a LIBSVM file (data = PATH) "
                "or data = synthetic"
            )
        source = "synthetic"
    if source == "synthetic":
        data, _ = gen_synthetic(synthetic_spec(config))
    else:
        if not os.path.exists(source):
            raise ConfigurationError(f"data file not found: {source}")
        data = load_libsvm(source, n_features=config.n_features, max_rows=config.max_rows,
                           real_labels=dflt.task is Task.REGRESSION)
    if config.max_rows is not None and data.N > config.max_rows:
        data = data.head(config.max_rows)
    return data


def build_problem(config: ExperimentConfig) -> Problem:
    preset = config.preset
    dflt = config.defaults
    if preset is Preset.SVM_DUAL:
        noise = dflt.noise_std if config.noise_std is None else config.noise_std
        data = gen_two_moons(config.N or dflt.N, noise, config.data_seed)
        K = gaussian_kernel(data.A, config.width or dflt.width)
        return svm_dual_problem(K, data.b, config.effective_lam)
    data = _load_dataset(config)
    if preset is Preset.HINGE_SYNTH:
        return hinge_problem(data, config.effective_lam)
    if preset is Preset.LAD_SYNTH:
        return lad_problem(data, config.effective_lam)
    if preset is Preset.LOGREG_L2:
        return logistic_problem(data, sigma=config.effective_sigma)
    if preset is Preset.LOGREG_L1:
        return logistic_problem(data, sigma=0.0, lam=config.effective_lam)
    raise ConfigurationError(f"unhandled preset {preset}")  # pragma: no cover


def initial_point(config: ExperimentConfig, problem: Problem, seed: int) -> np.ndarray:
    """Starting point for one seed.

    ``init = zero`` gives the origin. ``init = uniform`` draws
    ``U[-1, 1]^d`` from the seed's stream; for the SVM dual the draw is
    mapped into the signed box so the start is feasible.
    """
    if config.init == "zero":
        return problem.default_start()
    u = rng_stream(seed).uniform(-1.0, 1.0, problem.dim)
    if config.preset is Preset.SVM_DUAL:
        box = problem.phi
        return box.lower + 0.5 * (u + 1.0) * (box.upper - box.lower)
    return u
