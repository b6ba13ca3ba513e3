"""AdaGrad-Diff: variable-metric proximal (sub)gradient methods."""

from .blockspace import BlockVector, MetricWeights, SpaceDescriptor, scaled_step, winv_norm_sq, wnorm_sq
from .exceptions import (
    AdaDiffError,
    ConfigurationError,
    DivergenceError,
    DomainError,
    EstimationError,
    NumericalError,
    ParseError,
    SignatureMismatch,
    UnsupportedConfiguration,
)
from .metrics import AccumulatorState, PolicyKind, accumulation_bound, chi_n, update_weights
from .problems import (
    L1,
    Box,
    Dataset,
    Problem,
    SignedBox,
    Zero,
    hinge_eval,
    hinge_problem,
    lad_eval,
    lad_problem,
    logistic_eval,
    logistic_problem,
    objective,
    prox_l1,
    prox_signed_box,
    svm_dual_eval,
    svm_dual_problem,
)
from .solver import Monitor, SolverConfig, Trace, monitor_fejer, monitor_lemma1, run, summability_report

__version__ = "0.1.0"
