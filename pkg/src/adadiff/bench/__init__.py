"""Benchmark harness: presets, sweeps, optimal-value estimation and reports."""

from .config import PRESETS, ExperimentConfig, Preset, build_problem, initial_point
from .report import ReportKind, report, report_from_dir, write_sweep, write_trace_csv
from .sweep import FstarEstimate, RunRecord, SweepResult, estimate_fstar, fstar_protocol, run_items, sweep

__all__ = [
    "PRESETS",
    "ExperimentConfig",
    "Preset",
    "build_problem",
    "initial_point",
    "ReportKind",
    "report",
    "report_from_dir",
    "write_sweep",
    "write_trace_csv",
    "FstarEstimate",
    "RunRecord",
    "SweepResult",
    "estimate_fstar",
    "fstar_protocol",
    "run_items",
    "sweep",
]
