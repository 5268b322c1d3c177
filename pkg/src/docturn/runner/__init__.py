"""Experiment orchestration: run plans, matrix execution with resume,
report emission, and the command-line interface."""

from .config import RunPlan, ScoringConfig, load_run_config, plan_from_dict
from .executor import CellArtifact, RunArtifacts, execute, load_artifacts
from .reports import emit_reports

__all__ = [
    "CellArtifact",
    "RunArtifacts",
    "RunPlan",
    "ScoringConfig",
    "emit_reports",
    "execute",
    "load_artifacts",
    "load_run_config",
    "plan_from_dict",
]
