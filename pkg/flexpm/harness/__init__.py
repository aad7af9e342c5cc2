"""Case-study harness: trajectory, closed-loop episodes, checks and reports."""

from .trajectory import DWELL, MOVING, Trajectory, TrajectorySpec, build_trajectory, check_workspace
from .metrics import EpisodeMetrics, actuator_energy, compute_metrics, log_columns, monotone_with_tolerance
from .episode import EpisodeResult, run_episode
from .report import SCHEMAS, emit_report
from .cases import CaseOutcome, CaseSetup, compare_models, run_case, sweep_observer_rate

__all__ = [
    "DWELL",
    "MOVING",
    "Trajectory",
    "TrajectorySpec",
    "build_trajectory",
    "check_workspace",
    "EpisodeMetrics",
    "actuator_energy",
    "compute_metrics",
    "log_columns",
    "monotone_with_tolerance",
    "EpisodeResult",
    "run_episode",
    "SCHEMAS",
    "emit_report",
    "CaseOutcome",
    "CaseSetup",
    "compare_models",
    "run_case",
    "sweep_observer_rate",
]
