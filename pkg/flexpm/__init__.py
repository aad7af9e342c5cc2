"""Simulation, identification, observation and control of a flexible-link 3-RRR parallel manipulator."""

__version__ = "0.1.0"

from .config import HarnessConfig, SimulationConfig
from .core import BoundaryCondition, MechanismParams, ModalBasis, PlatformPose, load_params, reference_params
from .dynamics import Plant, PlantConfig
from .control import ControlLawConfig, make_controller
from .identification import IdentificationConfig, identify_mode_shape
from .observer import ObserverConfig, ObserverNet
from .harness import Trajectory, TrajectorySpec, emit_report, run_episode

__all__ = [
    "HarnessConfig",
    "SimulationConfig",
    "BoundaryCondition",
    "MechanismParams",
    "ModalBasis",
    "PlatformPose",
    "load_params",
    "reference_params",
    "Plant",
    "PlantConfig",
    "ControlLawConfig",
    "make_controller",
    "IdentificationConfig",
    "identify_mode_shape",
    "ObserverConfig",
    "ObserverNet",
    "Trajectory",
    "TrajectorySpec",
    "emit_report",
    "run_episode",
]
