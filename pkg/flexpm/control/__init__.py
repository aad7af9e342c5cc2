"""Computed-torque and joint PD control."""

from .control_config import COMPENSATION_MODELS, ControlLawConfig, TrackingError
from .computed_torque import computed_torque_actuated, computed_torque_full, joint_pd
from .lyapunov import ideal_lyapunov_rate, lyapunov_rate, lyapunov_value
from .controllers import (
    ComputedTorqueController,
    ControlOutput,
    Controller,
    DesiredSignal,
    Estimate,
    JointPDController,
    JointReading,
    ModalProjector,
    make_controller,
)

__all__ = [
    "COMPENSATION_MODELS",
    "ControlLawConfig",
    "TrackingError",
    "computed_torque_actuated",
    "computed_torque_full",
    "joint_pd",
    "ideal_lyapunov_rate",
    "lyapunov_rate",
    "lyapunov_value",
    "ComputedTorqueController",
    "ControlOutput",
    "Controller",
    "DesiredSignal",
    "Estimate",
    "JointPDController",
    "JointReading",
    "ModalProjector",
    "make_controller",
]
