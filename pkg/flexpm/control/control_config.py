"""Controller configuration and tracking errors."""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from flexpm.core.mechanism_config import MechanismParams
from flexpm.core.modal_basis import BoundaryCondition, ModalBasis
from flexpm.errors import ValidationError

CONTROL_KINDS = ("computed_torque", "joint_pd")
FEEDBACK_SOURCES = ("observer", "truth")

# Compensation model -> boundary condition of the controller's basis; None is the rigid model.
COMPENSATION_MODELS = {
    "developed": BoundaryCondition.CLAMPED_FREE,
    "rigid": None,
    "clamped_pinned": BoundaryCondition.CLAMPED_PINNED,
}


@dataclass
class ControlLawConfig:
    """Settings of one closed-loop controller.

    Attributes:
        kind: ``"computed_torque"`` or ``"joint_pd"``.
        kp: Position gain.
        kd: Velocity gain.
        kp_vector: Per-coordinate position gains (3 + 3 n_ctrl entries), overriding ``kp``.
        kd_vector: Per-coordinate velocity gains, overriding ``kd``.
        compensation_model: ``"developed"``, ``"rigid"`` or ``"clamped_pinned"``.
        n_ctrl: Modes per link in the compensation model.
        control_rate: Torque update rate (Hz).
        observer_rate: Pose-observer sampling rate (Hz).
        feedback: ``"observer"`` for the network estimate, ``"truth"`` for the plant pose.
        full_actuation: Command modal forces as well (ideal-model fixture only).
        modal_coriolis: Compensate the C_rf q_f_dot term in the partitioned law.
    """

    kind: str = "computed_torque"
    kp: float = 200.0
    kd: float = 1.0
    kp_vector: Optional[List[float]] = None
    kd_vector: Optional[List[float]] = None
    compensation_model: str = "developed"
    n_ctrl: int = 3
    control_rate: float = 1000.0
    observer_rate: float = 1000.0
    feedback: str = "observer"
    full_actuation: bool = False
    modal_coriolis: bool = False

    def validate(self):
        if self.kind not in CONTROL_KINDS:
            raise ValidationError("BadControlKind", f"Unknown controller kind '{self.kind}'", f"one of {CONTROL_KINDS}")
        if self.compensation_model not in COMPENSATION_MODELS:
            raise ValidationError("BadModel", f"Unknown compensation model '{self.compensation_model}'")
        if self.feedback not in FEEDBACK_SOURCES:
            raise ValidationError("BadFeedback", f"Unknown feedback source '{self.feedback}'", f"one of {FEEDBACK_SOURCES}")
        if self.n_ctrl < 0:
            raise ValidationError("BadOrder", "Compensation order must be non-negative", f"n_ctrl={self.n_ctrl}")
        gains_p = np.atleast_1d(self.kp if self.kp_vector is None else self.kp_vector)
        gains_d = np.atleast_1d(self.kd if self.kd_vector is None else self.kd_vector)
        if np.any(gains_p <= 0) or np.any(gains_d <= 0):
            raise ValidationError("BadGains", "Gains must be positive", f"kp={gains_p.tolist()}, kd={gains_d.tolist()}")
        if self.control_rate <= 0 or self.observer_rate <= 0:
            raise ValidationError("BadRate", "Rates must be positive")
        if self.control_rate < self.observer_rate:
            raise ValidationError("BadRate", "Control rate must not be below the observer rate", f"{self.control_rate} < {self.observer_rate}")

    @property
    def model_order(self) -> int:
        """Modes per link of the compensation model."""
        return 0 if COMPENSATION_MODELS[self.compensation_model] is None else self.n_ctrl

    def make_basis(self, params: MechanismParams) -> ModalBasis:
        bc = COMPENSATION_MODELS[self.compensation_model]
        return ModalBasis.create(bc or BoundaryCondition.CLAMPED_FREE, params.l1, self.model_order)

    def gains(self, size: int):
        """Position and velocity gain vectors of length ``size``."""
        kp = np.full(size, float(self.kp)) if self.kp_vector is None else np.asarray(self.kp_vector, dtype=float)
        kd = np.full(size, float(self.kd)) if self.kd_vector is None else np.asarray(self.kd_vector, dtype=float)
        if kp.size != size or kd.size != size:
            raise ValidationError("DimensionMismatch", "Gain vectors must match the coordinate count", f"expected {size}")
        return kp, kd

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "ControlLawConfig":
        valid_fields = {k: v for k, v in config_dict.items() if k in cls.__dataclass_fields__}
        return cls(**valid_fields)

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if not k.startswith("_")}


@dataclass(frozen=True, eq=False)
class TrackingError:
    """``e = q_d - q_hat`` and its rate, with desired modal coordinates zero."""

    e: np.ndarray
    e_dot: np.ndarray

    @property
    def n(self) -> int:
        return (self.e.size - 3) // 3

    @property
    def e_e(self) -> np.ndarray:
        return self.e[:3]

    @property
    def e_f(self) -> np.ndarray:
        return self.e[3:]

    @property
    def e_dot_e(self) -> np.ndarray:
        return self.e_dot[:3]

    @property
    def e_dot_f(self) -> np.ndarray:
        return self.e_dot[3:]

    @classmethod
    def from_estimate(cls, pose_desired, rate_desired, q_hat, q_hat_dot) -> "TrackingError":
        """Error of an estimate ``[q_e; q_f]`` against the desired pose and rate."""
        q_hat = np.asarray(q_hat, dtype=float)
        q_hat_dot = np.asarray(q_hat_dot, dtype=float)
        q_desired = np.zeros_like(q_hat)
        q_dot_desired = np.zeros_like(q_hat_dot)
        q_desired[:3] = pose_desired
        q_dot_desired[:3] = rate_desired
        return cls(q_desired - q_hat, q_dot_desired - q_hat_dot)
