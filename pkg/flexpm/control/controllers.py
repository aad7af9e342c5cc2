"""Stateful controllers wrapping the control laws with a fail-safe."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from flexpm.control.computed_torque import computed_torque_actuated, computed_torque_full, joint_pd
from flexpm.control.control_config import ControlLawConfig, TrackingError
from flexpm.control.lyapunov import lyapunov_value
from flexpm.core.kinematics import DEFAULT_KINEMATICS, KinematicsConfig, inverse_kinematics
from flexpm.core.mechanism_config import MechanismParams, PlatformPose
from flexpm.core.modal_basis import ModalBasis, gauss_legendre
from flexpm.core.state import GeneralizedState
from flexpm.dynamics.eom import assemble_eom
from flexpm.errors import IntegrityError, NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DesiredSignal:
    """Desired pose, rate and acceleration at one instant."""

    pose: np.ndarray
    rate: np.ndarray
    acceleration: np.ndarray


@dataclass(frozen=True, eq=False)
class Estimate:
    """Fed-back state: estimated pose and measured modal coordinates with their rates."""

    q_e: np.ndarray
    q_e_dot: np.ndarray
    q_f: np.ndarray
    q_f_dot: np.ndarray

    @property
    def q(self) -> np.ndarray:
        return np.concatenate((self.q_e, self.q_f))

    @property
    def q_dot(self) -> np.ndarray:
        return np.concatenate((self.q_e_dot, self.q_f_dot))


@dataclass(frozen=True, eq=False)
class JointReading:
    """Encoder angles and rates of the actuated joints."""

    q_a: np.ndarray
    q_a_dot: np.ndarray


@dataclass(frozen=True, eq=False)
class ControlOutput:
    """One control tick: the commanded torque, V, and the fault that zeroed the torque if any."""

    tau: np.ndarray
    lyapunov: float
    fault: Optional[NumericalError] = None


class ModalProjector:
    """Least-squares projection of link deformation from one modal basis onto another.

    ``P = M_cc^-1 M_cp`` with ``M_cc = int phi_c phi_c^T`` and ``M_cp = int phi_c phi_p^T``;
    the projection is the identity when both bases coincide.
    """

    def __init__(self, source: ModalBasis, target: ModalBasis, nodes: int = 32):
        self.source = source
        self.target = target
        if target.n == 0 or source.n == 0:
            self.matrix = np.zeros((target.n, source.n))
            return
        xs, weights = gauss_legendre(source.length, nodes)
        phi_c = target.phi_matrix(xs)
        phi_p = source.phi_matrix(xs)
        M_cc = phi_c.T @ (weights[:, None] * phi_c)
        M_cp = phi_c.T @ (weights[:, None] * phi_p)
        self.matrix = np.linalg.solve(M_cc, M_cp)

    def project(self, q_f) -> np.ndarray:
        """Map stacked coordinates of the three links (3 n_source) to 3 n_target."""
        modes = np.asarray(q_f, dtype=float).reshape(3, self.source.n)
        return (modes @ self.matrix.T).reshape(-1)


class Controller:
    """Base class: subclasses implement :meth:`_law`; :meth:`step_control` adds the fail-safe.

    Parameters:
        params: Mechanism parameters of the controller's model.
        config: Controller settings.
        kinematics: Kinematics settings.
    """

    def __init__(self, params: MechanismParams, config: ControlLawConfig, kinematics: KinematicsConfig = DEFAULT_KINEMATICS):
        config.validate()
        self.params = params
        self.config = config
        self.kinematics = kinematics
        self.basis = config.make_basis(params)

    @property
    def n(self) -> int:
        return self.basis.n

    def step_control(self, desired: DesiredSignal, estimate: Estimate, joints: JointReading) -> ControlOutput:
        """Torque for one tick; on a numerical fault the torque is zero and the fault is returned."""
        try:
            tau, value = self._law(desired, estimate, joints)
            if not np.all(np.isfinite(tau)):
                raise IntegrityError("NonFinite", "Controller produced a non-finite torque")
        except NumericalError as ex:
            logger.warning(f"Controller fault, commanding zero torque: {ex}")
            return ControlOutput(tau=np.zeros(self.torque_size), lyapunov=float("nan"), fault=ex)
        return ControlOutput(tau=tau, lyapunov=value)

    @property
    def torque_size(self) -> int:
        return 3

    def _law(self, desired: DesiredSignal, estimate: Estimate, joints: JointReading):
        raise NotImplementedError


class ComputedTorqueController(Controller):
    """Model-based controller evaluated at the estimated state.

    Uses the partitioned actuated law unless ``full_actuation`` is set, in which case modal forces
    are commanded too.
    """

    @property
    def torque_size(self) -> int:
        return 3 + 3 * self.n if self.config.full_actuation else 3

    def _law(self, desired, estimate, joints):
        state = GeneralizedState(estimate.q_e, estimate.q_f, estimate.q_e_dot, estimate.q_f_dot)
        eom = assemble_eom(self.params, self.basis, state, self.kinematics)
        error = TrackingError.from_estimate(desired.pose, desired.rate, state.q, state.q_dot)
        kp, kd = self.config.gains(3 + 3 * self.n)
        if self.config.full_actuation:
            q_ddot = np.concatenate((desired.acceleration, np.zeros(3 * self.n)))
            tau = computed_torque_full(eom, error, state.q, state.q_dot, q_ddot, kp, kd)
        else:
            tau = computed_torque_actuated(eom, error, state.q_dot, desired.acceleration, kp, kd, self.config.modal_coriolis)
        return tau, lyapunov_value(error, kp)


class JointPDController(Controller):
    """Joint PD about the rigid inverse kinematics of the desired pose."""

    def __init__(self, params, config, kinematics=DEFAULT_KINEMATICS):
        super().__init__(params, config, kinematics)
        self.rigid = ModalBasis.create(self.basis.bc, params.l1, 0)

    def desired_joints(self, pose) -> np.ndarray:
        return inverse_kinematics(self.params, self.rigid, PlatformPose.from_array(pose), None, self.kinematics).q_a

    def _law(self, desired, estimate, joints):
        kp, kd = self.config.gains(3)
        tau = joint_pd(self.desired_joints(desired.pose), joints.q_a, joints.q_a_dot, kp, kd)
        error = TrackingError.from_estimate(desired.pose, desired.rate, estimate.q_e, estimate.q_e_dot)
        return tau, lyapunov_value(error, kp)


def make_controller(params: MechanismParams, config: ControlLawConfig, kinematics: KinematicsConfig = DEFAULT_KINEMATICS) -> Controller:
    """Controller instance for ``config.kind``."""
    if config.kind == "joint_pd":
        return JointPDController(params, config, kinematics)
    return ComputedTorqueController(params, config, kinematics)
