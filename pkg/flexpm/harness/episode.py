"""Closed-loop co-simulation of plant, observer and controller."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
import pandas as pd

from flexpm.control.control_config import ControlLawConfig
from flexpm.control.controllers import DesiredSignal, Estimate, JointReading, ModalProjector, make_controller
from flexpm.core.kinematics import DEFAULT_KINEMATICS, KinematicsConfig
from flexpm.core.mechanism_config import MechanismParams, PlatformPose
from flexpm.dynamics.plant import Plant, PlantConfig
from flexpm.errors import FlexPMError, ValidationError
from flexpm.harness.metrics import EpisodeMetrics, compute_metrics, failure_record, log_columns
from flexpm.harness.trajectory import DWELL, MOVING, Trajectory, check_workspace
from flexpm.observer.network import ObserverConfig, ObserverNet
from flexpm.observer.rate_estimator import RateEstimator

logger = logging.getLogger(__name__)


@dataclass
class EpisodeResult:
    """Log, metrics and failure record of one episode."""

    name: str
    log: pd.DataFrame
    metrics: EpisodeMetrics
    failure: Optional[Dict[str, str]] = None
    settings: Dict = field(default_factory=dict)

    @property
    def completed(self) -> bool:
        return self.failure is None


def _whole_ratio(numerator: float, denominator: float, what: str) -> int:
    ratio = numerator / denominator
    count = int(round(ratio))
    if count < 1 or not math.isclose(count, ratio, rel_tol=1e-9):
        raise ValidationError("BadRate", f"{what} must be a whole multiple", f"{numerator} / {denominator}")
    return count


def _rate_filter(cutoff: Optional[float], rate: float) -> Optional[float]:
    # Cutoffs at or above Nyquist leave the difference unfiltered.
    if cutoff is None or cutoff >= 0.5 * rate:
        return None
    return cutoff


def episode_windows(trajectory: Trajectory, settle_offset: float):
    return {MOVING: trajectory.windows(MOVING), DWELL: trajectory.windows(DWELL, settle_offset)}


def run_episode(
    params: MechanismParams,
    plant_config: PlantConfig,
    control_config: ControlLawConfig,
    trajectory: Trajectory,
    observer: Optional[ObserverNet] = None,
    observer_config: Optional[ObserverConfig] = None,
    seed: int = 0,
    kinematics: KinematicsConfig = DEFAULT_KINEMATICS,
    settle_offset: float = 0.5,
    name: str = "episode",
) -> EpisodeResult:
    """Track ``trajectory`` with the configured controller on the truth plant.

    The plant advances at its own step with the torque held between control ticks. Joint angles
    and rates are read every control tick; the pose estimate and the modal coordinates are
    sampled at the observer rate and held in between, their rates coming from backward
    differences. With ``feedback == "truth"`` the plant pose and modal rates are fed back exactly.

    Parameters:
        params: Mechanism parameters shared by plant and controller model.
        plant_config: Truth plant settings.
        control_config: Controller settings.
        trajectory: Desired motion.
        observer: Trained pose observer; required for observer feedback.
        observer_config: Observer settings (noise, rate filter, envelope margin).
        seed: Seed of the deflection noise.
        kinematics: Kinematics settings.
        settle_offset: Delay from the start of each dwell to the start of its metric window (s).
        name: Label of the episode.

    Returns:
        EpisodeResult: The log, its metrics and a failure record if the episode stopped early.

    Raises:
        ValidationError: On inconsistent rates or orders, unreachable waypoints or a missing observer.
    """
    control_config.validate()
    observer_config = observer_config or ObserverConfig()
    if plant_config.n_modes < control_config.model_order:
        raise ValidationError("OrderMismatch", "Plant order must not be below the compensation order")
    if control_config.feedback == "observer" and observer is None:
        raise ValidationError("NoObserver", "Observer feedback needs a trained observer")
    check_workspace(trajectory, params, kinematics)
    substeps = _whole_ratio(1.0 / control_config.control_rate, plant_config.dt, "Control period over plant step")
    observer_every = _whole_ratio(control_config.control_rate, control_config.observer_rate, "Control rate over observer rate")

    plant = Plant.at_pose(params, plant_config, PlatformPose.from_array(trajectory.start_pose), kinematics=kinematics)
    controller = make_controller(params, control_config, kinematics)
    projector = ModalProjector(plant.basis, controller.basis)
    n_ctrl = controller.n
    cutoff = _rate_filter(observer_config.rate_cutoff, control_config.observer_rate)
    pose_rates = RateEstimator(3, control_config.observer_rate, cutoff)
    modal_rates = RateEstimator(3 * n_ctrl, control_config.observer_rate, cutoff)
    rng = np.random.default_rng(seed)
    truth = control_config.feedback == "truth"

    ticks = int(round(trajectory.duration * control_config.control_rate))
    rows = []
    failure = None
    estimate = None
    for k in range(ticks + 1):
        t = k / control_config.control_rate
        try:
            joints = JointReading(plant.joint_angles(), plant.joint_rates())
            deflections = plant.tip_deflections()
        except FlexPMError as ex:
            logger.warning(f"{name}: joint reading failed at t={t:.4f} s: {ex}")
            failure = failure_record(t, "measurement", ex)
            break
        if k % observer_every == 0:
            q_f_ctrl = projector.project(plant.state.q_f)
            if truth:
                q_e = plant.state.q_e.copy()
                q_e_dot = plant.state.q_e_dot.copy()
                q_f_dot = projector.project(plant.state.q_f_dot)
            else:
                measured = deflections
                if observer_config.deflection_noise_std > 0:
                    measured = deflections + rng.normal(0.0, observer_config.deflection_noise_std, size=3)
                features = np.concatenate((joints.q_a, measured))
                outside = observer.outside_envelope(features, observer_config.range_margin)
                if np.any(outside):
                    logger.warning(f"{name}: observer input outside the training envelope at t={t:.3f} s")
                q_e = observer.predict(features)
                q_e_dot = pose_rates.update(q_e)
                q_f_dot = modal_rates.update(q_f_ctrl)
            estimate = Estimate(q_e=q_e, q_e_dot=q_e_dot, q_f=q_f_ctrl, q_f_dot=q_f_dot)
        pose_d, rate_d, accel_d = trajectory.evaluate(t)
        output = controller.step_control(DesiredSignal(pose_d, rate_d, accel_d), estimate, joints)
        rows.append(
            [t, *pose_d, *estimate.q_e, *plant.state.q_e, *deflections, *plant.state.q_f, *output.tau[:3], *joints.q_a_dot, output.lyapunov]
        )
        if output.fault is not None:
            failure = failure_record(t, "controller", output.fault)
            break
        if k == ticks:
            break
        tau = output.tau
        if tau.size > 3:
            tau = np.concatenate((tau[:3], (tau[3:].reshape(3, n_ctrl) @ projector.matrix).reshape(-1)))
        try:
            for _ in range(substeps):
                plant.step(tau)
        except FlexPMError as ex:
            logger.warning(f"{name}: plant failure at t={plant.t:.4f} s: {ex}")
            failure = failure_record(plant.t, "plant", ex)
            break
        if (k + 1) % int(control_config.control_rate) == 0:
            logger.info(f"{name}: t={plant.t:.1f} s of {trajectory.duration:.1f} s")
    log = pd.DataFrame(rows, columns=log_columns(plant.basis.n))
    metrics = compute_metrics(log, episode_windows(trajectory, settle_offset))
    settings = {"plant": plant_config.to_dict(), "control": control_config.to_dict(), "seed": seed}
    return EpisodeResult(name=name, log=log, metrics=metrics, failure=failure, settings=settings)
