"""Deformation snapshots of an actuation link."""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from flexpm.control.computed_torque import joint_pd
from flexpm.core.kinematics import DEFAULT_KINEMATICS, KinematicsConfig
from flexpm.core.mechanism_config import MechanismParams, PlatformPose
from flexpm.core.modal_basis import BoundaryCondition, ModalBasis
from flexpm.dynamics.plant import Plant, PlantConfig
from flexpm.errors import NumericalError, PartialDataError, ReportError, ValidationError

logger = logging.getLogger(__name__)

POST_RAMP_MODES = ("hold", "free")


@dataclass
class IdentificationConfig:
    """Settings of the mode-shape identification pipeline.

    Attributes:
        link: Actuation link whose deformation is sampled (1..3).
        sample_count: Number of uniform sampling points on [0, l1].
        dt: Snapshot interval (s).
        duration: Length of the excitation run (s).
        pose: Starting platform pose ``[x, y, theta]``.
        ramp_angle_deg: Counterclockwise rotation of the sampled link's joint (deg).
        ramp_time: Duration of the rotation (s).
        post_ramp: ``"hold"`` keeps the joint PD active after the ramp, ``"free"`` drops to zero torque.
        hold_kp: Joint PD stiffness.
        hold_kd: Joint PD damping.
        families: Boundary-condition families in the candidate library.
        library_orders: Mode orders per family.
        rank: DMD truncation rank, or None for the numerical rank.
        delays: Delay-embedding depth of the DMD.
        lam: LASSO weight, or None for the cross-validated sweep.
        lambda_count: Points of the LASSO weight grid.
        active_threshold: Coefficients below this fraction of the largest are inactive.
        ambiguity_ratio: Runner-up fraction of the top coefficient that flags ambiguity.
    """

    link: int = 1
    sample_count: int = 9
    dt: float = 1e-3
    duration: float = 20.0
    pose: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    ramp_angle_deg: float = 5.0
    ramp_time: float = 0.2
    post_ramp: str = "hold"
    hold_kp: float = 200.0
    hold_kd: float = 0.2
    families: List[str] = field(default_factory=lambda: [bc.value for bc in BoundaryCondition])
    library_orders: int = 3
    rank: Optional[int] = None
    delays: int = 2
    lam: Optional[float] = None
    lambda_count: int = 30
    active_threshold: float = 0.05
    ambiguity_ratio: float = 0.5

    def validate(self):
        if self.link not in (1, 2, 3):
            raise ValidationError("BadLink", "Link must be 1, 2 or 3", f"link={self.link}")
        if self.sample_count < 2:
            raise ValidationError("BadSamples", "At least two sampling points are needed")
        if self.dt <= 0 or self.duration <= 0 or self.ramp_time <= 0:
            raise ValidationError("BadTiming", "dt, duration and ramp_time must be positive")
        if self.post_ramp not in POST_RAMP_MODES:
            raise ValidationError("BadPostRamp", f"Unknown post-ramp mode '{self.post_ramp}'", f"one of {POST_RAMP_MODES}")
        if self.delays < 1:
            raise ValidationError("BadDelays", "Delay embedding depth must be at least 1")
        for family in self.families:
            BoundaryCondition.parse(family)

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "IdentificationConfig":
        valid_fields = {k: v for k, v in config_dict.items() if k in cls.__dataclass_fields__}
        return cls(**valid_fields)

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if not k.startswith("_")}


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    """Sampled deformation of one link, one column per time step.

    Attributes:
        data: Deflection samples, shape ``(points, m)`` (m).
        dt: Snapshot interval (s).
        sample_points: Abscissae of the samples (m).
    """

    data: np.ndarray
    dt: float
    sample_points: np.ndarray

    @property
    def Y(self) -> np.ndarray:
        return self.data[:, :-1]

    @property
    def Y_prime(self) -> np.ndarray:
        """Snapshots shifted one step ahead of :attr:`Y`."""
        return self.data[:, 1:]

    @property
    def count(self) -> int:
        return self.data.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.count) * self.dt


def sample_points(length: float, count: int = 9) -> np.ndarray:
    """Uniform abscissae on ``[0, length]`` including both ends."""
    return np.linspace(0.0, length, count)


def ramp_profile(t: float, angle: float, duration: float):
    """Cubic rotation from 0 to ``angle`` over ``duration`` with zero end rates.

    Returns:
        tuple: ``(angle, rate)`` at time ``t``.
    """
    if t >= duration:
        return angle, 0.0
    s = max(t, 0.0) / duration
    return angle * (3.0 * s**2 - 2.0 * s**3), angle * (6.0 * s - 6.0 * s**2) / duration


def collect_snapshots(
    params: MechanismParams,
    plant_config: PlantConfig,
    config: IdentificationConfig,
    kinematics: KinematicsConfig = DEFAULT_KINEMATICS,
) -> SnapshotMatrix:
    """Run the excitation maneuver on the truth plant and sample one link's deformation.

    The joint of the sampled link rotates counterclockwise by ``ramp_angle_deg`` under joint PD
    while the other joints hold their starting angles; afterwards the PD keeps holding or the
    torque drops to zero. Torque is recomputed once per snapshot interval.

    Parameters:
        params: Mechanism parameters.
        plant_config: Truth plant settings.
        config: Identification settings.
        kinematics: Kinematics settings.

    Returns:
        SnapshotMatrix: ``round(duration / dt)`` snapshots.

    Raises:
        ValidationError: If the snapshot interval is not a whole number of plant steps.
        PartialDataError: If the plant fails during the run; ``count`` holds the snapshots taken.
    """
    config.validate()
    substeps = int(round(config.dt / plant_config.dt))
    if substeps < 1 or not math.isclose(substeps * plant_config.dt, config.dt, rel_tol=1e-9):
        raise ValidationError("BadTiming", "Snapshot interval must be a multiple of the plant step", f"{config.dt} / {plant_config.dt}")
    plant = Plant.at_pose(params, plant_config, PlatformPose.from_array(config.pose), kinematics=kinematics)
    points = sample_points(params.l1, config.sample_count)
    link = config.link - 1
    q_a_start = plant.joint_angles()
    ramp = math.radians(config.ramp_angle_deg)
    count = int(round(config.duration / config.dt))
    data = np.zeros((config.sample_count, count))
    report_every = max(1, int(round(1.0 / config.dt)))
    for k in range(count):
        t = k * config.dt
        data[:, k] = plant.deflection_at(link, points)
        if k == count - 1:
            break
        offset, _ = ramp_profile(t, ramp, config.ramp_time)
        if config.post_ramp == "free" and t >= config.ramp_time:
            tau = np.zeros(3)
        else:
            desired = q_a_start.copy()
            desired[link] += offset
            tau = joint_pd(desired, plant.joint_angles(), plant.joint_rates(), config.hold_kp, config.hold_kd)
        try:
            for _ in range(substeps):
                plant.step(tau)
        except NumericalError as ex:
            raise PartialDataError("PlantFailure", f"Plant failed after {k + 1} snapshots", str(ex), count=k + 1) from ex
        if (k + 1) % report_every == 0:
            logger.info(f"Collected {k + 1}/{count} snapshots (t={plant.t:.2f} s)")
    return SnapshotMatrix(data=data, dt=config.dt, sample_points=points)


def synthetic_snapshots(
    basis: ModalBasis,
    amplitudes: Sequence[float],
    frequencies: Sequence[float],
    duration: float,
    dt: float = 1e-3,
    count: int = 9,
    phases: Optional[Sequence[float]] = None,
) -> SnapshotMatrix:
    """Standing waves ``sum_j a_j phi_j(x) sin(2 pi f_j t + p_j)`` sampled like plant data.

    Parameters:
        basis: Basis supplying the shapes; mode j uses ``basis`` column j.
        amplitudes: Amplitude per mode (m).
        frequencies: Frequency per mode (Hz).
        duration: Length of the record (s).
        dt: Snapshot interval (s).
        count: Number of sampling points.
        phases: Phase per mode (rad), zeros if None.

    Returns:
        SnapshotMatrix: The sampled signal.
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    frequencies = np.asarray(frequencies, dtype=float)
    phases = np.zeros_like(amplitudes) if phases is None else np.asarray(phases, dtype=float)
    if not amplitudes.size == frequencies.size == phases.size or amplitudes.size > basis.n:
        raise ValidationError("DimensionMismatch", "One amplitude, frequency and phase per available mode is required")
    points = sample_points(basis.length, count)
    shapes = basis.phi_matrix(points)[:, : amplitudes.size]
    times = np.arange(int(round(duration / dt))) * dt
    signals = amplitudes[:, None] * np.sin(2.0 * np.pi * frequencies[:, None] * times[None, :] + phases[:, None])
    return SnapshotMatrix(data=shapes @ signals, dt=dt, sample_points=points)


def write_snapshot_csv(snapshots: SnapshotMatrix, path: Union[str, Path]) -> Path:
    """Write snapshots as ``t, x1..xk`` rows after a ``# dt=...`` comment line.

    Raises:
        ReportError: If the file cannot be written.
    """
    path = Path(path)
    columns = [f"x{k + 1}" for k in range(snapshots.data.shape[0])]
    frame = pd.DataFrame(snapshots.data.T, columns=columns)
    frame.insert(0, "t", snapshots.times)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as handle:
            handle.write(f"# dt={snapshots.dt!r}\n")
            handle.write("# points=" + " ".join(f"{float(x)!r}" for x in snapshots.sample_points) + "\n")
            frame.to_csv(handle, index=False)
    except OSError as ex:
        raise ReportError("WriteFailed", "Could not write snapshot file", str(path)) from ex
    return path


def read_snapshot_csv(path: Union[str, Path], length: Optional[float] = None) -> SnapshotMatrix:
    """Read a file written by :func:`write_snapshot_csv`.

    Parameters:
        path: Snapshot CSV file.
        length: Link length used for the abscissae when the file has no ``# points=`` line.

    Returns:
        SnapshotMatrix: The stored snapshots.

    Raises:
        ReportError: If the file cannot be read.
        ValidationError: If the header is malformed.
    """
    path = Path(path)
    metadata = {}
    try:
        with open(path) as handle:
            for line in handle:
                if not line.startswith("#"):
                    break
                key, _, value = line[1:].strip().partition("=")
                metadata[key.strip()] = value.strip()
        frame = pd.read_csv(path, comment="#")
    except OSError as ex:
        raise ReportError("ReadFailed", "Could not read snapshot file", str(path)) from ex
    if "t" not in frame.columns:
        raise ValidationError("BadSnapshotFile", "Snapshot file has no 't' column", str(path))
    values = frame.drop(columns="t").to_numpy(dtype=float).T
    if "dt" in metadata:
        dt = float(metadata["dt"])
    elif len(frame) > 1:
        dt = float(frame["t"].iloc[1] - frame["t"].iloc[0])
    else:
        raise ValidationError("BadSnapshotFile", "Snapshot interval is unknown", str(path))
    if "points" in metadata:
        points = np.array([float(x) for x in metadata["points"].split()])
    elif length is not None:
        points = sample_points(length, values.shape[0])
    else:
        raise ValidationError("BadSnapshotFile", "Sampling points are unknown", str(path))
    return SnapshotMatrix(data=values, dt=dt, sample_points=points)
