"""Observer training data from the inverse kinematics."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
import pandas as pd

from flexpm.core.kinematics import DEFAULT_KINEMATICS, KinematicsConfig, inverse_kinematics
from flexpm.core.mechanism_config import MechanismParams, PlatformPose
from flexpm.core.modal_basis import ModalBasis
from flexpm.errors import NumericalError, ReportError, ValidationError
from flexpm.observer.network import INPUT_NAMES, OUTPUT_NAMES

logger = logging.getLogger(__name__)

MIN_SUCCESS_RATE = 0.9


@dataclass(frozen=True)
class ObserverRanges:
    """Uniform sampling ranges of the training data (m, rad)."""

    x: Tuple[float, float] = (-0.15, 0.15)
    y: Tuple[float, float] = (-0.15, 0.15)
    theta: Tuple[float, float] = (-0.2, 0.2)
    deflection: Tuple[float, float] = (-0.06, 0.06)

    def __post_init__(self):
        for name in ("x", "y", "theta", "deflection"):
            low, high = getattr(self, name)
            if not low <= high:
                raise ValidationError("BadRange", f"Range '{name}' is inverted", f"[{low}, {high}]")

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "ObserverRanges":
        valid_fields = {k: tuple(v) for k, v in config_dict.items() if k in cls.__dataclass_fields__}
        return cls(**valid_fields)

    def to_dict(self) -> Dict[str, List[float]]:
        return {name: list(getattr(self, name)) for name in ("x", "y", "theta", "deflection")}


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Observer rows: inputs ``(q_a1..3, w1..3)`` and targets ``(x, y, theta)``, SI units."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.inputs.shape[1] != len(INPUT_NAMES):
            raise ValidationError("DimensionMismatch", "Inputs must have six columns")
        if self.targets.shape != (self.inputs.shape[0], len(OUTPUT_NAMES)):
            raise ValidationError("DimensionMismatch", "Targets must have three columns and one row per input")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(np.hstack((self.inputs, self.targets)), columns=[*INPUT_NAMES, *OUTPUT_NAMES])

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "TrainingSet":
        missing = [name for name in (*INPUT_NAMES, *OUTPUT_NAMES) if name not in frame.columns]
        if missing:
            raise ValidationError("BadTrainingFile", "Training data columns missing", ", ".join(missing))
        return cls(frame[list(INPUT_NAMES)].to_numpy(dtype=float), frame[list(OUTPUT_NAMES)].to_numpy(dtype=float))

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            self.to_frame().to_csv(path, index=False, float_format="%.17g")
        except OSError as ex:
            raise ReportError("WriteFailed", "Could not write training data", str(path)) from ex
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TrainingSet":
        try:
            frame = pd.read_csv(path)
        except OSError as ex:
            raise ReportError("ReadFailed", "Could not read training data", str(path)) from ex
        return cls.from_frame(frame)


def deflection_modes(basis: ModalBasis, deflections) -> np.ndarray:
    """Modal coordinates putting each tip deflection into the first mode only."""
    if basis.n == 0:
        raise ValidationError("NoModes", "Observer data need at least one mode per link")
    q_f = np.zeros(3 * basis.n)
    tip = float(basis.tip_values()[0])
    for i, w in enumerate(deflections):
        q_f[i * basis.n] = w / tip
    return q_f


def observer_inputs(params: MechanismParams, basis: ModalBasis, pose: PlatformPose, deflections, kinematics=DEFAULT_KINEMATICS) -> np.ndarray:
    """Network input for a pose and tip deflections, from the inverse kinematics."""
    q_f = deflection_modes(basis, deflections)
    ik = inverse_kinematics(params, basis, pose, q_f, kinematics)
    return np.concatenate((ik.q_a, np.asarray(deflections, dtype=float)))


def _generate_chunk(job) -> Tuple[np.ndarray, np.ndarray, int]:
    params, basis, ranges, count, seed_sequence, kinematics = job
    rng = np.random.default_rng(seed_sequence)
    inputs = np.zeros((count, len(INPUT_NAMES)))
    targets = np.zeros((count, len(OUTPUT_NAMES)))
    accepted = attempts = 0
    while accepted < count:
        attempts += 1
        pose = np.array([rng.uniform(*ranges.x), rng.uniform(*ranges.y), rng.uniform(*ranges.theta)])
        deflections = rng.uniform(*ranges.deflection, size=3)
        try:
            inputs[accepted] = observer_inputs(params, basis, PlatformPose.from_array(pose), deflections, kinematics)
        except NumericalError:
            if attempts >= 20 and accepted < (1.0 - MIN_SUCCESS_RATE) * attempts:
                break
            continue
        targets[accepted] = pose
        accepted += 1
    return inputs[:accepted], targets[:accepted], attempts


def generate_training_set(
    params: MechanismParams,
    basis: ModalBasis,
    ranges: ObserverRanges,
    count: int,
    seed: int = 0,
    workers: int = 1,
    chunk_size: int = 1000,
    kinematics: KinematicsConfig = DEFAULT_KINEMATICS,
) -> TrainingSet:
    """Sample poses and tip deflections uniformly and label them with the inverse kinematics.

    Rows are produced in chunks, each drawing from its own child of ``SeedSequence(seed)``, so
    the result is identical for any number of workers. Rows whose inverse kinematics fails are
    redrawn.

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis; the sampled deflection sets the first-mode coordinate.
        ranges: Sampling ranges.
        count: Number of rows.
        seed: Root seed.
        workers: Processes to use; 1 runs in the calling process.
        chunk_size: Rows per chunk.
        kinematics: Kinematics settings.

    Returns:
        TrainingSet: ``count`` rows.

    Raises:
        ValidationError: If fewer than 90% of the draws are reachable.
    """
    if count < 0 or chunk_size < 1:
        raise ValidationError("BadCount", "Row count must be non-negative and chunk size positive")
    sizes = [chunk_size] * (count // chunk_size) + ([count % chunk_size] if count % chunk_size else [])
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(params, basis, ranges, size, stream, kinematics) for size, stream in zip(sizes, streams)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_generate_chunk, jobs))
    else:
        results = [_generate_chunk(job) for job in jobs]
    accepted = sum(r[0].shape[0] for r in results)
    attempts = sum(r[2] for r in results)
    if attempts and accepted / attempts < MIN_SUCCESS_RATE:
        raise ValidationError(
            "RangeRejection", "Sampling ranges leave the workspace too often", f"{accepted}/{attempts} draws reachable"
        )
    logger.info(f"Generated {accepted} observer rows from {attempts} draws")
    inputs = np.vstack([r[0] for r in results]) if results else np.zeros((0, len(INPUT_NAMES)))
    targets = np.vstack([r[1] for r in results]) if results else np.zeros((0, len(OUTPUT_NAMES)))
    return TrainingSet(inputs=inputs, targets=targets)
