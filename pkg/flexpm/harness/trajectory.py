"""Rapid-positioning trajectory: cubic moves between waypoints with dwells."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from flexpm.core.kinematics import DEFAULT_KINEMATICS, KinematicsConfig, inverse_kinematics
from flexpm.core.mechanism_config import MechanismParams, PlatformPose
from flexpm.core.modal_basis import ModalBasis
from flexpm.errors import NumericalError, ValidationError

MOVING = "moving"
DWELL = "dwell"


@dataclass
class TrajectorySpec:
    """Waypoints and phase timing of the positioning task.

    Attributes:
        waypoints: Platform positions ``[x, y]`` (m) visited in order; the orientation stays zero.
        move_time: Duration of each cubic move (s).
        dwell_time: Duration of each hold after a move (s).
        return_to_start: Append a move back to the first waypoint.
    """

    waypoints: List[List[float]] = field(
        default_factory=lambda: [[0.0, 0.0], [0.1, 0.0], [0.1, 0.1], [-0.1, 0.1], [-0.1, -0.1]]
    )
    move_time: float = 1.0
    dwell_time: float = 3.0
    return_to_start: bool = True

    def validate(self):
        if not self.waypoints:
            raise ValidationError("NoWaypoints", "A trajectory needs at least one waypoint")
        if self.move_time <= 0 or self.dwell_time < 0:
            raise ValidationError("BadTiming", "Move time must be positive and dwell time non-negative")
        for point in self.waypoints:
            if len(point) not in (2, 3):
                raise ValidationError("BadWaypoint", "Waypoints are [x, y] or [x, y, theta]", str(point))

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "TrajectorySpec":
        valid_fields = {k: v for k, v in config_dict.items() if k in cls.__dataclass_fields__}
        return cls(**valid_fields)

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if not k.startswith("_")}


@dataclass(frozen=True)
class Phase:
    kind: str
    start: float
    end: float
    origin: Tuple[float, float, float]
    target: Tuple[float, float, float]


def _pose(point) -> Tuple[float, float, float]:
    return (float(point[0]), float(point[1]), float(point[2]) if len(point) > 2 else 0.0)


class Trajectory:
    """Desired pose, rate and acceleration as functions of time.

    Parameters:
        spec: Trajectory specification.
    """

    def __init__(self, spec: TrajectorySpec):
        spec.validate()
        self.spec = spec
        poses = [_pose(p) for p in spec.waypoints]
        if spec.return_to_start and len(poses) > 1:
            poses.append(poses[0])
        self.phases: List[Phase] = []
        t = 0.0
        if len(poses) == 1:
            hold = spec.move_time + spec.dwell_time
            self.phases.append(Phase(DWELL, 0.0, hold, poses[0], poses[0]))
        for origin, target in zip(poses[:-1], poses[1:]):
            self.phases.append(Phase(MOVING, t, t + spec.move_time, origin, target))
            t += spec.move_time
            if spec.dwell_time > 0:
                self.phases.append(Phase(DWELL, t, t + spec.dwell_time, target, target))
                t += spec.dwell_time
        self.start_pose = np.array(poses[0])
        self.end_pose = np.array(poses[-1])

    @property
    def duration(self) -> float:
        return self.phases[-1].end

    def _phase(self, t: float) -> Phase:
        for phase in self.phases:
            if t < phase.end:
                return phase
        return self.phases[-1]

    def evaluate(self, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(pose, rate, acceleration)`` at time ``t``; before 0 and after the end the pose is held."""
        if t <= 0.0:
            return self.start_pose.copy(), np.zeros(3), np.zeros(3)
        if t >= self.duration:
            return self.end_pose.copy(), np.zeros(3), np.zeros(3)
        phase = self._phase(t)
        origin, target = np.array(phase.origin), np.array(phase.target)
        if phase.kind == DWELL:
            return target, np.zeros(3), np.zeros(3)
        T = phase.end - phase.start
        s = (t - phase.start) / T
        delta = target - origin
        pose = origin + delta * (3.0 * s**2 - 2.0 * s**3)
        rate = delta * (6.0 * s - 6.0 * s**2) / T
        acceleration = delta * (6.0 - 12.0 * s) / T**2
        return pose, rate, acceleration

    def windows(self, kind: str, settle_offset: float = 0.0) -> List[Tuple[float, float]]:
        """``(start, end)`` of every phase of ``kind``; dwell windows start ``settle_offset`` late."""
        offset = settle_offset if kind == DWELL else 0.0
        return [(p.start + offset, p.end) for p in self.phases if p.kind == kind and p.end > p.start + offset]


def build_trajectory(spec: TrajectorySpec, params: Optional[MechanismParams] = None, kinematics: KinematicsConfig = DEFAULT_KINEMATICS) -> Trajectory:
    """Validated trajectory of ``spec``; with ``params`` every waypoint must also be reachable.

    Raises:
        ValidationError: On a malformed specification or an unreachable waypoint.
    """
    trajectory = Trajectory(spec)
    if params is not None:
        check_workspace(trajectory, params, kinematics)
    return trajectory


def check_workspace(trajectory: Trajectory, params: MechanismParams, kinematics: KinematicsConfig = DEFAULT_KINEMATICS):
    """Reject waypoints the rigid mechanism cannot reach.

    Raises:
        ValidationError: Naming the first unreachable waypoint.
    """
    rigid = ModalBasis.create("CF", params.l1, 0)
    for phase in trajectory.phases:
        for pose in (phase.origin, phase.target):
            try:
                inverse_kinematics(params, rigid, PlatformPose.from_array(pose), None, kinematics)
            except NumericalError as ex:
                raise ValidationError("OutsideWorkspace", "Trajectory waypoint is not reachable", f"{pose}: {ex}") from ex
