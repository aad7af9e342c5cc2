"""Generalized coordinates of the mechanism."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from flexpm.core.mechanism_config import PlatformPose
from flexpm.errors import ValidationError


@dataclass(frozen=True, eq=False)
class GeneralizedState:
    """Platform pose and modal coordinates with their rates, ``q = [q_e; q_f]``.

    Modal coordinates are stored link by link: ``q_f = [q_f1 (n), q_f2 (n), q_f3 (n)]``.

    Attributes:
        q_e: Platform pose ``(x, y, theta)``.
        q_f: Modal coordinates, length 3n (m).
        q_e_dot: Pose rates.
        q_f_dot: Modal rates.
        q_a: Actuated joint angles (rad), filled in by the kinematics when known.
        q_p: Passive joint angles (rad), filled in by the kinematics when known.
    """

    q_e: np.ndarray
    q_f: np.ndarray
    q_e_dot: np.ndarray
    q_f_dot: np.ndarray
    q_a: Optional[np.ndarray] = None
    q_p: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("q_e", "q_f", "q_e_dot", "q_f_dot"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        if self.q_e.size != 3 or self.q_e_dot.size != 3:
            raise ValidationError("DimensionMismatch", "Pose and pose rate must have 3 entries")
        if self.q_f.size % 3 or self.q_f.size != self.q_f_dot.size:
            raise ValidationError("DimensionMismatch", "Modal coordinates must have 3n entries", f"got {self.q_f.size}")

    @property
    def n(self) -> int:
        """Modal truncation order per link."""
        return self.q_f.size // 3

    @property
    def q(self) -> np.ndarray:
        return np.concatenate((self.q_e, self.q_f))

    @property
    def q_dot(self) -> np.ndarray:
        return np.concatenate((self.q_e_dot, self.q_f_dot))

    @property
    def pose(self) -> PlatformPose:
        return PlatformPose.from_array(self.q_e)

    def link_modes(self, link: int) -> np.ndarray:
        """Modal coordinates of link ``link`` (0-based)."""
        return self.q_f[link * self.n : (link + 1) * self.n]

    def link_mode_rates(self, link: int) -> np.ndarray:
        return self.q_f_dot[link * self.n : (link + 1) * self.n]

    @classmethod
    def from_vectors(cls, q, q_dot=None, q_a=None, q_p=None) -> "GeneralizedState":
        """Build a state from stacked vectors ``q`` and ``q_dot`` of length 3 + 3n."""
        q = np.asarray(q, dtype=float).reshape(-1)
        q_dot = np.zeros_like(q) if q_dot is None else np.asarray(q_dot, dtype=float).reshape(-1)
        if q.size != q_dot.size:
            raise ValidationError("DimensionMismatch", "q and q_dot must have the same length")
        return cls(q[:3], q[3:], q_dot[:3], q_dot[3:], q_a, q_p)

    @classmethod
    def at_rest(cls, pose: PlatformPose, n: int, q_f=None) -> "GeneralizedState":
        """A motionless state at ``pose`` with optional modal coordinates."""
        q_f = np.zeros(3 * n) if q_f is None else np.asarray(q_f, dtype=float)
        return cls(pose.as_array(), q_f, np.zeros(3), np.zeros(3 * n))
