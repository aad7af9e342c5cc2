"""Elementary frames and vectors shared by the kinematic and dynamic models."""

import math
from typing import Tuple

import numpy as np

from flexpm.core.mechanism_config import MechanismParams, PlatformPose
from flexpm.errors import ValidationError


def unit(angle: float) -> np.ndarray:
    """Unit vector at ``angle`` from the base x axis."""
    angle = float(angle)
    return np.array((math.cos(angle), math.sin(angle)))


def perp(vector: np.ndarray) -> np.ndarray:
    """Rotate a planar vector (or an array of them, last axis) by +90 degrees."""
    vector = np.asarray(vector)
    if vector.shape == (2,):
        return np.array((-vector[1], vector[0]))
    return np.stack((-vector[..., 1], vector[..., 0]), axis=-1)


def branch_unit_vectors(params: MechanismParams, q_a_i: float, branch: int) -> Tuple[np.ndarray, np.ndarray]:
    """Unit vectors along and across the undeformed actuation link of a branch.

    Parameters:
        params: Mechanism parameters.
        q_a_i: Actuated joint angle of the branch (rad).
        branch: Branch index, 1 to 3.

    Returns:
        tuple: ``(u_i, v_i)`` where ``u_i`` points from A_i along the link and ``v_i`` is ``u_i``
        rotated by +90 degrees.

    Raises:
        ValidationError: If ``branch`` is not 1, 2 or 3.
    """
    if branch not in (1, 2, 3):
        raise ValidationError("BadBranch", "Branch index must be 1, 2 or 3", f"branch={branch}")
    angle = params.alpha[branch - 1] + q_a_i
    u = unit(angle)
    return u, perp(u)


def platform_corner_positions(params: MechanismParams, pose: PlatformPose) -> np.ndarray:
    """Positions of the platform joints C_i for a platform pose.

    Parameters:
        params: Mechanism parameters.
        pose: Platform pose.

    Returns:
        numpy.ndarray: A (3, 2) array with one corner per row.
    """
    angles = pose.theta + np.asarray(params.alpha)
    return np.column_stack((pose.x + params.r * np.cos(angles), pose.y + params.r * np.sin(angles)))


def platform_corner_velocities(params: MechanismParams, pose: PlatformPose, pose_rate) -> np.ndarray:
    """Velocities of the platform joints C_i for a platform pose and pose rate.

    Parameters:
        params: Mechanism parameters.
        pose: Platform pose.
        pose_rate: Sequence ``(x_dot, y_dot, theta_dot)``.

    Returns:
        numpy.ndarray: A (3, 2) array with one corner velocity per row.
    """
    x_dot, y_dot, theta_dot = (float(v) for v in pose_rate)
    angles = pose.theta + np.asarray(params.alpha)
    return np.column_stack(
        (x_dot - params.r * np.sin(angles) * theta_dot, y_dot + params.r * np.cos(angles) * theta_dot)
    )
