"""Computed-torque and joint PD control laws."""

from typing import Union

import numpy as np

from flexpm.control.control_config import TrackingError
from flexpm.dynamics.eom import EomMatrices
from flexpm.errors import SingularityError, ValidationError

Gain = Union[float, np.ndarray]


def _gain(value: Gain, size: int) -> np.ndarray:
    gain = np.asarray(value, dtype=float)
    if gain.ndim == 0:
        return np.full(size, float(gain))
    if gain.size != size:
        raise ValidationError("DimensionMismatch", "Gain vector does not match the coordinate count", f"{gain.size} != {size}")
    return gain


def _solve_transpose(matrix: np.ndarray, rhs: np.ndarray, name: str) -> np.ndarray:
    try:
        solution = np.linalg.solve(matrix.T, rhs)
    except np.linalg.LinAlgError as ex:
        raise SingularityError("SingularJacobian", f"{name} is singular") from ex
    if not np.all(np.isfinite(solution)):
        raise SingularityError("SingularJacobian", f"{name} produced a non-finite torque")
    return solution


def computed_torque_full(
    eom: EomMatrices,
    error: TrackingError,
    q_hat,
    q_hat_dot,
    q_ddot_desired,
    kp: Gain,
    kd: Gain,
) -> np.ndarray:
    """Torque of the fully actuated law ``J^-T [M (q_dd_d + Kp e + Kd e_dot) + (C + D) q_dot + K q]``.

    With an exact model and exact state the closed loop obeys ``e_dd + Kd e_dot + Kp e = 0``.

    Parameters:
        eom: Model matrices at the estimated state.
        error: Tracking error over all coordinates.
        q_hat: Estimated coordinates (3+3n).
        q_hat_dot: Estimated rates.
        q_ddot_desired: Desired accelerations (3+3n); modal entries are normally zero.
        kp: Scalar or per-coordinate position gain.
        kd: Scalar or per-coordinate velocity gain.

    Returns:
        numpy.ndarray: ``[tau_a; tau_f]`` of length 3+3n.

    Raises:
        SingularityError: If J^T cannot be inverted.
    """
    size = eom.M_hat.shape[0]
    kp, kd = _gain(kp, size), _gain(kd, size)
    command = np.asarray(q_ddot_desired, dtype=float) + kp * error.e + kd * error.e_dot
    rhs = eom.M_hat @ command + (eom.C_hat + eom.D_hat) @ np.asarray(q_hat_dot, dtype=float) + eom.K_hat @ np.asarray(q_hat, dtype=float)
    return _solve_transpose(eom.jacobians.J, rhs, "J")


def computed_torque_actuated(
    eom: EomMatrices,
    error: TrackingError,
    q_hat_dot,
    q_ddot_e_desired,
    kp: Gain,
    kd: Gain,
    modal_coriolis: bool = True,
) -> np.ndarray:
    """Actuated torques of the partitioned law with no modal input.

    ``tau_a = J_ax^-T [M_rr q_dd_e + M_rr (Kp e_e + Kd e_dot_e) + M_rf (Kp e_f + Kd e_dot_f) + C_rr q_dot_e + C_rf q_dot_f]``

    Without ``modal_coriolis`` the ``C_rf q_dot_f`` term is left out. Inverting the pose rows
    including it feeds the modal rates straight into the actuated torque, and with the low
    velocity gain of the reference loop the modal zero dynamics then grow instead of ringing down.

    Parameters:
        eom: Model matrices at the estimated state.
        error: Tracking error over all coordinates.
        q_hat_dot: Estimated rates ``[q_e_dot; q_f_dot]``.
        q_ddot_e_desired: Desired pose acceleration (3).
        kp: Scalar or per-coordinate position gain.
        kd: Scalar or per-coordinate velocity gain.
        modal_coriolis: Whether to compensate ``C_rf q_dot_f``.

    Returns:
        numpy.ndarray: ``tau_a`` (3).

    Raises:
        SingularityError: If J_ax^T cannot be inverted.
    """
    size = eom.M_hat.shape[0]
    kp, kd = _gain(kp, size), _gain(kd, size)
    q_hat_dot = np.asarray(q_hat_dot, dtype=float)
    feedback = kp * error.e + kd * error.e_dot
    rhs = (
        eom.M_rr @ np.asarray(q_ddot_e_desired, dtype=float)
        + eom.M_rr @ feedback[:3]
        + eom.M_rf @ feedback[3:]
        + eom.C_rr @ q_hat_dot[:3]
    )
    if modal_coriolis:
        rhs = rhs + eom.C_rf @ q_hat_dot[3:]
    return _solve_transpose(eom.jacobians.J_ax, rhs, "J_ax")


def joint_pd(q_a_desired, q_a, q_a_dot, kp: Gain, kd: Gain) -> np.ndarray:
    """Decoupled joint PD ``Kp (q_a_d - q_a) - Kd q_a_dot``."""
    q_a = np.asarray(q_a, dtype=float)
    return _gain(kp, 3) * (np.asarray(q_a_desired, dtype=float) - q_a) - _gain(kd, 3) * np.asarray(q_a_dot, dtype=float)
