"""Lyapunov diagnostics of the tracking error."""

import numpy as np

from flexpm.control.control_config import TrackingError


def lyapunov_value(error: TrackingError, kp) -> float:
    """``V = e_dot^T e_dot / 2 + e^T Kp e / 2`` with scalar or per-coordinate ``kp``."""
    kp = np.broadcast_to(np.asarray(kp, dtype=float), error.e.shape)
    return 0.5 * float(error.e_dot @ error.e_dot) + 0.5 * float(error.e @ (kp * error.e))


def lyapunov_rate(values, dt: float) -> np.ndarray:
    """Backward-difference rate of a sampled V trace; the first entry is zero."""
    values = np.asarray(values, dtype=float)
    rates = np.zeros_like(values)
    rates[1:] = np.diff(values) / dt
    return rates


def ideal_lyapunov_rate(error: TrackingError, kd) -> float:
    """``-e_dot^T Kd e_dot``, the rate V follows when ``e_dd + Kd e_dot + Kp e = 0``."""
    kd = np.broadcast_to(np.asarray(kd, dtype=float), error.e_dot.shape)
    return -float(error.e_dot @ (kd * error.e_dot))
