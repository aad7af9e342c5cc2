"""Episode log schema and the metrics computed from it."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

POSE_AXES = ("x", "y", "theta")


def log_columns(n_plant: int) -> List[str]:
    """Columns of the per-tick episode log for a plant with ``n_plant`` modes per link.

    ``t``; desired ``*_d``, observed ``*_hat`` and true pose; tip deflections ``w1..w3``; plant
    modal coordinates ``qf{link}_{mode}``; torques ``tau1..tau3``; joint rates ``qa_dot1..3``; ``V``.
    """
    columns = ["t"]
    columns += [f"{axis}_d" for axis in POSE_AXES]
    columns += [f"{axis}_hat" for axis in POSE_AXES]
    columns += list(POSE_AXES)
    columns += [f"w{i}" for i in range(1, 4)]
    columns += [f"qf{i}_{j}" for i in range(1, 4) for j in range(1, n_plant + 1)]
    columns += [f"tau{i}" for i in range(1, 4)]
    columns += [f"qa_dot{i}" for i in range(1, 4)]
    columns.append("V")
    return columns


def _window_mask(t: np.ndarray, windows: Sequence[Tuple[float, float]]) -> np.ndarray:
    mask = np.zeros(t.shape, dtype=bool)
    for start, end in windows:
        mask |= (t >= start) & (t < end)
    return mask


@dataclass
class EpisodeMetrics:
    """Summary numbers of one episode.

    Attributes:
        mae: Tracking MAE per axis (x, y, theta) keyed by window name.
        position_mae: Mean Euclidean position error (m) keyed by window name.
        deformation_rms: Tip-deflection RMS per link over the dwell windows (m).
        torque_peak: Largest absolute torque per joint (N m).
        energy: ``int |tau_i q_a_dot_i| dt`` per joint (J).
        lyapunov_final: Last logged V.
        duration: Simulated time covered by the log (s).

    Windows without samples report NaN rather than zero.
    """

    mae: Dict[str, np.ndarray] = field(default_factory=dict)
    position_mae: Dict[str, float] = field(default_factory=dict)
    deformation_rms: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque_peak: np.ndarray = field(default_factory=lambda: np.zeros(3))
    energy: np.ndarray = field(default_factory=lambda: np.zeros(3))
    lyapunov_final: float = 0.0
    duration: float = 0.0

    @property
    def energy_total(self) -> float:
        return float(np.sum(self.energy))


def actuator_energy(log: pd.DataFrame) -> np.ndarray:
    """Trapezoidal ``int |tau_i q_a_dot_i| dt`` per joint from the log."""
    if len(log) < 2:
        return np.zeros(3)
    t = log["t"].to_numpy()
    return np.array([trapezoid(np.abs(log[f"tau{i}"].to_numpy() * log[f"qa_dot{i}"].to_numpy()), t) for i in range(1, 4)])


def compute_metrics(log: pd.DataFrame, windows: Dict[str, List[Tuple[float, float]]]) -> EpisodeMetrics:
    """Metrics of an episode log.

    Parameters:
        log: Episode log with the columns of :func:`log_columns`.
        windows: Named lists of ``(start, end)`` windows; ``"dwell"`` drives the deformation RMS.

    Returns:
        EpisodeMetrics: MAE per window, deformation RMS, torque peaks and energy.
    """
    metrics = EpisodeMetrics()
    if "dwell" in windows:
        metrics.deformation_rms = np.full(3, np.nan)
    if log.empty:
        for name in ("all", *windows):
            metrics.mae[name] = np.full(3, np.nan)
            metrics.position_mae[name] = float("nan")
        return metrics
    t = log["t"].to_numpy()
    errors = np.column_stack([log[f"{axis}_d"].to_numpy() - log[axis].to_numpy() for axis in POSE_AXES])
    deflections = log[["w1", "w2", "w3"]].to_numpy()
    masks = {"all": np.ones(t.shape, dtype=bool)}
    masks.update({name: _window_mask(t, spans) for name, spans in windows.items()})
    for name, mask in masks.items():
        if np.any(mask):
            metrics.mae[name] = np.mean(np.abs(errors[mask]), axis=0)
            metrics.position_mae[name] = float(np.mean(np.hypot(errors[mask, 0], errors[mask, 1])))
        else:
            # No samples: NaN so that comparisons against it fail.
            metrics.mae[name] = np.full(3, np.nan)
            metrics.position_mae[name] = float("nan")
    dwell = masks.get("dwell")
    if dwell is not None and np.any(dwell):
        metrics.deformation_rms = np.sqrt(np.mean(deflections[dwell] ** 2, axis=0))
    metrics.torque_peak = np.max(np.abs(log[["tau1", "tau2", "tau3"]].to_numpy()), axis=0)
    metrics.energy = actuator_energy(log)
    metrics.lyapunov_final = float(log["V"].iloc[-1])
    metrics.duration = float(t[-1] - t[0])
    return metrics


def window_mae_frame(name: str, metrics: EpisodeMetrics) -> pd.DataFrame:
    """Rows ``case, window, mae_x, mae_y, mae_theta, position_mae`` for one episode."""
    rows = [
        {"case": name, "window": window, **{f"mae_{axis}": value for axis, value in zip(POSE_AXES, mae)}, "position_mae": metrics.position_mae[window]}
        for window, mae in metrics.mae.items()
    ]
    return pd.DataFrame(rows, columns=["case", "window", "mae_x", "mae_y", "mae_theta", "position_mae"])


def monotone_with_tolerance(values: Sequence[float], allowed_inversions: int = 1, tolerance: float = 0.05) -> bool:
    """True if ``values`` is finite and non-decreasing apart from at most ``allowed_inversions`` drops of at most ``tolerance`` relative."""
    if not np.all(np.isfinite(values)):
        return False
    inversions = 0
    for previous, current in zip(values[:-1], values[1:]):
        if current < previous:
            if previous > 0 and (previous - current) / previous > tolerance:
                return False
            inversions += 1
    return inversions <= allowed_inversions


def failure_record(t: float, stage: str, error: Optional[Exception]) -> Dict[str, str]:
    return {"t": f"{t:.6f}", "stage": stage, "error": "" if error is None else str(error)}
