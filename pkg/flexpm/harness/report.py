"""CSV and text reports of closed-loop episodes."""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from flexpm.core.modal_basis import ModalBasis, deformation_profile
from flexpm.errors import ReportError
from flexpm.harness.episode import EpisodeResult
from flexpm.harness.metrics import POSE_AXES, window_mae_frame

logger = logging.getLogger(__name__)

# Column schemas of the emitted files, in order.
SCHEMAS: Dict[str, List[str]] = {
    "tracking.csv": ["case", "t", "x_d", "y_d", "theta_d", "x", "y", "theta", "x_hat", "y_hat", "theta_hat", "e_x", "e_y", "e_theta"],
    "tip_deflection.csv": ["case", "t", "w1", "w2", "w3"],
    "deformation_profile.csv": ["case", "t", "x_link", "w"],
    "torque.csv": ["case", "t", "tau1", "tau2", "tau3"],
    "torque_summary.csv": ["case", "joint", "torque_peak", "energy"],
    "window_mae.csv": ["case", "window", "mae_x", "mae_y", "mae_theta", "position_mae"],
    "deformation_rms.csv": ["case", "link", "deformation_rms"],
}
SUMMARY_FILE = "summary.txt"


def _tracking_frame(result: EpisodeResult) -> pd.DataFrame:
    log = result.log
    frame = log[["t", "x_d", "y_d", "theta_d", "x", "y", "theta", "x_hat", "y_hat", "theta_hat"]].copy()
    for axis in POSE_AXES:
        frame[f"e_{axis}"] = log[f"{axis}_d"] - log[axis]
    frame.insert(0, "case", result.name)
    return frame


def _with_case(result: EpisodeResult, columns: List[str]) -> pd.DataFrame:
    frame = result.log[columns].copy()
    frame.insert(0, "case", result.name)
    return frame


def profile_frame(
    result: EpisodeResult, basis: ModalBasis, window: Tuple[float, float], points: int = 21, stride: int = 10, link: int = 1
) -> pd.DataFrame:
    """Whole-link deflection of ``link`` (1-based) at ``points`` abscissae, every ``stride`` log rows in ``window``.

    The modal coordinates are read from the ``qf{link}_{mode}`` columns of the log.
    """
    log = result.log
    columns = [f"qf{link}_{j}" for j in range(1, basis.n + 1)]
    if log.empty or basis.n == 0 or any(c not in log.columns for c in columns):
        return pd.DataFrame(columns=SCHEMAS["deformation_profile.csv"])
    rows = log[(log["t"] >= window[0]) & (log["t"] <= window[1])].iloc[::stride]
    xs = np.linspace(0.0, basis.length, points)
    blocks = []
    for t, modes in zip(rows["t"].to_numpy(), rows[columns].to_numpy()):
        blocks.append(pd.DataFrame({"case": result.name, "t": t, "x_link": xs, "w": deformation_profile(basis, modes, xs)}))
    if not blocks:
        return pd.DataFrame(columns=SCHEMAS["deformation_profile.csv"])
    return pd.concat(blocks, ignore_index=True)


def _summary_frames(result: EpisodeResult) -> Tuple[pd.DataFrame, pd.DataFrame]:
    metrics = result.metrics
    torque = pd.DataFrame(
        {"case": result.name, "joint": [1, 2, 3], "torque_peak": metrics.torque_peak, "energy": metrics.energy}
    )
    deformation = pd.DataFrame({"case": result.name, "link": [1, 2, 3], "deformation_rms": metrics.deformation_rms})
    return torque, deformation


def summary_table(results: Sequence[EpisodeResult]) -> pd.DataFrame:
    """One row per episode: dwell MAE, dwell deformation RMS, torque peak, energy and status."""
    rows = []
    for result in results:
        metrics = result.metrics
        dwell = metrics.mae.get("dwell", np.full(3, np.nan))
        rows.append(
            {
                "case": result.name,
                "dwell_mae_x": dwell[0],
                "dwell_mae_y": dwell[1],
                "dwell_mae_theta": dwell[2],
                "dwell_position_mae": metrics.position_mae.get("dwell", float("nan")),
                "deformation_rms_max": float(np.max(metrics.deformation_rms)),
                "torque_peak_max": float(np.max(metrics.torque_peak)),
                "energy_total": metrics.energy_total,
                "status": "ok" if result.completed else f"failed at t={result.failure['t']} ({result.failure['stage']})",
            }
        )
    return pd.DataFrame(rows)


def _concat(frames: List[pd.DataFrame], name: str) -> pd.DataFrame:
    frames = [f for f in frames if not f.empty]
    if not frames:
        return pd.DataFrame(columns=SCHEMAS[name])
    return pd.concat(frames, ignore_index=True)[SCHEMAS[name]]


def emit_report(
    results: Sequence[EpisodeResult],
    out_dir: Union[str, Path],
    basis: Optional[ModalBasis] = None,
    profile_window: Tuple[float, float] = (4.0, 5.0),
    profile_points: int = 21,
    profile_stride: int = 10,
) -> Dict[str, Path]:
    """Write the report CSV files and the summary table of a set of episodes.

    Parameters:
        results: Episodes to report, in output order.
        out_dir: Output directory, created if needed.
        basis: Plant modal basis for the whole-link profile; without it the profile file has only a header.
        profile_window: ``(start, end)`` of the whole-link profile (s).
        profile_points: Abscissae per profile.
        profile_stride: Log rows between profiles.

    Returns:
        dict: File name to written path.

    Raises:
        ReportError: If a file cannot be written.
    """
    out_dir = Path(out_dir)
    tracking, deformation, profiles, torque, torque_summary, mae, rms = [], [], [], [], [], [], []
    for result in results:
        tracking.append(_tracking_frame(result))
        deformation.append(_with_case(result, ["t", "w1", "w2", "w3"]))
        torque.append(_with_case(result, ["t", "tau1", "tau2", "tau3"]))
        if basis is not None:
            profiles.append(profile_frame(result, basis, profile_window, profile_points, profile_stride))
        summary, link_rms = _summary_frames(result)
        torque_summary.append(summary)
        rms.append(link_rms)
        mae.append(window_mae_frame(result.name, result.metrics))
    frames = {
        "tracking.csv": _concat(tracking, "tracking.csv"),
        "tip_deflection.csv": _concat(deformation, "tip_deflection.csv"),
        "deformation_profile.csv": _concat(profiles, "deformation_profile.csv"),
        "torque.csv": _concat(torque, "torque.csv"),
        "torque_summary.csv": _concat(torque_summary, "torque_summary.csv"),
        "window_mae.csv": _concat(mae, "window_mae.csv"),
        "deformation_rms.csv": _concat(rms, "deformation_rms.csv"),
    }
    written = {}
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, frame in frames.items():
            path = out_dir / name
            frame.to_csv(path, index=False)
            written[name] = path
        table = summary_table(results)
        text = table.to_string(index=False) if not table.empty else "no episodes"
        summary_path = out_dir / SUMMARY_FILE
        summary_path.write_text(text + "\n", encoding="utf-8")
        written[SUMMARY_FILE] = summary_path
    except OSError as ex:
        raise ReportError("WriteFailed", "Could not write report", str(out_dir)) from ex
    logger.info(f"Report written to {out_dir}:\n{text}")
    return written
