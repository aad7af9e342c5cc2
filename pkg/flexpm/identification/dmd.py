"""Exact dynamic mode decomposition of deformation snapshots."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from flexpm.errors import RankError, ValidationError
from flexpm.identification.snapshots import SnapshotMatrix

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class DmdResult:
    """Outcome of an exact DMD.

    Attributes:
        rank: Retained SVD rank.
        eigenvalues: Discrete-time eigenvalues, sorted by amplitude.
        modes: Spatial parts of the DMD modes, one column per eigenvalue.
        amplitudes: Time-averaged contribution of each mode to the data (m).
        frequencies: Oscillation frequency of each mode (Hz).
        growth_rates: Continuous-time growth rate of each mode (1/s).
        dominant_mode: Real, max-abs-normalized shape of the largest mode, tip sample positive.
        operator: Best-fit linear map between the (delay-embedded) snapshot matrices.
        residual: ``||Y' - A Y||_F / ||Y'||_F``.
        singular_values: Singular values of Y.
        dt: Snapshot interval (s).
        delays: Delay-embedding depth.
    """

    rank: int
    eigenvalues: np.ndarray
    modes: np.ndarray
    amplitudes: np.ndarray
    frequencies: np.ndarray
    growth_rates: np.ndarray
    dominant_mode: np.ndarray
    operator: np.ndarray
    residual: float
    singular_values: np.ndarray
    dt: float
    delays: int

    def to_frame(self) -> pd.DataFrame:
        """One row per mode: ``mode, amplitude, frequency_hz, growth_rate, eig_real, eig_imag``."""
        return pd.DataFrame(
            {
                "mode": np.arange(1, self.eigenvalues.size + 1),
                "amplitude": self.amplitudes,
                "frequency_hz": self.frequencies,
                "growth_rate": self.growth_rates,
                "eig_real": self.eigenvalues.real,
                "eig_imag": self.eigenvalues.imag,
            }
        )


def delay_embed(data: np.ndarray, delays: int) -> np.ndarray:
    """Stack ``delays`` time-shifted copies of the snapshots into a Hankel matrix."""
    points, m = data.shape
    columns = m - delays + 1
    if columns < 2:
        raise ValidationError("TooFewSnapshots", "Not enough snapshots for the delay embedding", f"{m} snapshots, {delays} delays")
    return np.vstack([data[:, k : k + columns] for k in range(delays)])


def real_shape(mode: np.ndarray) -> np.ndarray:
    """Rotate a complex mode by the phase of its largest entry and keep the real part."""
    pivot = mode[np.argmax(np.abs(mode))]
    if pivot == 0:
        return np.zeros(mode.shape)
    return np.real(mode * np.exp(-1j * np.angle(pivot)))


def normalize_shape(shape: np.ndarray) -> np.ndarray:
    """Scale to max-abs 1 with the last (tip) sample positive, or the largest sample if the tip is zero."""
    peak = np.max(np.abs(shape))
    if peak == 0:
        return shape.copy()
    shape = shape / peak
    reference = shape[-1] if abs(shape[-1]) > 1e-12 else shape[np.argmax(np.abs(shape))]
    return shape if reference > 0 else -shape


def dmd(snapshots: SnapshotMatrix, rank: Optional[int] = None, delays: int = 2) -> DmdResult:
    """Exact DMD with optional delay embedding.

    The snapshots are stacked ``delays`` deep so that a single standing wave still yields its
    oscillation pair. Y is truncated at ``rank`` or at singular values above ``1e-10 sigma_1``;
    modes are lifted through Y' and ranked by their least-squares contribution to the data
    averaged over all snapshots.

    Parameters:
        snapshots: Snapshot matrix.
        rank: Truncation rank, or None for the numerical rank.
        delays: Delay-embedding depth, 1 for plain exact DMD.

    Returns:
        DmdResult: Eigenvalues, spatial modes and the dominant shape.

    Raises:
        RankError: If the data are all zero or have lower rank than requested.
        ValidationError: If there are too few snapshots.
    """
    if delays < 1:
        raise ValidationError("BadDelays", "Delay embedding depth must be at least 1", f"delays={delays}")
    points = snapshots.data.shape[0]
    hankel = delay_embed(np.asarray(snapshots.data, dtype=float), delays)
    Y, Y_prime = hankel[:, :-1], hankel[:, 1:]
    U, sigma, Vh = np.linalg.svd(Y, full_matrices=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        raise RankError("DegenerateData", "Snapshot matrix is identically zero")
    numerical_rank = int(np.sum(sigma > RANK_TOLERANCE * sigma[0]))
    if rank is None:
        rank = numerical_rank
    elif rank < 1 or rank > numerical_rank:
        raise RankError("RankDeficient", f"Requested rank {rank} exceeds the numerical rank {numerical_rank}")
    if Y.shape[1] < rank + 1:
        raise ValidationError("TooFewSnapshots", "Need at least rank + 1 snapshot columns", f"rank={rank}")
    U_r, sigma_r, V_r = U[:, :rank], sigma[:rank], Vh[:rank].conj().T
    projected = Y_prime @ V_r / sigma_r
    reduced = U_r.conj().T @ projected
    eigenvalues, vectors = np.linalg.eig(reduced)
    lifted = projected @ vectors
    operator = projected @ U_r.conj().T

    coefficients = np.linalg.lstsq(lifted, Y, rcond=None)[0]
    spatial = lifted[:points]
    amplitudes = np.linalg.norm(spatial, axis=0) * np.sqrt(np.mean(np.abs(coefficients) ** 2, axis=1))
    order = np.argsort(-amplitudes, kind="stable")
    eigenvalues, spatial, amplitudes = eigenvalues[order], spatial[:, order], amplitudes[order]
    with np.errstate(divide="ignore"):
        logs = np.log(eigenvalues.astype(complex))
    frequencies = np.abs(logs.imag) / (2.0 * np.pi * snapshots.dt)
    growth_rates = logs.real / snapshots.dt
    dominant = normalize_shape(real_shape(spatial[:, 0]))
    residual = float(np.linalg.norm(Y_prime - operator @ Y) / np.linalg.norm(Y_prime))
    logger.debug(f"DMD rank {rank}, dominant frequency {frequencies[0]:.3f} Hz, residual {residual:.2e}")
    return DmdResult(
        rank=rank,
        eigenvalues=eigenvalues,
        modes=spatial,
        amplitudes=amplitudes,
        frequencies=frequencies,
        growth_rates=growth_rates,
        dominant_mode=dominant,
        operator=operator,
        residual=residual,
        singular_values=sigma,
        dt=snapshots.dt,
        delays=delays,
    )
