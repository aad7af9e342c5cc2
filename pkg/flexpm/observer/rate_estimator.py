"""Rates of sampled signals by backward difference and optional low-pass filtering."""

from typing import Optional

import numpy as np
from scipy import signal

from flexpm.errors import ValidationError


def _first_order_lowpass(cutoff: float, rate: float):
    if not 0.0 < cutoff < 0.5 * rate:
        raise ValidationError("BadCutoff", "Cutoff must lie between 0 and the Nyquist frequency", f"{cutoff} Hz at {rate} Hz")
    return signal.butter(1, cutoff, btype="low", fs=rate)


class RateEstimator:
    """Streaming rate estimate of a vector signal sampled at a fixed rate.

    Parameters:
        size: Signal width.
        rate: Sampling rate (Hz).
        cutoff: Low-pass cutoff (Hz), or None to use the raw difference.
    """

    def __init__(self, size: int, rate: float, cutoff: Optional[float] = None):
        if rate <= 0:
            raise ValidationError("BadRate", "Sampling rate must be positive", f"{rate}")
        self.size = size
        self.interval = 1.0 / rate
        self._filter = None if cutoff is None else _first_order_lowpass(cutoff, rate)
        self.reset()

    def reset(self):
        self._previous = None
        self._state = None
        self.rate_estimate = np.zeros(self.size)

    def update(self, value) -> np.ndarray:
        """Add a sample and return the current rate estimate (zero until two samples exist)."""
        value = np.asarray(value, dtype=float).reshape(self.size)
        if self._previous is None:
            self._previous = value.copy()
            return self.rate_estimate.copy()
        raw = (value - self._previous) / self.interval
        self._previous = value.copy()
        if self._filter is None:
            self.rate_estimate = raw
        else:
            b, a = self._filter
            if self._state is None:
                self._state = np.zeros((max(len(a), len(b)) - 1, self.size))
            filtered, self._state = signal.lfilter(b, a, raw[None, :], axis=0, zi=self._state)
            self.rate_estimate = filtered[0]
        return self.rate_estimate.copy()


def estimate_rates(history, rate: float, cutoff: Optional[float] = None) -> np.ndarray:
    """Rates of a sampled history, one row per sample.

    Parameters:
        history: Samples, shape (N,) or (N, k), taken at ``rate``.
        rate: Sampling rate (Hz).
        cutoff: Low-pass cutoff (Hz), or None for the plain backward difference.

    Returns:
        numpy.ndarray: Rates with the shape of ``history``; the first row is zero.
    """
    history = np.asarray(history, dtype=float)
    flat = history.reshape(history.shape[0], -1)
    rates = np.zeros_like(flat)
    if flat.shape[0] >= 2:
        rates[1:] = np.diff(flat, axis=0) * rate
        if cutoff is not None:
            b, a = _first_order_lowpass(cutoff, rate)
            rates[1:] = signal.lfilter(b, a, rates[1:], axis=0)
    return rates.reshape(history.shape)
