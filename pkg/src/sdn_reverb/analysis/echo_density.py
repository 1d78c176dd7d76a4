"""Normalized echo density profile."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erfc

from ..rir import ImpulseResponse

# fraction of Gaussian samples more than one standard deviation from the mean
GAUSSIAN_OUTLIER_FRACTION = float(erfc(1 / np.sqrt(2)))


@dataclass
class NEDCurve:
    times: np.ndarray
    values: np.ndarray
    window_s: float
    hop_s: float

    def crossing_time(self, level: float) -> float:
        """First window centre where the profile reaches ``level``; NaN if never."""
        hit = np.flatnonzero(self.values >= level)
        return float(self.times[hit[0]]) if hit.size else float("nan")


def ned_profile(rir: ImpulseResponse, window_s: float = 0.020, hop_s: float = 0.005) -> NEDCurve:
    """Windowed fraction of samples beyond one local standard deviation,
    relative to the Gaussian expectation. Rectangular windows."""
    fs = rir.sample_rate
    win = int(round(window_s * fs))
    hop = max(1, int(round(hop_s * fs)))
    if win < 10:
        raise ValueError("window must span at least 10 samples")
    h = rir.samples
    if h.size < win:
        raise ValueError("impulse response shorter than one window")
    frames = sliding_window_view(h, win)[::hop]
    mu = frames.mean(axis=1, keepdims=True)
    sigma = frames.std(axis=1, keepdims=True)
    count = np.sum(np.abs(frames - mu) > sigma, axis=1)
    values = np.where(sigma[:, 0] > 0, count / win / GAUSSIAN_OUTLIER_FRACTION, 0.0)
    times = (np.arange(frames.shape[0]) * hop + (win - 1) / 2) / fs
    return NEDCurve(times, values, win / fs, hop / fs)
