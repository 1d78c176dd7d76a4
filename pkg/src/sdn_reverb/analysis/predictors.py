"""Closed-form reverberation predictors for box rooms."""

from __future__ import annotations

import math

import numpy as np

SABINE_CONSTANT = 0.161


def _areas_and_alpha(room_dims, alpha):
    lx, ly, lz = map(float, room_dims)
    areas = np.array([ly * lz, ly * lz, lx * lz, lx * lz, lx * ly, lx * ly])
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), areas.shape)
    return lx * ly * lz, areas, alpha


def sabine_t60(room_dims, alpha) -> float:
    """Sabine reverberation time ``0.161 V / sum(A_i alpha_i)``.

    ``alpha`` is a scalar or one coefficient per wall in the package's wall
    order.
    """
    volume, areas, alpha = _areas_and_alpha(room_dims, alpha)
    absorption = float(areas @ alpha)
    if absorption <= 0:
        raise ValueError("Sabine's formula needs some absorption (all walls rigid)")
    return SABINE_CONSTANT * volume / absorption


def eyring_t60(room_dims, alpha) -> float:
    """Eyring reverberation time with the natural logarithm."""
    volume, areas, alpha = _areas_and_alpha(room_dims, alpha)
    mean_alpha = float(areas @ alpha / areas.sum())
    if not 0.0 < mean_alpha < 1.0:
        raise ValueError("Eyring's formula needs mean absorption in (0, 1)")
    return -SABINE_CONSTANT * volume / (areas.sum() * math.log(1.0 - mean_alpha))


def iso_min_distance(volume: float, t_est: float, c: float = 343.0) -> float:
    """ISO 3382 minimum source-microphone distance ``2 sqrt(V / (c T))``."""
    if volume <= 0 or t_est <= 0 or c <= 0:
        raise ValueError("volume, reverberation time and sound speed must be positive")
    return 2.0 * math.sqrt(volume / (c * t_est))


def sabine_t60_filter(room_dims, b, a, freqs, sample_rate: float) -> np.ndarray:
    """Sabine prediction per frequency for walls with reflection filter ``b/a``.

    Absorption is ``1 - |H(e^{jw})|^2``.
    """
    from scipy.signal import freqz

    _, h = freqz(b, a, worN=np.asarray(freqs, float), fs=sample_rate)
    alpha = 1.0 - np.abs(h) ** 2
    return np.array([sabine_t60(room_dims, al) for al in alpha])
