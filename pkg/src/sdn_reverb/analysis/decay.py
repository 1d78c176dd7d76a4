"""Schroeder backward integration and reverberation-time fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from ..rir import ImpulseResponse

EDC_FLOOR_DB = -300.0
OCTAVE_BANDS = (125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0)


class InsufficientDecayError(ValueError):
    pass


@dataclass
class DecayAnalysis:
    edc: np.ndarray
    sample_rate: float
    t60: float
    fit_range_db: tuple[float, float]
    residual: float

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.edc.size) / self.sample_rate


def _samples(rir) -> tuple[np.ndarray, float | None]:
    if isinstance(rir, ImpulseResponse):
        return rir.samples, rir.sample_rate
    return np.asarray(rir, dtype=float), None


def schroeder_edc(rir) -> np.ndarray:
    """Energy decay curve in dB, normalised to 0 dB at the first sample.

    Samples past the last non-zero value are clamped to ``EDC_FLOOR_DB``.
    """
    h, _ = _samples(rir)
    if h.size == 0:
        raise ValueError("empty impulse response")
    energy = np.cumsum((h * h)[::-1])[::-1]
    if energy[0] <= 0:
        raise ValueError("impulse response is all zeros")
    with np.errstate(divide="ignore"):
        edc = 10.0 * np.log10(energy / energy[0])
    return np.maximum(edc, EDC_FLOOR_DB)


def t60_from_edc(edc, sample_rate: float, fit_hi: float = -5.0, fit_lo: float = -35.0) -> DecayAnalysis:
    """Fit a line to the EDC between its first crossings of ``fit_hi`` and
    ``fit_lo`` dB and extrapolate to 60 dB of decay."""
    edc = np.asarray(edc, dtype=float)
    if fit_lo >= fit_hi:
        raise ValueError("fit_lo must be below fit_hi")
    below_lo = np.flatnonzero(edc <= fit_lo)
    if below_lo.size == 0:
        raise InsufficientDecayError(f"insufficient decay: EDC never reaches {fit_lo} dB")
    i_hi = int(np.flatnonzero(edc <= fit_hi)[0])
    i_lo = int(below_lo[0])
    if i_lo - i_hi < 1:
        i_lo = i_hi + 1
    t = np.arange(i_hi, i_lo + 1) / sample_rate
    seg = edc[i_hi : i_lo + 1]
    slope, intercept = np.polyfit(t, seg, 1)
    if slope >= 0:
        raise InsufficientDecayError("EDC does not decay over the fit range")
    resid = float(np.sqrt(np.mean((seg - (slope * t + intercept)) ** 2)))
    return DecayAnalysis(edc, sample_rate, -60.0 / slope, (fit_hi, fit_lo), resid)


def measure_t60(rir: ImpulseResponse, fit_hi: float = -5.0, fit_lo: float = -35.0) -> float:
    return t60_from_edc(schroeder_edc(rir), rir.sample_rate, fit_hi, fit_lo).t60


@dataclass
class BandDecay:
    band_hz: float
    t60: float
    error: str = ""


def octave_filter(center: float, sample_rate: float, order: int = 2) -> np.ndarray:
    """Butterworth octave band-pass (``2*order`` poles) as second-order sections."""
    nyq = sample_rate / 2
    if not 0 < center < nyq:
        raise ValueError(f"band {center} Hz outside (0, {nyq}) Hz")
    lo, hi = center / np.sqrt(2), center * np.sqrt(2)
    if hi >= nyq:
        return signal.butter(2 * order, lo, "highpass", fs=sample_rate, output="sos")
    return signal.butter(order, [lo, hi], "bandpass", fs=sample_rate, output="sos")


def octave_band_t60(rir: ImpulseResponse, bands=OCTAVE_BANDS[:-1], fit_hi=-5.0, fit_lo=-35.0) -> list[BandDecay]:
    """T60 per octave band; bands that do not decay far enough carry an error."""
    for fc in bands:
        if not 0 < fc < rir.sample_rate / 2:
            raise ValueError(f"band {fc} Hz outside (0, {rir.sample_rate / 2}) Hz")
    out = []
    for fc in bands:
        y = signal.sosfilt(octave_filter(fc, rir.sample_rate), rir.samples)
        try:
            out.append(BandDecay(fc, t60_from_edc(schroeder_edc(y), rir.sample_rate, fit_hi, fit_lo).t60))
        except (InsufficientDecayError, ValueError) as exc:
            out.append(BandDecay(fc, float("nan"), str(exc)))
    return out
