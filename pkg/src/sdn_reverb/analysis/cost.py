"""Operation-count and memory estimates for the network and its competitors.

Additions and multiplications count the same. All rates are in operations
per second at sample rate ``fs``.
"""

from __future__ import annotations

import math

FEET = 0.3048


def sdn_flops(K: int = 5, P: int = 1, fs: float = 44100.0) -> float:
    """``P`` is the per-sample cost of one wall filter."""
    return fs * (2 * K**3 + (P + 2) * K**2 + K + 1)


def fdn_flops(Q: int = 12, P: int = 1, fs: float = 44100.0) -> float:
    return fs * (2 * Q**2 + (P + 3) * Q + 1)


def ism_flops(room_dims, t60: float, c: float = 343.0) -> float:
    """25 operations per image source inside a sphere of radius ``c * t60``."""
    lx, ly, lz = room_dims
    return 25 * math.ceil(4 / 3 * math.pi * (t60 * c) ** 3 / (lx * ly * lz))


def overlap_add_fft_size(frame_rate: float, t60: float, fs: float = 44100.0) -> int:
    need = math.ceil(fs / frame_rate) + math.ceil(t60 * fs) - 1
    return 1 << (need - 1).bit_length()


def overlap_add_flops(frame_rate: float, t60: float, fs: float = 44100.0, dynamic: bool = True) -> float:
    """Overlap-add convolution with a ``t60``-long response refreshed at ``frame_rate``.

    The dynamic case also transforms a new response every frame.
    """
    N = overlap_add_fft_size(frame_rate, t60, fs)
    fft_cost = (18 if dynamic else 12) * N * math.log2(N)
    return frame_rate * (fft_cost + 6 * N + math.ceil(t60 * fs) - 1)


def dynamic_ism_flops(room_dims, t60: float, frame_rate: float = 50.0, fs: float = 44100.0, c: float = 343.0) -> float:
    """Image-source generation plus dynamic overlap-add convolution."""
    return ism_flops(room_dims, t60, c) + overlap_add_flops(frame_rate, t60, fs, dynamic=True)


def flops_estimate(method: str, fs: float = 44100.0, **params) -> float:
    """Dispatch to one of ``sdn``, ``fdn``, ``ism``, ``overlap_add``, ``dynamic_ism``."""
    if method == "sdn":
        return sdn_flops(params.get("K", 5), params.get("P", 1), fs)
    if method == "fdn":
        return fdn_flops(params.get("Q", 12), params.get("P", 1), fs)
    if method == "ism":
        return ism_flops(params["room_dims"], params["t60"], params.get("c", 343.0))
    if method == "overlap_add":
        return overlap_add_flops(params["frame_rate"], params["t60"], fs, params.get("dynamic", True))
    if method == "dynamic_ism":
        return dynamic_ism_flops(params["room_dims"], params["t60"], params.get("frame_rate", 50.0), fs, params.get("c", 343.0))
    raise ValueError(f"unknown method {method!r}")


def memory_bound(n_walls: int, q_bits: float, fs: float, c: float, diameter: float) -> float:
    """Upper bound in bits on delay-line storage: every line is at most one
    room diameter long."""
    lines = n_walls * (n_walls - 1) + 2 * n_walls + 1
    return lines * q_bits * fs / c * diameter
