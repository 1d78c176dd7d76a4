"""Audio, curve and matrix files."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import soundfile as sf

log = logging.getLogger(__name__)

ENCODINGS = {"pcm16": "PCM_16", "pcm24": "PCM_24", "float32": "FLOAT"}
_SUBTYPE_TO_ENCODING = {v: k for k, v in ENCODINGS.items()}


class AudioFormatError(ValueError):
    pass


@dataclass
class AudioBuffer:
    """``data`` is channels × samples, float64 in [-1, 1] for PCM sources."""

    data: np.ndarray
    sample_rate: int
    encoding: str = "float32"

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[None, :]
        if data.ndim != 2:
            raise ValueError("audio data must be 1-D or channels x samples")
        self.data = data
        if self.encoding not in ENCODINGS:
            raise AudioFormatError(f"unsupported encoding {self.encoding!r}")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]

    @classmethod
    def mono(cls, samples, sample_rate, encoding="float32") -> "AudioBuffer":
        return cls(np.asarray(samples, float)[None, :], int(round(sample_rate)), encoding)


def _expected_data_bytes(path: Path) -> tuple[int, int] | None:
    """Declared and available size of the RIFF ``data`` chunk, if found."""
    raw = path.read_bytes()
    if raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        return None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos : pos + 4]
        size = int.from_bytes(raw[pos + 4 : pos + 8], "little")
        if cid == b"data":
            return size, len(raw) - pos - 8
        pos += 8 + size + (size & 1)
    return None


def load_audio(path) -> AudioBuffer:
    path = Path(path)
    try:
        info = sf.info(str(path))
    except (RuntimeError, sf.LibsndfileError) as exc:
        raise AudioFormatError(f"{path}: cannot parse audio header ({exc})") from exc
    encoding = _SUBTYPE_TO_ENCODING.get(info.subtype)
    if encoding is None:
        raise AudioFormatError(f"{path}: unsupported encoding {info.subtype}")
    sizes = _expected_data_bytes(path)
    if sizes is not None and sizes[1] < sizes[0]:
        raise AudioFormatError(f"{path}: truncated file ({sizes[1]} of {sizes[0]} data bytes)")
    data, fs = sf.read(str(path), dtype="float64", always_2d=True)
    return AudioBuffer(data.T, fs, encoding)


def write_audio(path, buffer: AudioBuffer) -> int:
    """Write a RIFF/WAVE file; returns the number of samples clipped to the
    PCM range (always 0 for float32)."""
    data = buffer.data
    if data.size == 0:
        raise ValueError("refusing to write an empty buffer")
    if not np.all(np.isfinite(data)):
        raise ValueError("audio contains non-finite samples")
    clipped = 0
    if buffer.encoding != "float32":
        over = np.abs(data) > 1.0
        clipped = int(over.sum())
        if clipped:
            log.warning("%s: clipped %d samples to the PCM range", path, clipped)
            data = np.clip(data, -1.0, 1.0)
    try:
        sf.write(str(path), data.T, int(buffer.sample_rate), subtype=ENCODINGS[buffer.encoding], format="WAV")
    except (RuntimeError, sf.LibsndfileError) as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return clipped


def export_curve(path, columns: dict, comments=()) -> None:
    """CSV with a header row; ``comments`` become leading ``#`` lines."""
    names = list(columns)
    arrays = [np.asarray(columns[k]).ravel() for k in names]
    if len({a.size for a in arrays}) > 1:
        raise ValueError("curve columns have different lengths")
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*arrays):
            writer.writerow([repr(float(v)) for v in row])


def read_curve(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


def save_matrix(path, A) -> None:
    np.savetxt(path, np.asarray(A, float), delimiter=",", fmt="%.17g")


def load_matrix(path) -> np.ndarray:
    A = np.loadtxt(path, delimiter=",", ndmin=2)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{path}: matrix is not square ({A.shape})")
    return A
