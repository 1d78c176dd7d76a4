"""Scene description and the geometric quantities the network is built from.

Rooms are axis-aligned boxes with one corner at the origin. Walls are
indexed ``[x=0, x=Lx, y=0, y=Ly, z=0, z=Lz]``; every port ordering in the
package derives from this order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

N_WALLS = 6
WALL_NAMES = ("x0", "x1", "y0", "y1", "z0", "z1")
DEFAULT_SOUND_SPEED = 343.0


class SceneError(ValueError):
    """Raised when a scene violates a hard invariant."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def wall_axis(wall_id: int) -> int:
    return wall_id // 2


def wall_offset(wall_id: int, room_dims) -> float:
    return 0.0 if wall_id % 2 == 0 else float(room_dims[wall_axis(wall_id)])


@dataclass(frozen=True)
class DirectivityPattern:
    """Frequency-independent directivity gain as a function of off-axis angle.

    ``kind`` is one of ``"omni"``, ``"cardioid"`` (gain ``a + (1 - a) cos θ``
    clipped at zero, so ``a=1`` is omni, ``a=0.5`` cardioid, ``a=0`` figure-8
    front lobe) or ``"table"`` (piecewise-linear in θ over ``angles`` in
    radians, ``[0, π]``).
    """

    kind: str = "omni"
    a: float = 1.0
    angles: tuple[float, ...] = ()
    gains: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("omni", "cardioid", "table"):
            raise ValueError(f"unknown directivity kind {self.kind!r}")
        if self.kind == "cardioid" and not 0.0 <= self.a <= 1.0:
            raise ValueError("cardioid parameter a must lie in [0, 1]")
        if self.kind == "table":
            if len(self.angles) < 2 or len(self.angles) != len(self.gains):
                raise ValueError("tabulated directivity needs >= 2 matching angle/gain pairs")
            if any(g < 0 for g in self.gains):
                raise ValueError("tabulated directivity gains must be non-negative")
            if list(self.angles) != sorted(self.angles):
                raise ValueError("tabulated angles must be increasing")

    @classmethod
    def cardioid(cls, a: float = 0.5) -> "DirectivityPattern":
        return cls("cardioid", a=a)

    def gain(self, theta: float) -> float:
        if self.kind == "omni":
            return 1.0
        if self.kind == "cardioid":
            return max(0.0, self.a + (1.0 - self.a) * math.cos(theta))
        return float(np.interp(theta, self.angles, self.gains))


OMNI = DirectivityPattern()


@dataclass(frozen=True)
class SceneConfig:
    """Immutable description of a box room, a source and a microphone.

    ``wall_absorption`` holds one absorption coefficient per wall. A wall
    may instead get an IIR reflection filter through ``wall_filters``: a
    tuple of six ``(b, a)`` coefficient pairs, or ``None`` for walls that
    keep their scalar gain. ``reflection_sign`` multiplies every scalar wall
    gain (use ``-1`` for a zero-mean tail).
    """

    room_dims: tuple[float, float, float]
    source_pos: tuple[float, float, float]
    mic_pos: tuple[float, float, float]
    wall_absorption: tuple[float, ...] = (0.5,) * N_WALLS
    sample_rate: float = 44100.0
    sound_speed: float = DEFAULT_SOUND_SPEED
    source_dir: DirectivityPattern = OMNI
    source_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    mic_dir: DirectivityPattern = OMNI
    mic_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    direct_path_enabled: bool = True
    reflection_sign: float = 1.0
    wall_filters: tuple | None = None

    def __post_init__(self):
        # normalise sequences so equal scenes compare and hash equal
        object.__setattr__(self, "room_dims", tuple(float(v) for v in self.room_dims))
        object.__setattr__(self, "source_pos", tuple(float(v) for v in self.source_pos))
        object.__setattr__(self, "mic_pos", tuple(float(v) for v in self.mic_pos))
        object.__setattr__(self, "source_axis", tuple(float(v) for v in self.source_axis))
        object.__setattr__(self, "mic_axis", tuple(float(v) for v in self.mic_axis))
        alpha = self.wall_absorption
        if np.isscalar(alpha):
            alpha = (float(alpha),) * N_WALLS
        object.__setattr__(self, "wall_absorption", tuple(float(v) for v in alpha))
        if self.wall_filters is not None:
            filters = tuple(
                None if f is None else (tuple(map(float, f[0])), tuple(map(float, f[1])))
                for f in self.wall_filters
            )
            object.__setattr__(self, "wall_filters", filters)

    @classmethod
    def uniform(cls, room_dims, source_pos, mic_pos, alpha=0.5, **kw) -> "SceneConfig":
        """Scene with scalar wall absorption; ``alpha`` may be one value or six."""
        return cls(room_dims, source_pos, mic_pos, wall_absorption=alpha, **kw)

    def with_positions(self, source_pos=None, mic_pos=None) -> "SceneConfig":
        return replace(
            self,
            source_pos=self.source_pos if source_pos is None else source_pos,
            mic_pos=self.mic_pos if mic_pos is None else mic_pos,
        )

    @property
    def volume(self) -> float:
        lx, ly, lz = self.room_dims
        return lx * ly * lz

    @property
    def wall_areas(self) -> np.ndarray:
        lx, ly, lz = self.room_dims
        return np.array([ly * lz, ly * lz, lx * lz, lx * lz, lx * ly, lx * ly])

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.room_dims))

    def reflection_gains(self) -> np.ndarray:
        """Scalar wall reflection gains ``sign * sqrt(1 - alpha)``."""
        alpha = np.asarray(self.wall_absorption)
        return self.reflection_sign * np.sqrt(1.0 - alpha)

    def wall_filter(self, wall_id: int) -> tuple[np.ndarray, np.ndarray]:
        """``(b, a)`` of the reflection filter on one wall; order 0 for scalar gains."""
        if self.wall_filters is not None and self.wall_filters[wall_id] is not None:
            b, a = self.wall_filters[wall_id]
            return np.asarray(b, float), np.asarray(a, float)
        return np.array([self.reflection_gains()[wall_id]]), np.array([1.0])


@dataclass(frozen=True)
class ReflectionPoint:
    wall_id: int
    position: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    @property
    def wall_name(self) -> str:
        return WALL_NAMES[self.wall_id]


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_for_violations(self):
        if self.violations:
            raise SceneError(self.violations)


def _inside(p, dims) -> bool:
    return all(0.0 < p[i] < dims[i] for i in range(3))


def validate_scene(scene: SceneConfig, t_est: float | None = None) -> ValidationReport:
    """Check scene invariants; ISO 3382 placement issues come back as warnings.

    ``t_est`` is the reverberation-time estimate used for the minimum
    source-microphone distance; Sabine's prediction is used when omitted
    and the room is not rigid.
    """
    # local import: analysis depends on geometry
    from .analysis.predictors import iso_min_distance, sabine_t60

    report = ValidationReport()
    dims = scene.room_dims
    if len(dims) != 3 or any(not math.isfinite(d) or d <= 0 for d in dims):
        report.violations.append("room dimensions must be three positive numbers")
        return report
    if not _inside(scene.source_pos, dims):
        report.violations.append("source outside room")
    if not _inside(scene.mic_pos, dims):
        report.violations.append("microphone outside room")
    if len(scene.wall_absorption) != N_WALLS:
        report.violations.append("wall_absorption needs one value per wall")
    elif any(not 0.0 <= a <= 1.0 for a in scene.wall_absorption):
        report.violations.append("absorption coefficients must lie in [0, 1]")
    if not scene.sample_rate > 0:
        report.violations.append("sample_rate must be positive")
    if not scene.sound_speed > 0:
        report.violations.append("sound_speed must be positive")
    for name, axis in (("source", scene.source_axis), ("microphone", scene.mic_axis)):
        if np.linalg.norm(axis) == 0:
            report.violations.append(f"{name} axis must be non-zero")
    if scene.wall_filters is not None:
        if len(scene.wall_filters) != N_WALLS:
            report.violations.append("wall_filters needs one entry per wall")
        else:
            for i, f in enumerate(scene.wall_filters):
                if f is None:
                    continue
                b, a = f
                if not a or a[0] == 0:
                    report.violations.append(f"wall {WALL_NAMES[i]}: filter a[0] must be non-zero")
                elif len(a) > 1 and np.max(np.abs(np.roots(a))) >= 1.0:
                    report.violations.append(f"wall {WALL_NAMES[i]}: filter is unstable")
    if scene.reflection_sign not in (1.0, -1.0):
        report.violations.append("reflection_sign must be +1 or -1")
    src_mic = math.dist(scene.source_pos, scene.mic_pos)
    if scene.direct_path_enabled and src_mic == 0.0:
        report.violations.append("source and microphone coincide with the direct path enabled")
    if report.violations:
        return report

    wall_gap = min(min(scene.mic_pos[i], dims[i] - scene.mic_pos[i]) for i in range(3))
    if wall_gap < 1.0:
        report.warnings.append(f"microphone {wall_gap:.2f} m from nearest wall (ISO 3382 asks >= 1 m)")
    if t_est is None:
        alpha = np.asarray(scene.wall_absorption)
        if np.any(alpha > 0):
            t_est = sabine_t60(dims, alpha)
    if t_est is not None:
        d_min = iso_min_distance(scene.volume, t_est, scene.sound_speed)
        if src_mic < d_min:
            report.warnings.append(
                f"source-microphone distance {src_mic:.2f} m below ISO minimum {d_min:.2f} m"
            )
    return report


def first_order_reflection_points(scene: SceneConfig) -> list[ReflectionPoint]:
    """Specular reflection points of the source-to-mic path on each wall."""
    src = np.asarray(scene.source_pos)
    mic = np.asarray(scene.mic_pos)
    if not (_inside(src, scene.room_dims) and _inside(mic, scene.room_dims)):
        raise SceneError(["source and microphone must lie strictly inside the room"])
    points = []
    for wall in range(N_WALLS):
        ax = wall_axis(wall)
        c0 = wall_offset(wall, scene.room_dims)
        ds = abs(src[ax] - c0)
        dm = abs(mic[ax] - c0)
        # written symmetrically in (src, mic) so swapping them is exact
        p = (dm * src + ds * mic) / (ds + dm)
        p[ax] = c0
        points.append(ReflectionPoint(wall, tuple(float(v) for v in p)))
    return points


def image_source(pos, wall_id: int, room_dims) -> np.ndarray:
    """Mirror of ``pos`` across one wall plane."""
    img = np.array(pos, dtype=float)
    ax = wall_axis(wall_id)
    img[ax] = 2.0 * wall_offset(wall_id, room_dims) - img[ax]
    return img


def delay_samples(d: float, scene: SceneConfig) -> int:
    """Integer propagation delay ``floor(Fs * d / c)``."""
    if d < 0:
        raise ValueError("distance must be non-negative")
    return int(math.floor(scene.sample_rate * d / scene.sound_speed))


def directivity_gain(pattern: DirectivityPattern, axis, origin, target) -> float:
    """Gain of ``pattern`` toward ``target`` as seen from ``origin``."""
    direction = np.asarray(target, float) - np.asarray(origin, float)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        raise ValueError("zero-length direction")
    if pattern.kind == "omni":
        return 1.0
    axis = np.asarray(axis, float)
    anorm = np.linalg.norm(axis)
    if anorm == 0.0:
        raise ValueError("zero-length reference axis")
    cos_t = float(np.clip(direction @ axis / (norm * anorm), -1.0, 1.0))
    return pattern.gain(math.acos(cos_t))
