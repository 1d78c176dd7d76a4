"""Time-domain image-source method for box rooms (Allen-Berkley lattice).

Each image is addressed by a lattice index ``n`` and a parity ``u`` per
axis; its coordinate on that axis is ``(1 - 2u) s + 2 n L`` and it has
undergone ``|n - u|`` reflections from the wall at 0 and ``|n|`` from the
wall at ``L``. Impulses are placed at ``floor(Fs d / c)`` without
fractional-delay interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import SceneConfig
from .rir import ImpulseResponse


@dataclass(frozen=True)
class ImageSource:
    index: tuple[int, int, int]
    parity: tuple[int, int, int]
    position: tuple[float, float, float]
    amplitude: float
    delay: int
    order: int

    @property
    def shell(self) -> int:
        return max(abs(v) for v in self.index)


@dataclass
class ImageLattice:
    """Structure-of-arrays view of every image within a radius of the mic."""

    index: np.ndarray
    parity: np.ndarray
    position: np.ndarray
    distance: np.ndarray
    amplitude: np.ndarray
    delay: np.ndarray
    order: np.ndarray

    def __len__(self):
        return self.distance.size


def _axis_candidates(s, m, L, radius):
    nmax = int(math.ceil(radius / (2 * L))) + 1
    n = np.repeat(np.arange(-nmax, nmax + 1), 2)
    u = np.tile([0, 1], 2 * nmax + 1)
    coord = (1 - 2 * u) * s + 2 * n * L
    keep = np.abs(coord - m) <= radius
    return n[keep], u[keep], coord[keep]


def image_lattice(scene: SceneConfig, t_max_s: float, ordered: bool = True) -> ImageLattice:
    if not t_max_s > 0:
        raise ValueError("t_max must be positive")
    if scene.wall_filters is not None and any(f is not None for f in scene.wall_filters):
        raise ValueError("the image-source renderer supports scalar wall gains only")
    radius = scene.sound_speed * t_max_s
    beta = scene.reflection_gains()
    axes = []
    for ax in range(3):
        n, u, coord = _axis_candidates(
            scene.source_pos[ax], scene.mic_pos[ax], scene.room_dims[ax], radius
        )
        r0 = np.abs(n - u)
        r1 = np.abs(n)
        gain = beta[2 * ax] ** r0 * beta[2 * ax + 1] ** r1
        axes.append((n, u, coord, gain, r0 + r1))

    (nx, ux, cx, gx, ox), (ny, uy, cy, gy, oy), (nz, uz, cz, gz, oz) = axes
    mx, my, mz = scene.mic_pos
    d2 = (
        ((cx - mx) ** 2)[:, None, None]
        + ((cy - my) ** 2)[None, :, None]
        + ((cz - mz) ** 2)[None, None, :]
    )
    ix, iy, iz = np.nonzero(d2 <= radius * radius)
    dist = np.sqrt(d2[ix, iy, iz])
    index = np.stack([nx[ix], ny[iy], nz[iz]], axis=1)
    parity = np.stack([ux[ix], uy[iy], uz[iz]], axis=1)
    pos = np.stack([cx[ix], cy[iy], cz[iz]], axis=1)
    amp = gx[ix] * gy[iy] * gz[iz]
    order = ox[ix] + oy[iy] + oz[iz]

    if scene.source_dir.kind != "omni" or scene.mic_dir.kind != "omni":
        amp = amp * _directivity(scene, pos, parity)
    with np.errstate(divide="ignore"):
        amp = amp / dist
    delay = np.floor(scene.sample_rate * dist / scene.sound_speed).astype(np.int64)

    if not ordered:
        return ImageLattice(index, parity, pos, dist, amp, delay, order)
    shell = np.max(np.abs(index), axis=1)
    perm = np.lexsort((parity[:, 2], parity[:, 1], parity[:, 0], index[:, 2], index[:, 1], index[:, 0], shell))
    return ImageLattice(
        index[perm], parity[perm], pos[perm], dist[perm], amp[perm], delay[perm], order[perm]
    )


def _directivity(scene: SceneConfig, pos, parity) -> np.ndarray:
    mic = np.asarray(scene.mic_pos)
    arrive = pos - mic
    # unfold the image-space ray back into the room to get the launch direction
    launch = (mic - pos) * (1 - 2 * parity)
    out = np.ones(pos.shape[0])
    for vecs, pattern, axis in (
        (launch, scene.source_dir, scene.source_axis),
        (arrive, scene.mic_dir, scene.mic_axis),
    ):
        if pattern.kind == "omni":
            continue
        axis = np.asarray(axis, float) / np.linalg.norm(axis)
        norms = np.linalg.norm(vecs, axis=1)
        cos_t = np.divide(vecs @ axis, norms, out=np.ones_like(norms), where=norms > 0)
        theta = np.arccos(np.clip(cos_t, -1.0, 1.0))
        out *= np.array([pattern.gain(t) for t in theta])
    return out


def enumerate_images(scene: SceneConfig, t_max_s: float) -> list[ImageSource]:
    """Every image source within ``c * t_max_s`` of the microphone, ordered by
    lattice shell then lexicographically."""
    lat = image_lattice(scene, t_max_s)
    return [
        ImageSource(
            tuple(int(v) for v in lat.index[i]),
            tuple(int(v) for v in lat.parity[i]),
            tuple(float(v) for v in lat.position[i]),
            float(lat.amplitude[i]),
            int(lat.delay[i]),
            int(lat.order[i]),
        )
        for i in range(len(lat))
    ]


def render_rir_ism(scene: SceneConfig, duration_s: float) -> ImpulseResponse:
    if not duration_s > 0:
        raise ValueError("duration must be positive")
    n = int(math.ceil(duration_s * scene.sample_rate))
    lat = image_lattice(scene, duration_s, ordered=False)
    keep = lat.delay < n
    if not scene.direct_path_enabled:
        keep &= lat.order > 0
    h = np.bincount(lat.delay[keep], weights=lat.amplitude[keep], minlength=n)[:n]
    return ImpulseResponse(h, scene.sample_rate)
