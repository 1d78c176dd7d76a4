"""The scattering delay network: construction, streaming engine and oracles.

One node sits on each wall at the first-order reflection point. Nodes are
fully connected by bidirectional delay lines, fed from the source by
unidirectional lines, and tapped to the microphone by unidirectional lines.
Node ``i``'s ``K = N - 1`` ports face the other walls in ascending wall
index; the directed line leaving node ``i`` through port ``p`` has index
``i*K + p`` and lands in a port slot of the receiving node given by
``SDNNetwork.slot_source``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .geometry import (
    N_WALLS,
    WALL_NAMES,
    SceneConfig,
    SceneError,
    delay_samples,
    directivity_gain,
    first_order_reflection_points,
    validate_scene,
)
from .rir import ImpulseResponse
from .scattering import LosslessMatrix, matrix_for_kind

log = logging.getLogger(__name__)

DEFAULT_RAMP_SAMPLES = 256


class NumericalError(RuntimeError):
    pass


def port_walls(n_nodes: int) -> list[list[int]]:
    """``port_walls(n)[i][p]`` is the wall that port ``p`` of node ``i`` faces."""
    return [[j for j in range(n_nodes) if j != i] for i in range(n_nodes)]


def pairing_table(n_nodes: int) -> np.ndarray:
    """Map each incoming port slot ``j*K + q`` to the line that feeds it.

    The map is an involution: the line from node i to j feeds the slot of
    j facing i, whose own outgoing line feeds the slot of i facing j.
    """
    K = n_nodes - 1
    ports = port_walls(n_nodes)
    table = np.empty(n_nodes * K, dtype=np.int64)
    for j in range(n_nodes):
        for q, i in enumerate(ports[j]):
            table[j * K + q] = i * K + ports[i].index(j)
    return table


@dataclass
class _Geometry:
    nodes: np.ndarray
    internode: np.ndarray
    src: np.ndarray
    mic: np.ndarray
    direct: float
    src_gain: np.ndarray
    mic_gain: np.ndarray
    direct_gain: float
    dist_src: np.ndarray
    dist_mic: np.ndarray


def _scene_geometry(scene: SceneConfig) -> _Geometry:
    points = first_order_reflection_points(scene)
    nodes = np.array([p.position for p in points])
    n = len(points)
    K = n - 1
    ports = port_walls(n)
    xs = np.asarray(scene.source_pos)
    xm = np.asarray(scene.mic_pos)

    internode = np.empty(n * K)
    for i in range(n):
        for p, j in enumerate(ports[i]):
            # co-located nodes would close a delay-free loop
            internode[i * K + p] = max(1, delay_samples(float(np.linalg.norm(nodes[i] - nodes[j])), scene))

    d_src = np.linalg.norm(nodes - xs, axis=1)
    d_mic = np.linalg.norm(nodes - xm, axis=1)
    src = np.array([delay_samples(d, scene) for d in d_src], dtype=float)
    # mic taps complete the total path delay so first-order arrivals land on
    # floor(Fs * path / c), the same sample as the image source
    mic = np.array(
        [delay_samples(a + b, scene) for a, b in zip(d_src, d_mic)], dtype=float
    ) - src

    g_src = 1.0 / d_src
    g_mic = 1.0 / (1.0 + d_mic / d_src)
    gam_s = np.array([directivity_gain(scene.source_dir, scene.source_axis, xs, x) for x in nodes])
    gam_m = np.array([directivity_gain(scene.mic_dir, scene.mic_axis, xm, x) for x in nodes])

    d_sm = float(np.linalg.norm(xs - xm))
    if scene.direct_path_enabled:
        direct = float(delay_samples(d_sm, scene))
        direct_gain = (
            directivity_gain(scene.source_dir, scene.source_axis, xs, xm)
            * directivity_gain(scene.mic_dir, scene.mic_axis, xm, xs)
            / d_sm
        )
    else:
        direct, direct_gain = 0.0, 0.0
    return _Geometry(
        nodes, internode, src, mic, direct, gam_s * g_src, gam_m * g_mic, direct_gain, d_src, d_mic
    )


def _pack_filters(scene: SceneConfig, n_nodes: int):
    filters = [scene.wall_filter(i) for i in range(n_nodes)]
    order = max(max(len(b), len(a)) for b, a in filters) - 1
    fb = np.zeros((n_nodes, order + 1))
    fa = np.zeros((n_nodes, order + 1))
    for i, (b, a) in enumerate(filters):
        fb[i, : len(b)] = np.asarray(b) / a[0]
        fa[i, : len(a)] = np.asarray(a) / a[0]
    return fb, fa, order


def extraction_weights(matrix: LosslessMatrix) -> np.ndarray:
    """Weights ``w`` with ``w^T A 1 = 2``: node pressure for admittance
    junctions, otherwise the unique constant vector."""
    A = matrix.entries
    K = A.shape[0]
    if matrix.kind == "admittance" and matrix.admittance is not None:
        y = np.asarray(matrix.admittance)
        return 2.0 * y / y.sum()
    total = float(np.ones(K) @ A @ np.ones(K))
    if abs(total) < 1e-9 * K:
        raise ValueError(
            "1^T A 1 = 0: no constant extraction vector exists; supply per-node weights"
        )
    return np.full(K, 2.0 / total)


class SDNNetwork:
    """Runnable network state. Build with :func:`build_network`.

    Single-threaded: ``tick``/``process`` mutate the delay-line buffers.
    """

    def __init__(
        self,
        scene: SceneConfig,
        matrix: LosslessMatrix,
        weights: np.ndarray | None = None,
        air_absorption: float = 0.0,
        node_matrices: np.ndarray | None = None,
    ):
        report = validate_scene(scene)
        report.raise_for_violations()
        self.scene = scene
        self.matrix = matrix
        n = N_WALLS
        K = n - 1
        if matrix.size != K:
            raise ValueError(f"scattering matrix must be {K}x{K} for a box room")
        self.n_nodes, self.K = n, K
        self.slot_source = pairing_table(n)

        if node_matrices is None:
            node_matrices = np.broadcast_to(matrix.entries, (n, K, K))
        self.A = np.ascontiguousarray(node_matrices, dtype=float)
        if weights is None:
            weights = extraction_weights(matrix)
        self.w = np.ascontiguousarray(np.broadcast_to(np.asarray(weights, float), (n, K)))
        for j in range(n):
            if abs(self.w[j] @ self.A[j] @ np.ones(K) - 2.0) > 1e-12 * max(1.0, np.abs(self.w[j]).sum()):
                raise ValueError(f"node {j}: extraction weights violate w^T A 1 = 2")

        self.fb, self.fa, order = _pack_filters(scene, n)
        self.fstate = np.zeros((n * K, order))
        self.air_pole = np.full(n * K, float(air_absorption))
        self.air_state = np.zeros(n * K)

        self._set_geometry(_scene_geometry(scene))
        self.capacity = int(math.ceil(scene.diameter * scene.sample_rate / scene.sound_speed)) + 4
        self.ibuf = np.zeros((n * K, self.capacity))
        self.xbuf = np.zeros(self.capacity)
        self.mbuf = np.zeros((n, self.capacity))
        self.pos = 0
        self.time = 0
        self._ramp_left = 0
        self._ramp_delays = self.delays.copy()
        self._ramp_gains = self.gains.copy()

    # -- parameters ---------------------------------------------------------

    def _set_geometry(self, geo: _Geometry):
        self.geometry = geo
        self.delays = np.concatenate([geo.internode, geo.src, geo.mic, [geo.direct]])
        self.gains = np.concatenate([geo.src_gain, geo.mic_gain, [geo.direct_gain]])

    @property
    def node_positions(self) -> np.ndarray:
        return self.geometry.nodes

    @property
    def internode_delays(self) -> np.ndarray:
        return self.geometry.internode.astype(int)

    @property
    def source_delays(self) -> np.ndarray:
        return self.geometry.src.astype(int)

    @property
    def mic_delays(self) -> np.ndarray:
        return self.geometry.mic.astype(int)

    @property
    def direct_delay(self) -> int:
        return int(self.geometry.direct)

    @property
    def direct_gain(self) -> float:
        return self.geometry.direct_gain

    @property
    def sample_rate(self) -> float:
        return self.scene.sample_rate

    @property
    def wall_gains(self) -> np.ndarray:
        """Broadband gain of each wall filter (``b[0]`` for scalar walls)."""
        return np.array([np.sum(self.fb[i]) / np.sum(self.fa[i]) for i in range(self.n_nodes)])

    # -- processing ---------------------------------------------------------

    def _run(self, x: np.ndarray, d0, d1, g0, g1, ramp: bool) -> np.ndarray:
        out = np.empty_like(x)
        self.pos, bad = _kernel.run_block(
            x, out, self.ibuf, self.xbuf, self.mbuf, self.pos,
            d0, d1, g0, g1, ramp,
            self.slot_source, self.A, self.w, self.fb, self.fa, self.fstate,
            self.air_pole, self.air_state,
        )
        if bad >= 0:
            raise NumericalError(f"non-finite output at sample {self.time + bad}")
        self.time += x.size
        return out

    def process(self, x) -> np.ndarray:
        """Feed a block of input samples and return the output block."""
        x = np.ascontiguousarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("input must be one-dimensional")
        if not np.all(np.isfinite(x)):
            raise NumericalError("non-finite input sample")
        if self._ramp_left == 0:
            return self._run(x, self.delays, self.delays, self.gains, self.gains, False)
        pieces = []
        m = min(x.size, self._ramp_left)
        frac = m / self._ramp_left
        d_end = self._ramp_delays + (self.delays - self._ramp_delays) * frac
        g_end = self._ramp_gains + (self.gains - self._ramp_gains) * frac
        pieces.append(self._run(x[:m], self._ramp_delays, d_end, self._ramp_gains, g_end, True))
        self._ramp_left -= m
        self._ramp_delays, self._ramp_gains = d_end, g_end
        if self._ramp_left == 0:
            self._ramp_delays, self._ramp_gains = self.delays.copy(), self.gains.copy()
        if m < x.size:
            pieces.append(self.process(x[m:]))
        return np.concatenate(pieces)

    def tick(self, sample: float) -> float:
        return float(self.process(np.array([sample], dtype=float))[0])

    def reset(self):
        for buf in (self.ibuf, self.xbuf, self.mbuf, self.fstate, self.air_state):
            buf[...] = 0.0
        self.pos = 0
        self.time = 0

    def internode_energy(self) -> float:
        """Sum of squares of the samples currently travelling between nodes."""
        total = 0.0
        for line, d in enumerate(self.delays[: self.n_nodes * self.K]):
            idx = (self.pos - 1 - np.arange(int(d))) % self.capacity
            total += float(self.ibuf[line, idx] @ self.ibuf[line, idx])
        return total

    # -- interactivity ------------------------------------------------------

    def update_scene(self, source_pos=None, mic_pos=None, ramp_samples: int = DEFAULT_RAMP_SAMPLES):
        """Move source and/or microphone; delays and gains glide to the new
        values over ``ramp_samples`` samples of subsequent processing."""
        new_scene = self.scene.with_positions(source_pos, mic_pos)
        report = validate_scene(new_scene)
        report.raise_for_violations()
        geo = _scene_geometry(new_scene)
        if np.max(geo.internode) + 2 > self.capacity or np.max(geo.src + geo.mic) + 2 > self.capacity:
            raise SceneError(["updated delays exceed delay-line capacity"])
        # current effective parameters become the ramp start
        start_d = self._ramp_delays if self._ramp_left else self.delays.copy()
        start_g = self._ramp_gains if self._ramp_left else self.gains.copy()
        self.scene = new_scene
        self._set_geometry(geo)
        if np.array_equal(start_d, self.delays) and np.array_equal(start_g, self.gains):
            self._ramp_left = 0
            return self
        if ramp_samples <= 0:
            self._ramp_left = 0
        else:
            self._ramp_left = int(ramp_samples)
            self._ramp_delays, self._ramp_gains = start_d, start_g
        return self

    # -- description --------------------------------------------------------

    def describe(self) -> dict:
        K = self.K
        ports = port_walls(self.n_nodes)
        return {
            "sample_rate": self.sample_rate,
            "matrix_kind": self.matrix.kind,
            "scattering_matrix": self.matrix.entries.tolist(),
            "nodes": [
                {
                    "wall": WALL_NAMES[i],
                    "position": self.node_positions[i].tolist(),
                    "source_delay": int(self.geometry.src[i]),
                    "source_gain": float(self.geometry.src_gain[i]),
                    "mic_delay": int(self.geometry.mic[i]),
                    "mic_gain": float(self.geometry.mic_gain[i]),
                    "extraction_weights": self.w[i].tolist(),
                    "wall_filter": {"b": self.fb[i].tolist(), "a": self.fa[i].tolist()},
                    "lines": {
                        WALL_NAMES[j]: int(self.geometry.internode[i * K + p])
                        for p, j in enumerate(ports[i])
                    },
                }
                for i in range(self.n_nodes)
            ],
            "direct": {"delay": self.direct_delay, "gain": self.direct_gain},
        }


def build_network(
    scene: SceneConfig,
    matrix_kind: str | LosslessMatrix = "isotropic",
    seed: int | None = None,
    admittance=None,
    air_absorption: float = 0.0,
) -> SDNNetwork:
    """Construct the network for ``scene`` with one scattering matrix for every node."""
    if isinstance(matrix_kind, LosslessMatrix):
        matrix = matrix_kind
    else:
        matrix = matrix_for_kind(matrix_kind, N_WALLS - 1, seed, admittance)
    return SDNNetwork(scene, matrix, air_absorption=air_absorption)


def render_rir(
    scene: SceneConfig, duration_s: float, matrix_kind="isotropic", seed: int | None = None, **kw
) -> ImpulseResponse:
    if not duration_s > 0:
        raise ValueError("duration must be positive")
    n = int(math.ceil(duration_s * scene.sample_rate))
    net = build_network(scene, matrix_kind, seed, **kw)
    x = np.zeros(n)
    x[0] = 1.0
    return ImpulseResponse(net.process(x), scene.sample_rate)


def process_signal(scene: SceneConfig, x, matrix_kind="isotropic", seed: int | None = None, **kw) -> np.ndarray:
    net = build_network(scene, matrix_kind, seed, **kw)
    return net.process(np.asarray(x, dtype=float))


# -- frequency-domain oracle ---------------------------------------------------


@dataclass
class FrequencyResponse:
    freqs: np.ndarray
    values: np.ndarray
    skipped: np.ndarray


def _filter_response(b, a, z_inv):
    num = np.polyval(np.asarray(b)[::-1], z_inv)
    den = np.polyval(np.asarray(a)[::-1], z_inv)
    return num / den


def frequency_response(net: SDNNetwork, freqs, chunk: int = 1024) -> FrequencyResponse:
    """Closed-form transfer function of the (static) network on a frequency grid.

    Solves ``H = ½ k_M^T [Ā^{-1} H̄^{-1} - P D_f]^{-1} k_S + ḡ z^{-D_SM}`` per
    frequency. Walls whose filter vanishes at a grid point are handled by
    the equivalent form ``k_M^T [I - H̄ Ā P D_f]^{-1} H̄ Ā ½ k_S``.
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    n, K = net.n_nodes, net.K
    NL = n * K
    fs = net.sample_rate
    geo = net.geometry
    P = np.zeros((NL, NL))
    P[np.arange(NL), net.slot_source] = 1.0
    A_bar = np.zeros((NL, NL))
    A_inv = np.zeros((NL, NL))
    for j in range(n):
        blk = slice(j * K, (j + 1) * K)
        A_bar[blk, blk] = net.A[j]
        A_inv[blk, blk] = np.linalg.inv(net.A[j])
    node_of = np.repeat(np.arange(n), K)
    w_line = net.w.reshape(-1)

    values = np.full(freqs.size, np.nan, dtype=complex)
    skipped = []
    for start in range(0, freqs.size, chunk):
        f = freqs[start : start + chunk]
        z_inv = np.exp(-2j * np.pi * f / fs)[:, None]
        Hw = np.stack([_filter_response(net.fb[j], net.fa[j], z_inv[:, 0]) for j in range(n)], axis=1)
        h_line = Hw[:, node_of]
        air = net.air_pole[None, :]
        air_resp = (1.0 - air) / (1.0 - air * z_inv)
        Df = z_inv ** geo.internode[None, :] * air_resp
        kS = 0.5 * (geo.src_gain * z_inv ** geo.src)[:, node_of]
        kM = (geo.mic_gain * z_inv ** geo.mic)[:, node_of] * w_line
        PDf = P[None, :, :] * Df[:, None, :]
        direct = geo.direct_gain * z_inv[:, 0] ** geo.direct
        if np.all(np.abs(h_line) > 1e-300):
            M = A_inv[None, :, :] * (1.0 / h_line)[:, None, :] - PDf
            rhs = kS
        else:
            HA = h_line[:, :, None] * A_bar[None, :, :]
            M = np.eye(NL)[None] - HA @ PDf
            rhs = np.einsum("fij,fj->fi", HA, kS)
        try:
            sol = np.linalg.solve(M, rhs[..., None])[..., 0]
            values[start : start + f.size] = np.einsum("fi,fi->f", kM, sol) + direct
        except np.linalg.LinAlgError:
            for m in range(f.size):
                try:
                    s = np.linalg.solve(M[m], rhs[m])
                    values[start + m] = kM[m] @ s + direct[m]
                except np.linalg.LinAlgError:
                    skipped.append(start + m)
    if skipped:
        log.warning("frequency response singular at %d grid points", len(skipped))
    return FrequencyResponse(freqs, values, np.array(skipped, dtype=int))


def loop_matrices(net: SDNNetwork):
    """``(P, Ā, H̄, D)`` of the recursive backbone for scalar wall gains.

    ``H̄`` is the per-line wall gain vector and ``D`` the per-line delays.
    """
    if net.fstate.shape[1] != 0:
        raise ValueError("loop matrices need scalar wall gains")
    n, K = net.n_nodes, net.K
    NL = n * K
    P = np.zeros((NL, NL))
    P[np.arange(NL), net.slot_source] = 1.0
    A_bar = np.zeros((NL, NL))
    for j in range(n):
        A_bar[j * K : (j + 1) * K, j * K : (j + 1) * K] = net.A[j]
    h = np.repeat(net.fb[:, 0], K)
    return P, A_bar, h, net.internode_delays


def recursion_matrix(net: SDNNetwork) -> np.ndarray:
    """State-transition matrix of the internode delay lines (scalar walls).

    The state is every sample in flight, line by line from newest to
    oldest; its eigenvalues are the poles of the network.
    """
    P, A_bar, h, D = loop_matrices(net)
    loop = h[:, None] * A_bar @ P
    offsets = np.concatenate([[0], np.cumsum(D)])
    size = int(offsets[-1])
    T = np.zeros((size, size))
    for line in range(D.size):
        first = offsets[line]
        # newest sample of each line is the scattered output
        for src_line in range(D.size):
            c = loop[line, src_line]
            if c != 0.0:
                T[first, offsets[src_line] + D[src_line] - 1] = c
        for k in range(1, D[line]):
            T[first + k, first + k - 1] = 1.0
    return T


def pole_residual(net: SDNNetwork, z: complex) -> float:
    """Relative smallest singular value of ``D_f(z^{-1}) - H̄ Ā P`` at ``z``."""
    P, A_bar, h, D = loop_matrices(net)
    M = np.diag(z ** D.astype(float)) - h[:, None] * A_bar @ P
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[-1] / s[0])
