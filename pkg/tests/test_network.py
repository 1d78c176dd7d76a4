import math

import numpy as np
import pytest
from scipy import signal

from sdn_reverb import SceneConfig, SceneError, build_network, first_order_reflection_points, render_rir
from sdn_reverb.geometry import DirectivityPattern
from sdn_reverb.network import (
    NumericalError,
    extraction_weights,
    frequency_response,
    pairing_table,
    pole_residual,
    process_signal,
    recursion_matrix,
)
from sdn_reverb.analysis import mode_density
from sdn_reverb.scattering import LosslessMatrix, isotropic_matrix

SHOEBOX = (3.2, 4.0, 2.7)


@pytest.fixture
def scene():
    return SceneConfig.uniform(SHOEBOX, (1.0, 1.3, 1.2), (2.1, 2.9, 1.5), 0.3)


def impulse(n):
    x = np.zeros(n)
    x[0] = 1.0
    return x


def test_pairing_is_symmetric_involution():
    P = pairing_table(6)
    assert np.array_equal(P[P], np.arange(30))
    assert not np.any(P == np.arange(30))


def test_centered_cube_delays():
    scene = SceneConfig.uniform((5, 5, 5), (2.5,) * 3, (2.5,) * 3, 0.5, direct_path_enabled=False)
    net = build_network(scene)
    assert len(set(net.source_delays.tolist())) == 1
    fs, c = scene.sample_rate, scene.sound_speed
    expected = {math.floor(fs * 5 / c), math.floor(fs * 5 / math.sqrt(2) / c)}
    assert set(net.internode_delays.tolist()) == expected


def test_isotropic_weights():
    assert np.allclose(extraction_weights(isotropic_matrix(5)), 0.4)


def test_weights_undefined_for_zero_sum():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    with pytest.raises(ValueError):
        extraction_weights(LosslessMatrix(A))


def test_rigid_absorbing_walls_give_zero_gain(scene):
    net = build_network(SceneConfig.uniform(SHOEBOX, scene.source_pos, scene.mic_pos, 1.0))
    assert np.all(net.wall_gains == 0.0)


def test_first_order_exactness(scene):
    net = build_network(scene)
    h = net.process(impulse(2000))
    d_direct = net.direct_delay
    assert h[d_direct] == pytest.approx(1 / math.dist(scene.source_pos, scene.mic_pos), abs=1e-12)
    beta = scene.reflection_gains()
    arrivals = net.source_delays + net.mic_delays
    for k, p in enumerate(first_order_reflection_points(scene)):
        x = np.array(p.position)
        path = np.linalg.norm(x - scene.source_pos) + np.linalg.norm(x - scene.mic_pos)
        # only count walls whose sample no other first-order arrival shares
        if np.sum(arrivals == arrivals[k]) == 1 and arrivals[k] != d_direct:
            assert h[arrivals[k]] == pytest.approx(beta[k] / path, abs=1e-12)
    early = np.ones(arrivals.min(), bool)
    early[d_direct] = False
    assert np.all(h[: arrivals.min()][early] == 0.0)


def test_directivity_first_order():
    card = DirectivityPattern.cardioid(0.5)
    scene = SceneConfig.uniform(SHOEBOX, (1.0, 1.3, 1.2), (2.1, 2.9, 1.5), 0.3, source_dir=card, source_axis=(1, 1, 0))
    net = build_network(scene)
    h = net.process(impulse(1000))
    from sdn_reverb.ism import render_rir_ism

    ref = render_rir_ism(scene, 1000 / scene.sample_rate).samples
    assert h[net.direct_delay] == pytest.approx(ref[net.direct_delay], abs=1e-12)


def test_zero_input_zero_output(scene):
    assert np.all(build_network(scene).process(np.zeros(5000)) == 0.0)


def test_full_absorption_single_spike(scene):
    sc = SceneConfig.uniform(SHOEBOX, scene.source_pos, scene.mic_pos, 1.0)
    net = build_network(sc)
    h = net.process(impulse(4000))
    expected = np.zeros(4000)
    expected[net.direct_delay] = net.direct_gain
    assert np.array_equal(h, expected)


def test_direct_path_disabled(scene):
    sc = SceneConfig.uniform(SHOEBOX, scene.source_pos, scene.mic_pos, 0.3, direct_path_enabled=False)
    net = build_network(sc)
    assert net.process(impulse(1000))[build_network(scene).direct_delay] == 0.0


def test_negative_beta_zero_mean_tail(scene):
    sc = SceneConfig.uniform(SHOEBOX, scene.source_pos, scene.mic_pos, 0.1, reflection_sign=-1.0)
    h = render_rir(sc, 0.5).samples
    tail = h[int(0.05 * sc.sample_rate) :]
    assert abs(tail.mean()) < 0.02 * np.sqrt(np.mean(tail**2))
    h_pos = render_rir(SceneConfig.uniform(SHOEBOX, scene.source_pos, scene.mic_pos, 0.1), 0.5).samples
    t_pos = h_pos[int(0.05 * sc.sample_rate) :]
    assert abs(tail.mean()) < abs(t_pos.mean())


def test_lossless_limit_conserves_energy():
    scene = SceneConfig.uniform(SHOEBOX, (1.0, 1.3, 1.2), (2.1, 2.9, 1.5), 0.0)
    net = build_network(scene)
    net.process(impulse(int(net.source_delays.max()) + 1))
    e0 = net.internode_energy()
    assert e0 > 0
    for _ in range(20):
        net.process(np.zeros(97))
        assert net.internode_energy() == pytest.approx(e0, rel=1e-9)


def test_process_matches_convolution(scene):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(44100)
    h = render_rir(scene, 1.0).samples
    y = process_signal(scene, x)
    ref = signal.fftconvolve(x, h)[: x.size]
    # the RIR is truncated at 1 s; compare where the truncation has no effect
    assert np.sqrt(np.mean((y - ref) ** 2)) < 1e-9


def test_time_invariance(scene):
    h = render_rir(scene, 0.3).samples
    x = np.zeros(h.size)
    x[37] = 1.0
    y = process_signal(scene, x)
    assert np.allclose(y[37:], h[:-37], atol=1e-15)
    assert np.all(y[:37] == 0)


def test_block_split_identical(scene):
    x = np.random.default_rng(1).standard_normal(3000)
    whole = build_network(scene).process(x)
    net = build_network(scene)
    parts = np.concatenate([net.process(x[:1000]), net.process(x[1000:1001]), net.process(x[1001:])])
    assert np.array_equal(whole, parts)


def test_deterministic_render(scene):
    a = render_rir(scene, 0.2, "orthogonal", seed=5).samples
    b = render_rir(scene, 0.2, "orthogonal", seed=5).samples
    assert np.array_equal(a, b)


def test_non_finite_input_rejected(scene):
    with pytest.raises(NumericalError):
        build_network(scene).process(np.array([0.0, np.nan]))


def test_invalid_scene_rejected():
    with pytest.raises(SceneError):
        build_network(SceneConfig.uniform(SHOEBOX, (5, 1, 1), (1, 1, 1), 0.3))


def test_update_identical_is_bit_identical(scene):
    x = np.random.default_rng(2).standard_normal(4000)
    a = build_network(scene)
    b = build_network(scene)
    ya = a.process(x[:2000])
    yb = b.process(x[:2000])
    b.update_scene(scene.source_pos, scene.mic_pos)
    assert np.array_equal(np.concatenate([ya, a.process(x[2000:])]), np.concatenate([yb, b.process(x[2000:])]))


def test_update_reproduces_new_first_order(scene):
    new_src, new_mic = (2.2, 1.1, 0.9), (0.8, 3.1, 2.0)
    fresh = build_network(scene.with_positions(new_src, new_mic))
    a, b = build_network(scene), build_network(scene)
    for net in (a, b):
        net.process(impulse(100))
        net.update_scene(new_src, new_mic, ramp_samples=64)
        net.process(np.zeros(500))
    assert np.array_equal(a.source_delays, fresh.source_delays)
    assert np.array_equal(a.mic_delays, fresh.mic_delays)
    # after the ramp the network is time-invariant again, so the response to
    # a new impulse is the difference of two runs that differ only in it
    n = int((fresh.source_delays + fresh.mic_delays).max()) + 200
    diff = a.process(impulse(n)) - b.process(np.zeros(n))
    assert np.allclose(diff, fresh.process(impulse(n)), atol=1e-12)


def test_moving_mic_is_smooth():
    scene = SceneConfig.uniform(SHOEBOX, (1.0, 1.3, 1.2), (1.0, 2.5, 1.5), 0.3)
    net = build_network(scene)
    fs = int(scene.sample_rate)
    t = np.arange(fs) / fs
    x = np.sin(2 * np.pi * 220 * t)
    block = 256
    out = []
    for i, start in enumerate(range(0, fs, block)):
        mic = (1.0 + (start / fs) * 1.0, 2.5, 1.5)
        net.update_scene(mic_pos=mic, ramp_samples=block)
        out.append(net.process(x[start : start + block]))
    y = np.concatenate(out)
    assert np.all(np.isfinite(y))
    steady = y[fs // 10 :]
    jumps = np.abs(np.diff(steady))
    local_rms = np.sqrt(np.convolve(steady**2, np.ones(441) / 441, mode="same"))[1:]
    assert np.all(jumps <= 10 * local_rms)


def test_update_rejects_outside(scene):
    with pytest.raises(SceneError):
        build_network(scene).update_scene(mic_pos=(9, 1, 1))


def test_frequency_response_matches_render():
    scene = SceneConfig.uniform((5, 5, 5), (1.3, 2.1, 1.7), (3.6, 3.0, 2.9), 0.5)
    net = build_network(scene)
    nfft = 2**15
    H = frequency_response(net, np.fft.rfftfreq(nfft, 1 / scene.sample_rate))
    assert H.skipped.size == 0
    h_f = np.fft.irfft(H.values, nfft)
    h_t = build_network(scene).process(impulse(nfft))
    n = int(0.3 * scene.sample_rate)
    # aliasing of the tail beyond nfft is far below the tolerance at this decay rate
    assert np.sqrt(np.mean((h_f[:n] - h_t[:n]) ** 2)) < 1e-6


def test_frequency_response_full_absorption():
    scene = SceneConfig.uniform(SHOEBOX, (1.0, 1.3, 1.2), (2.1, 2.9, 1.5), 1.0)
    net = build_network(scene)
    f = np.linspace(0, 20000, 101)
    H = frequency_response(net, f)
    ref = net.direct_gain * np.exp(-2j * np.pi * f * net.direct_delay / scene.sample_rate)
    assert np.allclose(H.values, ref, atol=1e-12)


def test_frequency_response_with_wall_filter():
    b, a = [0.4, 0.2], [1.0, -0.3]
    scene = SceneConfig.uniform((5, 5, 5), (1.3, 2.1, 1.7), (3.6, 3.0, 2.9), 0.0, wall_filters=((b, a),) * 6)
    nfft = 2**15
    H = frequency_response(build_network(scene), np.fft.rfftfreq(nfft, 1 / scene.sample_rate))
    h_t = build_network(scene).process(impulse(nfft))
    n = int(0.2 * scene.sample_rate)
    assert np.sqrt(np.mean((np.fft.irfft(H.values, nfft)[:n] - h_t[:n]) ** 2)) < 1e-6


def _toy_network():
    # very low sample rate keeps the recursion matrix small
    scene = SceneConfig.uniform((2.0, 2.5, 1.8), (0.6, 0.9, 0.7), (1.4, 1.7, 1.1), 0.4, sample_rate=600.0)
    return build_network(scene)


def test_poles_satisfy_determinant_condition():
    net = _toy_network()
    T = recursion_matrix(net)
    poles = np.linalg.eigvals(T)
    poles = poles[np.abs(poles) > 1e-6]
    assert np.all(np.abs(poles) < 1.0)
    for z in poles[np.argsort(-np.abs(poles))][:5]:
        assert pole_residual(net, z) < 1e-6
    assert pole_residual(net, 0.3 + 0.1j) > 1e-3


def test_mode_density_equals_pole_count():
    net = _toy_network()
    T = recursion_matrix(net)
    assert T.shape[0] == int(np.sum(net.internode_delays))
    assert mode_density(net).density == pytest.approx(T.shape[0] / net.sample_rate)
    n_poles = int(np.sum(np.abs(np.linalg.eigvals(T)) > 1e-9))
    assert n_poles == T.shape[0]


def test_describe(scene):
    d = build_network(scene).describe()
    assert len(d["nodes"]) == 6
    assert set(d["nodes"][0]["lines"]) == {"x1", "y0", "y1", "z0", "z1"}
    assert d["direct"]["gain"] == pytest.approx(1 / math.dist(scene.source_pos, scene.mic_pos))
