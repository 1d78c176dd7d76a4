import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdn_reverb.geometry import (
    OMNI,
    DirectivityPattern,
    SceneConfig,
    SceneError,
    delay_samples,
    directivity_gain,
    first_order_reflection_points,
    image_source,
    validate_scene,
    wall_axis,
    wall_offset,
)

SHOEBOX = (3.2, 4.0, 2.7)


def interior(dims, margin=0.05):
    return st.tuples(*[st.floats(margin, d - margin) for d in dims])


def test_centered_cube_reflection_point():
    scene = SceneConfig.uniform((5, 5, 5), (2.5, 2.5, 2.5), (2.5, 2.5, 2.5), 0.5, direct_path_enabled=False)
    pts = first_order_reflection_points(scene)
    assert pts[0].position == (0.0, 2.5, 2.5)
    assert [p.wall_name for p in pts] == ["x0", "x1", "y0", "y1", "z0", "z1"]


def test_collinear_reflection_point():
    scene = SceneConfig.uniform((4, 4, 4), (1, 2, 2), (3, 2, 2), 0.5)
    assert np.allclose(first_order_reflection_points(scene)[0].position, (0, 2, 2))


def _brute_force_point(scene, wall, n=401):
    """Grid search for the wall point minimizing source -> point -> mic."""
    ax = wall_axis(wall)
    others = [i for i in range(3) if i != ax]
    u = np.linspace(0, scene.room_dims[others[0]], n)
    v = np.linspace(0, scene.room_dims[others[1]], n)
    U, V = np.meshgrid(u, v, indexing="ij")
    P = np.zeros(U.shape + (3,))
    P[..., ax] = wall_offset(wall, scene.room_dims)
    P[..., others[0]] = U
    P[..., others[1]] = V
    length = np.linalg.norm(P - scene.source_pos, axis=-1) + np.linalg.norm(P - scene.mic_pos, axis=-1)
    i, j = np.unravel_index(np.argmin(length), length.shape)
    return P[i, j], length[i, j]


@pytest.mark.parametrize("seed", range(5))
def test_reflection_points_match_grid_search(seed):
    rng = np.random.default_rng(seed)
    dims = np.array(SHOEBOX)
    scene = SceneConfig.uniform(SHOEBOX, rng.uniform(0.1, dims - 0.1), rng.uniform(0.1, dims - 0.1), 0.3)
    for p in first_order_reflection_points(scene):
        pos = np.array(p.position)
        assert np.all(pos >= 0) and np.all(pos <= dims)
        best, best_len = _brute_force_point(scene, p.wall_id)
        path = np.linalg.norm(pos - scene.source_pos) + np.linalg.norm(pos - scene.mic_pos)
        assert path <= best_len + 1e-12
        # grid step is 0.01 m at most
        assert np.linalg.norm(pos - best) < 0.05


@settings(max_examples=60, deadline=None)
@given(src=interior(SHOEBOX), mic=interior(SHOEBOX))
def test_specular_path_equals_image_distance(src, mic):
    scene = SceneConfig.uniform(SHOEBOX, src, mic, 0.2)
    for p in first_order_reflection_points(scene):
        x = np.array(p.position)
        path = np.linalg.norm(x - src) + np.linalg.norm(x - mic)
        image = np.linalg.norm(image_source(src, p.wall_id, SHOEBOX) - mic)
        assert path == pytest.approx(image, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(src=interior(SHOEBOX), mic=interior(SHOEBOX))
def test_swap_source_and_mic(src, mic):
    a = first_order_reflection_points(SceneConfig.uniform(SHOEBOX, src, mic, 0.2))
    b = first_order_reflection_points(SceneConfig.uniform(SHOEBOX, mic, src, 0.2))
    assert [p.position for p in a] == [p.position for p in b]


def test_image_source_is_mirror():
    img = image_source((1.0, 2.0, 0.5), 1, (4, 5, 3))
    assert np.allclose(img, (7.0, 2.0, 0.5))


def test_delay_samples_examples():
    scene = SceneConfig.uniform((5, 5, 5), (1, 1, 1), (2, 2, 2), 0.5)
    assert delay_samples(3.43, scene) == 441
    assert delay_samples(0.0, scene) == 0
    assert delay_samples(1.0, scene) == 128
    with pytest.raises(ValueError):
        delay_samples(-1.0, scene)


@given(d=st.floats(0, 50), e=st.floats(0, 1))
def test_delay_samples_is_floor_and_monotone(d, e):
    scene = SceneConfig.uniform((5, 5, 5), (1, 1, 1), (2, 2, 2), 0.5)
    n = delay_samples(d, scene)
    exact = scene.sample_rate * d / scene.sound_speed
    assert n <= exact < n + 1
    assert delay_samples(d + e, scene) >= n


def test_directivity_examples():
    assert directivity_gain(OMNI, (1, 0, 0), (0, 0, 0), (-3, 1, 2)) == 1.0
    card = DirectivityPattern.cardioid(0.5)
    assert directivity_gain(card, (1, 0, 0), (0, 0, 0), (2, 0, 0)) == pytest.approx(1.0)
    assert directivity_gain(card, (1, 0, 0), (0, 0, 0), (-2, 0, 0)) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        directivity_gain(card, (1, 0, 0), (1, 1, 1), (1, 1, 1))


def test_table_pattern_interpolates():
    pat = DirectivityPattern("table", angles=(0.0, math.pi), gains=(1.0, 0.0))
    assert pat.gain(math.pi / 2) == pytest.approx(0.5)


@given(a=st.floats(0, 1), theta=st.floats(0, math.pi))
def test_cardioid_nonnegative(a, theta):
    assert DirectivityPattern.cardioid(a).gain(theta) >= 0.0


def test_validate_scene():
    ok = SceneConfig.uniform((5, 5, 5), (1.2, 1.3, 1.4), (3.7, 3.6, 3.5), 0.5)
    rep = validate_scene(ok)
    assert rep.ok and not rep.violations

    bad = SceneConfig.uniform((5, 5, 5), (6, 1, 1), (2, 2, 2), 0.5)
    assert "source outside room" in validate_scene(bad).violations

    close = SceneConfig.uniform((5, 5, 5), (2.0, 2.5, 2.5), (3.0, 2.5, 2.5), 0.5)
    warnings = validate_scene(close, t_est=0.27).warnings
    assert any("ISO minimum 2.32" in w for w in warnings)


def test_validate_rejects_bad_absorption_and_coincidence():
    scene = SceneConfig.uniform((5, 5, 5), (1, 1, 1), (1, 1, 1), 1.5)
    v = validate_scene(scene).violations
    assert any("absorption" in s for s in v)
    assert any("coincide" in s for s in v)


def test_unstable_wall_filter_rejected():
    scene = SceneConfig.uniform((5, 5, 5), (1, 1, 1), (2, 2, 2), 0.0, wall_filters=(([1.0], [1.0, -1.5]),) * 6)
    assert any("unstable" in s for s in validate_scene(scene).violations)


def test_reflection_points_reject_outside():
    with pytest.raises(SceneError):
        first_order_reflection_points(SceneConfig.uniform((5, 5, 5), (0, 1, 1), (2, 2, 2), 0.5))


def test_scene_properties():
    scene = SceneConfig.uniform((2, 3, 4), (1, 1, 1), (1.5, 2, 3), (0.1, 0.2, 0.3, 0.4, 0.5, 0.6))
    assert scene.volume == 24
    assert scene.diameter == pytest.approx(math.sqrt(29))
    assert np.allclose(scene.reflection_gains(), np.sqrt(1 - np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6])))
