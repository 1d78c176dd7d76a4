import pytest
from pydantic import ValidationError

from sdn_reverb.config import DEFAULT_CONFIG, parse_config

EXAMPLE = """
scene:
  room_dims: [3.2, 4.0, 2.7]
  source_pos: [1.0, 1.3, 1.2]
  mic_pos: [2.1, 2.9, 1.5]
  absorption: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
  reflection_sign: -1
  mic_directivity: {kind: cardioid, a: 0.5, axis: [0, 1, 0]}
matrix: {kind: orthogonal, seed: 7}
render: {duration: 0.5}
output: {path: out.csv, format: csv}
"""


def test_round_trip_identity():
    cfg = parse_config(EXAMPLE)
    assert parse_config(cfg.dumps()) == cfg
    assert parse_config(DEFAULT_CONFIG.dumps()) == DEFAULT_CONFIG


def test_to_scene():
    scene = parse_config(EXAMPLE).scene.to_scene()
    assert scene.wall_absorption == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    assert scene.reflection_sign == -1.0
    assert scene.mic_dir.kind == "cardioid" and scene.mic_axis == (0.0, 1.0, 0.0)


def test_wall_filter_broadcast():
    cfg = parse_config(EXAMPLE.replace("  reflection_sign: -1\n", "  wall_filter: {b: [0.5, 0.1], a: [1.0, -0.2]}\n"))
    scene = cfg.scene.to_scene()
    assert len(scene.wall_filters) == 6 and scene.wall_filters[3] == ((0.5, 0.1), (1.0, -0.2))


@pytest.mark.parametrize(
    "patch",
    [
        ("render: {duration: 0.5}", "render: {duration: 0.5, colour: red}"),
        ("render: {duration: 0.5}", "render: {duration: -1}"),
        ("kind: orthogonal", "kind: hadamard"),
        ("[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]", "[0.1, 0.2]"),
        ("reflection_sign: -1", "reflection_sign: 2"),
    ],
)
def test_invalid_rejected(patch):
    with pytest.raises(ValidationError):
        parse_config(EXAMPLE.replace(*patch))


def test_non_mapping_rejected():
    with pytest.raises(ValueError):
        parse_config("- 1\n- 2\n")
