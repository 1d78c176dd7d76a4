import logging

import numpy as np
import pytest

from sdn_reverb import SceneConfig, build_network
from sdn_reverb.io import (
    AudioBuffer,
    AudioFormatError,
    export_curve,
    load_audio,
    load_matrix,
    read_curve,
    save_matrix,
    write_audio,
)


def test_float32_round_trip_bit_exact(tmp_path):
    x = np.random.default_rng(0).uniform(-1, 1, (2, 1000)).astype(np.float32).astype(float)
    write_audio(tmp_path / "a.wav", AudioBuffer(x, 48000, "float32"))
    back = load_audio(tmp_path / "a.wav")
    assert back.sample_rate == 48000 and back.encoding == "float32"
    assert np.array_equal(back.data, x)


@pytest.mark.parametrize("enc,bits", [("pcm16", 16), ("pcm24", 24)])
def test_pcm_round_trip_within_lsb(tmp_path, enc, bits):
    x = np.random.default_rng(1).uniform(-0.99, 0.99, 2000)
    write_audio(tmp_path / "p.wav", AudioBuffer.mono(x, 44100, enc))
    back = load_audio(tmp_path / "p.wav")
    assert back.encoding == enc
    assert np.max(np.abs(back.data[0] - x)) <= 2.0 ** -(bits - 1)


def test_corrupt_header(tmp_path):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"RIFF\x00\x00\x00\x00WAVEjunkjunk")
    with pytest.raises(AudioFormatError):
        load_audio(bad)


def test_truncated_file(tmp_path):
    path = tmp_path / "t.wav"
    write_audio(path, AudioBuffer.mono(np.zeros(1000), 44100, "pcm16"))
    raw = path.read_bytes()
    path.write_bytes(raw[:-300])
    with pytest.raises(AudioFormatError, match="truncated"):
        load_audio(path)


def test_rir_round_trip_preserves_first_order(tmp_path):
    scene = SceneConfig.uniform((3.2, 4.0, 2.7), (1.0, 1.3, 1.2), (2.1, 2.9, 1.5), 0.3)
    net = build_network(scene)
    x = np.zeros(1500)
    x[0] = 1.0
    h = net.process(x)
    write_audio(tmp_path / "rir.wav", AudioBuffer.mono(h, scene.sample_rate))
    back = load_audio(tmp_path / "rir.wav").data[0]
    idx = net.source_delays + net.mic_delays
    assert np.allclose(back[idx], h[idx], rtol=2**-23)


def test_empty_and_nonfinite_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_audio(tmp_path / "e.wav", AudioBuffer.mono(np.zeros(0), 44100))
    with pytest.raises(ValueError):
        write_audio(tmp_path / "n.wav", AudioBuffer.mono(np.array([0.0, np.inf]), 44100))


def test_clipping_reported(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        n = write_audio(tmp_path / "c.wav", AudioBuffer.mono(np.array([0.5, 1.5, -2.0, 0.1]), 8000, "pcm16"))
    assert n == 2
    assert "clipped 2 samples" in caplog.text


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        write_audio(tmp_path / "missing" / "x.wav", AudioBuffer.mono(np.zeros(10), 8000))


def test_curve_export(tmp_path):
    t = np.arange(5) / 10
    export_curve(tmp_path / "edc.csv", {"time_s": t, "value": -t})
    lines = (tmp_path / "edc.csv").read_text().splitlines()
    assert lines[0] == "time_s,value"
    assert lines[2] == "0.1,-0.1"
    assert np.array_equal(read_curve(tmp_path / "edc.csv")["value"], -t)


def test_curve_comment_line(tmp_path):
    export_curve(tmp_path / "ned.csv", {"time_s": [0.01], "value": [0.5]}, comments=["window_s=0.02"])
    assert (tmp_path / "ned.csv").read_text().startswith("# window_s=0.02\n")


def test_curve_length_mismatch(tmp_path):
    with pytest.raises(ValueError):
        export_curve(tmp_path / "x.csv", {"a": [1, 2], "b": [1]})


def test_matrix_csv(tmp_path):
    A = np.random.default_rng(0).standard_normal((4, 4))
    save_matrix(tmp_path / "A.csv", A)
    assert np.array_equal(load_matrix(tmp_path / "A.csv"), A)
    np.savetxt(tmp_path / "r.csv", np.ones((2, 3)), delimiter=",")
    with pytest.raises(ValueError):
        load_matrix(tmp_path / "r.csv")
