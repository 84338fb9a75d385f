"""WAV reading and writing."""

import numpy as np
import pytest

from mixsim.audio import AudioFileError, read_audio, write_audio


def test_float32_round_trip_bit_identical(tmp_path):
    data = np.linspace(-1.0, 1.0, 1000).astype(np.float32)
    path = tmp_path / "f.wav"
    write_audio(path, data, 8000, encoding="float32")
    loaded, rate = read_audio(path)
    assert rate == 8000
    assert loaded.dtype == np.float32
    assert np.array_equal(loaded, data)


def test_pcm16_scaling_convention(tmp_path):
    # -32768 maps to -1.0 and back
    data = np.array([-1.0, -0.5, 0.0, 0.5, 32767 / 32768.0])
    path = tmp_path / "p.wav"
    write_audio(path, data, 8000, encoding="pcm16")
    loaded, _ = read_audio(path)
    assert np.array_equal(loaded, data)


def test_pcm16_rounds_half_away_and_clips(tmp_path):
    path = tmp_path / "c.wav"
    # 0.5/32768 rounds away from zero; 2.0 clips to 32767
    write_audio(path, np.array([0.5 / 32768.0, -0.5 / 32768.0, 2.0, -2.0]),
                8000, encoding="pcm16")
    loaded, _ = read_audio(path)
    assert np.array_equal(
        loaded * 32768.0, np.array([1.0, -1.0, 32767.0, -32768.0])
    )


def test_multichannel_orientation(tmp_path):
    data = np.stack([np.ones(64, dtype=np.float32) * 0.1,
                     np.ones(64, dtype=np.float32) * -0.2])
    path = tmp_path / "m.wav"
    write_audio(path, data, 16000)
    loaded, rate = read_audio(path)
    assert loaded.shape == (2, 64)
    assert np.array_equal(loaded, data)


def test_truncated_file_error_names_path(tmp_path):
    good = tmp_path / "ok.wav"
    write_audio(good, np.zeros(100, dtype=np.float32), 8000)
    broken = tmp_path / "broken.wav"
    broken.write_bytes(good.read_bytes()[:20])
    with pytest.raises(AudioFileError, match="broken.wav"):
        read_audio(broken)


def test_unsupported_write_encoding(tmp_path):
    with pytest.raises(ValueError, match="encoding"):
        write_audio(tmp_path / "x.wav", np.zeros(10), 8000, encoding="mp3")
