import numpy as np
import pytest
from scipy.io import wavfile

from loudcomp.wavio import WavError, read_wav, write_wav


def test_float_roundtrip_keeps_overs(tmp_path):
    x = np.array([0.0, 0.5, -1.5, 2.0, 0.25])
    report = write_wav(tmp_path / "a.wav", x, 22050)
    assert report.clipped == 2
    y, fs = read_wav(tmp_path / "a.wav")
    assert fs == 22050
    np.testing.assert_array_equal(y, x.astype(np.float32))


def test_clip_policy_counts(tmp_path):
    x = np.array([0.0, 0.5, -1.5, 2.0, 0.999])
    report = write_wav(tmp_path / "a.wav", x, 16000, "clip")
    assert report.clipped == 2
    y, _ = read_wav(tmp_path / "a.wav")
    assert y.max() == 32767 / 32768 and y.min() == -1.0
    assert y[1] == 0.5


def test_normalize_policy(tmp_path):
    x = np.array([0.0, 0.5, -2.0])
    report = write_wav(tmp_path / "a.wav", x, 16000, "normalize")
    assert report.scale == 0.5 and report.clipped == 0
    y, _ = read_wav(tmp_path / "a.wav")
    assert y[2] == -1.0


def test_int16_exact(tmp_path):
    pcm = np.array([0, 1, -1, 32767, -32768, 1234], dtype=np.int16)
    wavfile.write(tmp_path / "p.wav", 8000, pcm)
    y, _ = read_wav(tmp_path / "p.wav")
    np.testing.assert_array_equal(y, pcm / 32768.0)
    write_wav(tmp_path / "q.wav", y, 8000, "clip")
    assert wavfile.read(tmp_path / "q.wav")[1].tobytes() == pcm.tobytes()


def test_rejects_stereo_and_garbage(tmp_path):
    wavfile.write(tmp_path / "s.wav", 8000, np.zeros((10, 2), dtype=np.int16))
    with pytest.raises(WavError, match="mono"):
        read_wav(tmp_path / "s.wav")
    (tmp_path / "g.wav").write_bytes(b"RIFF1234WAVEjunk")
    with pytest.raises(WavError):
        read_wav(tmp_path / "g.wav")
    wavfile.write(tmp_path / "i.wav", 8000, np.zeros(10, dtype=np.int32))
    with pytest.raises(WavError, match="unsupported"):
        read_wav(tmp_path / "i.wav")
    with pytest.raises(FileNotFoundError):
        read_wav(tmp_path / "missing.wav")


def test_unknown_policy(tmp_path):
    with pytest.raises(ValueError):
        write_wav(tmp_path / "a.wav", np.zeros(4), 8000, "dither")
