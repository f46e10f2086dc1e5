import numpy as np
import pytest

from loudcomp.analysis import speech_shaped_noise
from loudcomp.stoi import FS, remove_silent_frames, resample, stoi, third_octave_matrix
from loudcomp.synth import speechlike


def noisy(x, snr_db, seed):
    n = np.random.default_rng(seed).standard_normal(len(x))
    n *= np.sqrt(np.mean(x**2) / np.mean(n**2)) * 10 ** (-snr_db / 20)
    return x + n


def test_reference_values_at_10khz():
    # frozen from an independent reference implementation of classic STOI
    x = speechlike(3.0, 10000, seed=3)
    rng = np.random.default_rng(9)
    expected = {10: 0.705818605294928, 0: 0.6101264257550119, -5: 0.5564013526019719}
    for snr, value in expected.items():
        n = rng.standard_normal(len(x))
        n *= np.sqrt(np.mean(x**2) / np.mean(n**2)) * 10 ** (-snr / 20)
        assert stoi(x, x + n, 10000).value == pytest.approx(value, abs=1e-9)


def test_identical_signals_score_one(speech_corpus, fs):
    x = np.concatenate(speech_corpus[:2])
    assert stoi(x, x, fs).value == pytest.approx(1.0, abs=1e-3)


def test_decreasing_with_snr(speech_corpus, speech_template, fs):
    x = np.concatenate(speech_corpus[:3])
    noise = speech_shaped_noise(speech_template, len(x) / fs, fs, seed=11)[: len(x)]
    noise *= np.sqrt(np.mean(x**2) / np.mean(noise**2))
    scores = [stoi(x, x + noise * 10 ** (-snr / 20), fs).value for snr in (10, 5, 0, -5, -10)]
    assert all(a > b for a, b in zip(scores, scores[1:]))


def test_unrelated_signal_scores_low(fs):
    x = speechlike(3.0, fs, seed=1)
    y = speechlike(3.0, fs, seed=2)
    assert stoi(x, y, fs).value < 0.3


@pytest.mark.parametrize("a, b", [(0.1, 1.0), (1.0, 10.0), (7.5, 0.02)])
def test_scale_invariance(a, b, fs):
    x = speechlike(2.0, fs, seed=4)
    y = noisy(x, 0, 5)
    assert stoi(a * x, b * y, fs).value == pytest.approx(stoi(x, y, fs).value, abs=1e-6)


def test_not_symmetric(fs):
    x = speechlike(2.0, fs, seed=4)
    y = noisy(x, -5, 6)
    assert abs(stoi(x, y, fs).value - stoi(y, x, fs).value) > 1e-3


def test_appended_silence(fs):
    x = speechlike(2.0, fs, seed=7)
    y = noisy(x, 5, 8)
    base = stoi(x, y, fs).value
    pad = np.zeros(fs)
    assert stoi(np.concatenate([x, pad]), np.concatenate([y, pad]), fs).value == pytest.approx(base, abs=1e-3)


def test_silent_frames_removed():
    x = np.concatenate([np.random.default_rng(0).standard_normal(5000), np.zeros(5000)])
    xs, ys = remove_silent_frames(x, x)
    assert len(xs) < 5500
    np.testing.assert_array_equal(xs, ys)


def test_band_matrix():
    obm, centers = third_octave_matrix()
    assert obm.shape == (15, 257)
    assert centers[0] == 150.0
    assert np.all(obm.sum(axis=0) <= 1)


def test_resample_length_and_tone():
    t = np.arange(22050) / 22050
    y = resample(np.sin(2 * np.pi * 440 * t), 22050, FS)
    assert len(y) == 10000
    ref = np.sin(2 * np.pi * 440 * np.arange(10000) / FS)
    assert np.max(np.abs(y[200:-200] - ref[200:-200])) < 5e-3  # passband ripple ~0.01 dB


def test_input_validation(fs):
    x = speechlike(2.0, fs, seed=1)
    with pytest.raises(ValueError):
        stoi(x, x[:-1], fs)
    with pytest.raises(ValueError):
        stoi(x, x, 8000)
    with pytest.raises(ValueError):
        stoi(x[:2000], x[:2000], fs)
