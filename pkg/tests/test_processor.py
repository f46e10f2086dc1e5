import numpy as np
import pytest

from loudcomp.analysis import speech_shaped_noise, third_octave_spectrum
from loudcomp.audiogram import load_fixture
from loudcomp.gaintable import table_for_audiogram
from loudcomp.processor import (
    ProcessorConfig,
    _prepare,
    benchmark,
    frame_gains,
    process,
    process_sliding,
)
from loudcomp.spectral import scale_to_level


def rel_rms(a, b):
    return np.sqrt(np.mean((a - b) ** 2) / np.mean(b**2))


@pytest.fixture(scope="module")
def clip(speech_corpus):
    return np.concatenate(speech_corpus[:2])


@pytest.mark.parametrize("fn", [process, process_sliding])
@pytest.mark.parametrize("window", ["hann", "rect"])
def test_identity_at_zero_loss(fn, window, zero_table, clip):
    y = fn(clip, zero_table, ProcessorConfig(window=window))
    assert y.shape == clip.shape
    assert rel_rms(y, clip) < 1e-9


@pytest.mark.parametrize("fn", [process, process_sliding])
def test_silence_stays_silent(fn, sloping_table):
    y = fn(np.zeros(3000), sloping_table)
    assert np.all(y == 0.0)


def test_short_inputs_and_impulse(zero_table, sloping_table):
    for n in (1, 5, 511, 1025):
        x = np.zeros(n)
        x[n // 2] = 0.5
        np.testing.assert_allclose(process_sliding(x, zero_table), x, atol=1e-12)
        assert len(process_sliding(x, sloping_table)) == n


def test_sliding_matches_naive(sloping_table, clip):
    y0 = process(clip, sloping_table)
    y1 = process_sliding(clip, sloping_table)
    assert rel_rms(y1, y0) < 1e-5
    y2 = process_sliding(clip[:8000], sloping_table, ProcessorConfig(resync_interval=1))
    assert rel_rms(y2, process(clip[:8000], sloping_table)) < 1e-9


def test_sliding_matches_naive_rect(sloping_table, clip):
    cfg = ProcessorConfig(window="rect")
    assert rel_rms(process_sliding(clip, sloping_table, cfg), process(clip, sloping_table, cfg)) < 1e-5


@pytest.mark.parametrize("table_name", ["zero_table", "sloping_table"])
def test_zero_lag(request, table_name, clip):
    table = request.getfixturevalue(table_name)
    y = process_sliding(clip, table)
    xc = np.correlate(y, clip, mode="full")
    assert np.argmax(np.abs(xc)) - (len(clip) - 1) == 0


def test_deterministic(sloping_table, clip):
    a = process_sliding(clip, sloping_table)
    b = process_sliding(clip, sloping_table)
    assert a.tobytes() == b.tobytes()
    c = process(clip, sloping_table)
    assert c.tobytes() == process(clip, sloping_table).tobytes()


def test_compression_60_to_70(sloping_table, speech_template, fs):
    noise = speech_shaped_noise(speech_template, 3.0, fs, seed=4)
    lo = process_sliding(scale_to_level(noise, 60.0), sloping_table)
    hi = process_sliding(scale_to_level(noise, 70.0), sloping_table)
    delta = third_octave_spectrum(hi, fs).levels - third_octave_spectrum(lo, fs).levels
    assert np.all(delta <= 10.0 + 1e-9)
    # the amplified high bands grow clearly less than 10 dB
    assert np.all(delta[-6:] < 8.0)


@pytest.mark.parametrize("name", ["flat_0", "sloping"])
@pytest.mark.parametrize("level", [50.0, 65.0, 80.0])
def test_gain_trajectory_smooth(name, level, speech_template, fs):
    table = table_for_audiogram(load_fixture(name), fs)
    cfg = ProcessorConfig()
    worst = 0.0
    for seed, kind in ((0, "ssn"), (1, "white")):
        if kind == "ssn":
            x = speech_shaped_noise(speech_template, 1.5, fs, seed=seed)
        else:
            x = np.random.default_rng(seed).standard_normal(int(1.5 * fs))
        x = scale_to_level(x, level)
        _, xp, lo, hi1, offsets = _prepare(x, fs, table, cfg)
        for start in range(1024, len(x) - 4096, 8192):
            _, g = frame_gains(xp, start, start + 4096, table, cfg, lo, hi1, offsets)
            worst = max(worst, float(np.abs(np.diff(g, axis=0)).max()))
    assert worst < 0.05


def test_validation(sloping_table):
    with pytest.raises(ValueError):
        ProcessorConfig(window_length=1000)
    with pytest.raises(ValueError):
        ProcessorConfig(hop=2)
    with pytest.raises(ValueError):
        ProcessorConfig(window="hamming")
    with pytest.raises(ValueError):
        ProcessorConfig(resync_interval=0)
    with pytest.raises(ValueError):
        process(np.zeros(100), sloping_table, sample_rate=16000)
    with pytest.raises(ValueError):
        process_sliding(np.zeros((2, 100)), sloping_table)
    with pytest.raises(ValueError):
        process(np.zeros(0), sloping_table)


def test_benchmark_reports_rate(sloping_table):
    res = benchmark(sloping_table, seconds=0.5)
    assert res["samples"] == int(0.5 * 22050)
    assert res["samples_per_sec"] > 0
    assert res["realtime_factor"] == pytest.approx(res["samples_per_sec"] / 22050)
