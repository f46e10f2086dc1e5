import numpy as np
import pytest
from scipy.signal import butter, sosfiltfilt

from loudcomp.analysis import (
    NOMINAL_CENTERS,
    average_spectra,
    loudness_restoration_report,
    match_loudness,
    restoration_csv,
    speech_shaped_noise,
    spectrum_csv,
    third_octave_spectrum,
)
from loudcomp.loudness import EarModel
from loudcomp.processor import process_sliding
from loudcomp.spectral import mean_square_level, scale_to_level


def test_band_partition_completeness(fs):
    x = np.random.default_rng(0).standard_normal(4 * fs)
    sos = butter(8, [70, 7000], btype="band", fs=fs, output="sos")
    x = sosfiltfilt(sos, x)
    spec = third_octave_spectrum(x, fs)
    total = 10 * np.log10(spec.powers.sum() / 0.5) + 100.0
    assert total == pytest.approx(mean_square_level(x), abs=0.2)


def test_tone_lands_in_its_band(fs):
    t = np.arange(2 * fs) / fs
    spec = third_octave_spectrum(np.sin(2 * np.pi * 1000 * t), fs)
    i = NOMINAL_CENTERS.index(1000)
    assert spec.levels[i] == pytest.approx(100.0, abs=0.1)
    assert np.all(np.delete(spec.levels, i) < 60)
    assert len(spec.centers) == 23 and spec.centers[0] == 50 and spec.centers[-1] == 8000


def test_average_is_order_independent(speech_corpus, fs):
    a = average_spectra(speech_corpus[:8], fs)
    b = average_spectra(speech_corpus[:8][::-1], fs)
    assert a.levels.tobytes() == b.levels.tobytes()
    with pytest.raises(ValueError):
        average_spectra([], fs)


def test_speech_shaped_noise_follows_template(speech_template, fs):
    noise = speech_shaped_noise(speech_template, 4.0, fs, seed=1)
    got = third_octave_spectrum(noise, fs).levels
    np.testing.assert_allclose(got, speech_template.levels, atol=0.5)
    again = speech_shaped_noise(speech_template, 4.0, fs, seed=1)
    assert noise.tobytes() == again.tobytes()


@pytest.mark.parametrize("g", [-12.0, -6.0, 0.0, 6.0, 12.0])
def test_match_loudness_recovers_gain(g, speech_corpus, fs):
    x = scale_to_level(np.concatenate(speech_corpus[:2]), 65.0)
    assert match_loudness(x, x * 10 ** (g / 20), fs) == pytest.approx(g, abs=0.1)


def test_match_loudness_rejects_silence(fs):
    with pytest.raises(ValueError):
        match_loudness(np.zeros(fs), np.ones(fs) * 0.1, fs)


def test_restoration_zero_loss_is_exact(zero_loss, zero_table, speech_template, fs):
    x = scale_to_level(speech_shaped_noise(speech_template, 2.0, fs, seed=2), 65.0)
    y = process_sliding(x, zero_table)
    report = loudness_restoration_report(x, y, fs, EarModel(zero_loss))
    assert report.median_abs_err < 1e-6


def test_restoration_unprocessed_is_far_off(sloping, speech_template, fs):
    x = scale_to_level(speech_shaped_noise(speech_template, 2.0, fs, seed=2), 65.0)
    report = loudness_restoration_report(x, x, fs, EarModel(sloping))
    assert report.median_abs_err > 0.5


def test_restoration_sloping_65(sloping, sloping_table, speech_template, fs):
    x = scale_to_level(speech_shaped_noise(speech_template, 3.0, fs, seed=2), 65.0)
    report = loudness_restoration_report(x, process_sliding(x, sloping_table), fs, EarModel(sloping))
    assert report.median_abs_err < 0.10
    assert np.all(np.isnan(report.err_rel) | np.isfinite(report.err_rel))


def test_csv_layouts(sloping, speech_template, fs):
    spec = third_octave_spectrum(speech_shaped_noise(speech_template, 1.0, fs, seed=0), fs)
    lines = spectrum_csv(spec).splitlines()
    assert lines[0] == "band_hz,level_db" and len(lines) == 24
    assert lines[1].startswith("50,")
    x = scale_to_level(speech_shaped_noise(speech_template, 1.0, fs, seed=0), 65.0)
    text = restoration_csv(loudness_restoration_report(x, x, fs, EarModel(sloping)))
    assert text.splitlines()[0] == "cam,err_rel"
