import numpy as np
import pytest

from loudcomp.erb import erb_bandwidth, erb_number, erb_number_to_hz


def test_erb_number_values():
    assert erb_number(0) == 0.0
    # 21.4 * log10(5.37)
    assert erb_number(1000) == pytest.approx(15.62, abs=0.005)
    assert erb_number(2000) > erb_number(1000)


def test_erb_bandwidth_values():
    assert erb_bandwidth(1000) == pytest.approx(132.6, abs=0.05)
    assert erb_bandwidth(0) == pytest.approx(24.7)
    assert erb_bandwidth(4000) / erb_bandwidth(1000) == pytest.approx(3.43, abs=0.02)


def test_negative_frequency_rejected():
    with pytest.raises(ValueError):
        erb_number(-1.0)
    with pytest.raises(ValueError):
        erb_bandwidth(-1.0)


def test_erb_number_roundtrip_and_monotone():
    f = np.linspace(0, 20000, 2001)
    cams = erb_number(f)
    assert np.all(np.diff(cams) > 0)
    np.testing.assert_allclose(erb_number_to_hz(cams), f, atol=1e-8)
