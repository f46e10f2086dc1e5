import numpy as np
import pytest

from loudcomp.analysis import average_spectra
from loudcomp.audiogram import load_fixture
from loudcomp.gaintable import table_for_audiogram
from loudcomp.synth import speechlike

FS = 22050

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash[ACCEPTANCE]

    def record(criterion: str, ok: bool, detail: str):
        lines.append(f"{criterion:<4} {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return record


@pytest.fixture(scope="session")
def fs():
    return FS


@pytest.fixture(scope="session")
def sloping():
    return load_fixture("sloping")


@pytest.fixture(scope="session")
def zero_loss():
    return load_fixture("flat_0")


@pytest.fixture(scope="session")
def sloping_table(sloping):
    return table_for_audiogram(sloping, FS)


@pytest.fixture(scope="session")
def sloping_inverse_table(sloping):
    return table_for_audiogram(sloping, FS, "inverse")


@pytest.fixture(scope="session")
def zero_table(zero_loss):
    return table_for_audiogram(zero_loss, FS)


@pytest.fixture(scope="session")
def speech_corpus():
    """Twenty short speech-like clips, deterministic."""
    return [speechlike(1.5, FS, seed=s) for s in range(20)]


@pytest.fixture(scope="session")
def speech_template(speech_corpus):
    return average_spectra(speech_corpus[:6], FS)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session", autouse=True)
def table_cache(tmp_path_factory):
    """Keep cached gain tables out of the user's cache directory."""
    import os

    path = tmp_path_factory.mktemp("table-cache")
    old = os.environ.get("LOUDCOMP_CACHE_DIR")
    os.environ["LOUDCOMP_CACHE_DIR"] = str(path)
    yield path
    if old is None:
        os.environ.pop("LOUDCOMP_CACHE_DIR", None)
    else:
        os.environ["LOUDCOMP_CACHE_DIR"] = old
