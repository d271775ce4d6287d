import numpy as np
import pytest

from noisebench import synth
from noisebench.audio import AudioBuffer

from helpers import SR


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Twelve speech-like utterances over three speakers, written as WAV + Kaldi files."""
    root = tmp_path_factory.mktemp("clean")
    return synth.clean_corpus(root, 12, seed=7, n_speakers=3, min_dur=1.2, max_dur=2.0)


@pytest.fixture(scope="session")
def noise_buffer():
    return synth.stationary_noise(60.0, -30.0, np.random.default_rng(99))


@pytest.fixture(scope="session")
def noise_file(tmp_path_factory, noise_buffer):
    from noisebench.audio import write_wav

    path = tmp_path_factory.mktemp("noise") / "noise.wav"
    write_wav(AudioBuffer(noise_buffer.samples, SR), path)
    return path


ACCEPTANCE_RESULTS = []


@pytest.fixture
def criterion():
    """Context manager recording one acceptance criterion's pass/fail line."""
    import contextlib
    import time

    @contextlib.contextmanager
    def run(name):
        start = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            ACCEPTANCE_RESULTS.append((name, False, time.perf_counter() - start, str(exc).splitlines()[0][:100]))
            raise
        ACCEPTANCE_RESULTS.append((name, True, time.perf_counter() - start, ""))

    return run


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, secs, why in ACCEPTANCE_RESULTS:
        line = f"{'PASS' if ok else 'FAIL'}  {name}  ({secs:.2f} s)"
        terminalreporter.write_line(line + (f"  -- {why}" if why else ""))
