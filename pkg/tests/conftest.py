import pathlib
import sys
import time

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from topohough import experiments as E  # noqa: E402


def _timed(run, cfg):
    t0 = time.perf_counter()
    res = run(cfg)
    return res, time.perf_counter() - t0


# default-config runs, shared by the tests that need them: (result, seconds)

@pytest.fixture(scope="session")
def noise_full():
    return _timed(E.run_noise_experiment, E.NoiseExpConfig())


@pytest.fixture(scope="session")
def sampling_full():
    return _timed(E.run_sampling_experiment, E.SamplingExpConfig())


@pytest.fixture(scope="session")
def stability_full():
    return _timed(E.run_stability_experiment, E.StabilityExpConfig())


ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n}. {name}: {detail}")
