import numpy as np
import pytest

from artk.config import PipelineConfig
from artk.rng import SplitMix64
from artk.tensor import _fallback

try:
    from artk.tensor import _kernels
except ImportError:  # extension not built
    _kernels = None

BACKENDS = [pytest.param(_fallback, id="python")]
if _kernels is not None:
    BACKENDS.append(pytest.param(_kernels, id="cython"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def small_config():
    return PipelineConfig(T=8, N=2, tau=4, S=2, L=2, h=2, d=8, C_max=18, seed=7)


def random_inputs(config, seed=1):
    rng = SplitMix64(seed)
    features = rng.normal((config.T, config.N, config.d)).astype(np.float32)
    prompt = rng.normal((config.S, config.d)).astype(np.float32)
    return features, prompt


_acceptance: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid or report.when != "call":
        return
    name = report.nodeid.split("::")[-1]
    _acceptance.append((name, "PASS" if report.passed else "FAIL", f"{report.duration:.2f}s"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, duration in _acceptance:
        terminalreporter.write_line(f"{status}  {name}  ({duration})")
