import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kspacebench.core import SamplingMask, Scheme, SensitivityMaps

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_maps(rng, n_c, n_x, n_y, normalized=False) -> SensitivityMaps:
    data = random_complex(rng, (n_c, n_x, n_y))
    if normalized:
        data = data / np.sqrt(np.sum(np.abs(data) ** 2, axis=0))
    return SensitivityMaps(data, normalized=normalized)


def random_mask(rng, n_x, n_y, p=0.4) -> SamplingMask:
    bits = rng.random((n_x, n_y)) < p
    bits[n_x // 2, n_y // 2] = True
    return SamplingMask(bits, Scheme.RANDOM_RECT)


def full_mask(n_x, n_y) -> SamplingMask:
    bits = np.ones((n_x, n_y), dtype=bool)
    return SamplingMask(bits, Scheme.EQUISPACED_RECT, acs=SamplingMask(bits, Scheme.EQUISPACED_RECT))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
