import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from toeplitz_trace.symbol import FourierSymbol

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_trig(rng: np.random.Generator, degree: int, analytic: bool = False, scale: float = 1.0) -> FourierSymbol:
    c = rng.standard_normal(2 * degree + 1) + 1j * rng.standard_normal(2 * degree + 1)
    c *= scale / (1 + np.abs(np.arange(-degree, degree + 1)))
    if analytic:
        c[:degree] = 0
    return FourierSymbol(c)


@st.composite
def trig_polys(draw, max_degree: int = 16, analytic: bool = False):
    degree = draw(st.integers(1, max_degree))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_trig(np.random.default_rng(seed), degree, analytic)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
