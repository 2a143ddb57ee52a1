import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from biortho.matrices import e1_fixture, swanson, SwansonParams

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def e1():
    return e1_fixture()[2]


@pytest.fixture(scope="session")
def swanson7():
    return swanson(SwansonParams(7, 0.4))[0]


def complex_arrays(n, lo=-1.0, hi=1.0):
    """Hypothesis strategy for complex vectors of length n with bounded parts."""
    part = st.floats(lo, hi, allow_nan=False, allow_infinity=False)
    return st.lists(st.tuples(part, part), min_size=n, max_size=n).map(
        lambda xs: np.array([complex(a, b) for a, b in xs])
    )


seeds = st.integers(0, 2**31 - 1)
