import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile(
    "ci", max_examples=60, derandomize=True, deadline=None
)
hypothesis.settings.load_profile("ci")


@pytest.fixture(scope="session")
def x_grid():
    return np.linspace(1.0, 8.0, 15)
