import numpy as np
import pytest

from ibgzsl.cli import BENCHMARK_DEFAULTS
from ibgzsl.data import SyntheticSpec, make_synthetic


@pytest.fixture(scope="session")
def benchmark_bundles():
    """The default synthetic benchmark under the five evaluation seeds."""
    return {seed: make_synthetic(SyntheticSpec(seed=seed, **BENCHMARK_DEFAULTS))
            for seed in range(5)}
