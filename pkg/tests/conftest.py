import numpy as np
import pytest

from rankattr import (
    Dataset,
    ScoringFunction,
    admissions_dataset,
    admissions_scorer,
)


@pytest.fixture(scope="session")
def admissions() -> Dataset:
    return admissions_dataset()


@pytest.fixture(scope="session")
def f1() -> ScoringFunction:
    return admissions_scorer()


@pytest.fixture(scope="session")
def small_random() -> Dataset:
    rng = np.random.default_rng(7)
    return Dataset(values=rng.uniform(0.0, 1.0, (9, 4)), feature_names=("a", "b", "c", "d"))


@pytest.fixture(scope="session")
def small_weights() -> ScoringFunction:
    return ScoringFunction(kind="linear", weights=(0.1, 0.2, 0.3, 0.4))
