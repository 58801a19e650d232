"""Shared fixtures: tiny random and synthetic datasets."""

import numpy as np
import pytest

from gaitnet.data import Dataset, MotionSample, normalize_dataset
from gaitnet.skeleton import NUM_COORDS, NUM_JOINTS, ClassLabel
from gaitnet.synth import generate_dataset


def make_sample(
    rng: np.random.Generator,
    label: ClassLabel = ClassLabel.HEALTHY,
    frames: int = 12,
    sample_id: str = "s0",
    synthetic: bool = False,
) -> MotionSample:
    positions = rng.normal(0.0, 0.3, size=(frames, NUM_JOINTS, NUM_COORDS))
    return MotionSample(
        positions=positions, label=label, sample_id=sample_id, is_synthetic=synthetic
    ).validate()


def make_dataset(rng: np.random.Generator, counts: dict, frames: int = 12) -> Dataset:
    samples = []
    for label, n in counts.items():
        for k in range(n):
            samples.append(
                make_sample(rng, ClassLabel(label), frames, f"{ClassLabel(label).name}_{k}")
            )
    return Dataset(samples=samples)


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # Stash phase reports on the item so the acceptance banner fixture
    # can tell pass from fail from skip after the test body ran.
    outcome = yield
    report = outcome.get_result()
    setattr(item, "rep_" + report.when, report)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_synth():
    """24 normalized synthetic samples (6 per class) at 40 frames."""
    ds = generate_dataset({label: 6 for label in ClassLabel}, seed=5)
    return normalize_dataset(ds, t_target=40)
