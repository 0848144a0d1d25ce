import math
import os

import numpy as np
import pytest

from locuncert import (
    FilterbankSpec,
    Stimulus,
    StereoSetup,
    SweepConfig,
    build_dictionary,
    load_hrir_set,
    spherical_head_hrirs,
)

PAPER_HRIR_ENV = "LOCUNCERT_KEMAR_HRIR"


@pytest.fixture(scope="session")
def analytic_hrirs():
    return spherical_head_hrirs()


@pytest.fixture(scope="session")
def stimulus():
    return Stimulus()


@pytest.fixture(scope="session")
def filterbank():
    return FilterbankSpec()


@pytest.fixture(scope="session")
def dictionary(analytic_hrirs, stimulus):
    return build_dictionary(analytic_hrirs, stimulus)


@pytest.fixture(scope="session")
def setup():
    return StereoSetup(base_angle=math.radians(60.0), speaker_distance=2.0)


@pytest.fixture(scope="session")
def sweep_cache_dir(tmp_path_factory):
    return str(tmp_path_factory.mktemp("sweep-cache"))


@pytest.fixture(scope="session")
def sweep_config(setup, stimulus, dictionary, analytic_hrirs, sweep_cache_dir):
    return SweepConfig(
        setup=setup,
        stimulus=stimulus,
        dictionary=dictionary,
        hrirs=analytic_hrirs,
        cache_dir=sweep_cache_dir,
    )


@pytest.fixture(scope="session")
def paper_hrirs():
    """Measured HRIR set for paper-exact assertions; skips when not supplied."""
    path = os.environ.get(PAPER_HRIR_ENV)
    if not path:
        pytest.skip(f"set {PAPER_HRIR_ENV} to a measured HRIR JSON file")
    return load_hrir_set(path)


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
