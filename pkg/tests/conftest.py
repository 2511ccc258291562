import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kgalign import kernels, synth
from kgalign.split import split_alignments

settings.register_profile(
    "default", deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_addoption(parser):
    parser.addoption("--kernel-backend", default="auto",
                     choices=("auto", "cython", "numpy"),
                     help="force a kernel backend for the whole session")


def pytest_configure(config):
    kernels.use_backend(config.getoption("--kernel-backend"))


SMALL_SYNTH = synth.SynthConfig(
    entities_per_kg=40, relation_types=3, triples_per_kg=110, aligned_fraction=1.0,
    mirror_dropout=0.2, numeric_attrs=2, numeric_noise_sigma=0.05,
    image_dim=8, image_noise_sigma=0.05, seed=20)


@pytest.fixture(scope="session")
def small_store():
    store, alignments = synth.generate(SMALL_SYNTH)
    return store, alignments


@pytest.fixture(scope="session")
def small_split(small_store):
    _, alignments = small_store
    return split_alignments(alignments, 80, seed=5)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(123))
