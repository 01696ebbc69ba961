import numpy as np
import pytest

from dmtomo.config import ExperimentConfig, GridConfig, MirrorConfig
from dmtomo.optics import BeamParams, Grid
from dmtomo.pipeline import run_pipeline
from dmtomo.protocol import build_mub_d4


@pytest.fixture(scope="session")
def mubs():
    return build_mub_d4()


@pytest.fixture(scope="session")
def beam():
    return BeamParams()


@pytest.fixture(scope="session")
def grid(beam):
    return Grid.for_beam(beam, 256)


@pytest.fixture(scope="session")
def small_config():
    """Coarse, fast configuration for plumbing tests."""
    return ExperimentConfig(
        grid=GridConfig(n=64),
        mirror=MirrorConfig(max_evals=100, optimization_n=32),
        n_random=5,
    )


@pytest.fixture(scope="session")
def default_report():
    """The full default virtual experiment, run once per session."""
    return run_pipeline(ExperimentConfig())


def random_density(rng, dim=4, rank=None):
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
