"""Simulation and tomography toolkit for spatial qudits measured with a deformable mirror."""

from .config import ExperimentConfig
from .pipeline import RunReport, run_pipeline
from .protocol import MubSet, build_mub_d4, verify_mub
from .qlin import fidelity, random_pure_state
from .tomo import Projector, detector_tomography, eta, linear_inversion, mle_reconstruct

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "MubSet",
    "Projector",
    "RunReport",
    "build_mub_d4",
    "detector_tomography",
    "eta",
    "fidelity",
    "linear_inversion",
    "mle_reconstruct",
    "random_pure_state",
    "run_pipeline",
    "verify_mub",
]
