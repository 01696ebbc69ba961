"""End-to-end virtual experiment.

Stages: MUB construction, mirror models for four scenarios (ideal projectors,
infinite-resolution phase conjugation, pixelated 6x6 mirror, membrane DM with
optimized strokes), detector tomography on the DM, then state tomography of
the 20 MUB elements and of ``n_random`` Haar-random pure states.
"""

import logging
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import serialize
from .config import ExperimentConfig
from .mirror import MirrorModel, ideal_phase_mirror, optimize_mirror, pixelated_mirror
from .optics import basis_fields
from .protocol import build_mub_d4, ideal_probability_matrix
from .qlin import fidelity, pure_density, random_pure_state
from .tomo import (
    detector_tomography,
    eta,
    ideal_projectors,
    linear_inversion,
    mle_reconstruct,
    probability_matrix,
    simulate_counts,
)

log = logging.getLogger(__name__)

SCENARIOS = ("ideal", "inf", "pixel", "dm")
HIST_EDGES = np.round(np.linspace(0.9, 1.0, 11), 10)


class PipelineError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


@contextmanager
def stage(name, timings=None):
    log.info("stage: %s", name)
    t0 = time.perf_counter()
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc
    if timings is not None:
        timings[name] = time.perf_counter() - t0


def rng_streams(seed):
    """Independent RNG seeds for each randomized stage."""
    names = ("mirror", "detector", "mub_counts", "states", "state_counts")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return dict(zip(names, children))


def fidelity_histogram(fids):
    """Counts in 0.01-wide bins over [0.9, 1.0] plus an underflow bin below 0.9.

    Returns ``[(lo, hi, count), ...]`` with the underflow bin first.
    """
    fids = np.asarray(fids, dtype=float)
    rows = [(0.0, 0.9, int(np.sum(fids < 0.9)))]
    for k in range(10):
        lo, hi = HIST_EDGES[k], HIST_EDGES[k + 1]
        if k == 9:
            n = np.sum((fids >= lo) & (fids <= hi))
        else:
            n = np.sum((fids >= lo) & (fids < hi))
        rows.append((float(lo), float(hi), int(n)))
    return rows


def mirror_model(config, n=None):
    return MirrorModel(
        config.beam_params(), config.make_grid(n), config.layout(), config.influence(), config.mirror.max_stroke
    )


def scenario_projectors(name, config, mubs=None, model=None, seed=None):
    """True (model) projectors of one scenario, in flat MUB order."""
    mubs = mubs or build_mub_d4()
    if name == "ideal":
        return ideal_projectors(mubs.elements)
    model = model or mirror_model(config)
    beam, grid = model.beam, model.grid
    if name == "inf":
        return [model.transfer(ideal_phase_mirror(v, beam, grid, model.basis)).projector() for v in mubs.elements]
    if name == "pixel":
        return [model.transfer(pixelated_mirror(v, model.layout, beam, grid)).projector() for v in mubs.elements]
    if name == "dm":
        states = optimize_dm(config, mubs, seed)
        return [model.transfer(s).projector() for s in states]
    raise ValueError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")


def optimize_dm(config, mubs, seed=None):
    """Optimized mirror states for all 20 MUB targets."""
    seed = config.seed if seed is None else seed
    coarse = mirror_model(config, config.mirror.optimization_n)
    seeds = rng_streams(seed)["mirror"].spawn(len(mubs))
    out = []
    for i, target in enumerate(mubs.elements):
        res = optimize_mirror(target, coarse, seed=seeds[i], max_evals=config.mirror.max_evals)
        log.debug("target %d: coupling %.4f -> %.4f", i, res.initial_coupling, res.coupling)
        out.append(res.state)
    return out


def measure(rhos, projectors, config, seed):
    """Detection probabilities of each state, from counts or exactly."""
    if not config.noise:
        return np.array([[p.efficiency * np.vdot(p.direction, r @ p.direction).real for p in projectors] for r in rhos])
    counts = simulate_counts(rhos, projectors, config.photons, config.split_ratio, seed, config.efficiency)
    return counts


def reconstruct(data, i, projectors, config):
    if not config.noise:
        return linear_inversion(data[i], projectors)
    if config.estimator == "mle":
        return mle_reconstruct(data.row(i), projectors).rho
    return linear_inversion(data.probabilities()[i], projectors)


def detector_calibration(dm_true, mubs, config, seed, return_counts=False):
    """Measured P matrix of the DM and the projectors recovered from it."""
    rhos = np.array([pure_density(v) for v in mubs.elements])
    data = measure(rhos, dm_true, config, seed)
    p = data if not config.noise else data.probabilities()
    recovered = detector_tomography(p, mubs.elements)
    if return_counts:
        return p, recovered, data if config.noise else None
    return p, recovered


@dataclass
class RunReport:
    p_ideal: np.ndarray
    p_inf: np.ndarray
    p_pixel: np.ndarray
    p_dm: np.ndarray
    projectors: list
    eta: dict
    mub_fidelities: np.ndarray
    random_fidelities: np.ndarray
    histogram: list = field(default_factory=list)
    model_projectors: dict = field(default_factory=dict)
    detector_counts: object = None
    timings: dict = field(default_factory=dict)  # wall seconds per stage, not serialized

    def matrix(self, scenario):
        return {"ideal": self.p_ideal, "inf": self.p_inf, "pixel": self.p_pixel, "dm": self.p_dm}[scenario]

    @property
    def summary(self):
        def stats(f):
            f = np.asarray(f)
            return {"n": int(f.size), "mean": float(f.mean()) if f.size else None,
                    "min": float(f.min()) if f.size else None}
        return {"eta": self.eta, "mub": stats(self.mub_fidelities), "random": stats(self.random_fidelities)}

    def write(self, out_dir):
        for name in SCENARIOS:
            serialize.write_atomic(os.path.join(out_dir, f"pmatrix_{name}.csv"), serialize.matrix_csv(self.matrix(name)))
        serialize.write_atomic(os.path.join(out_dir, "projectors.json"),
                               serialize.dumps_json([p.to_dict() for p in self.projectors]))
        serialize.write_atomic(os.path.join(out_dir, "summary.json"), serialize.dumps_json(self.summary))
        rows = [("mub", i, f) for i, f in enumerate(self.mub_fidelities)]
        rows += [("random", i, f) for i, f in enumerate(self.random_fidelities)]
        serialize.write_atomic(os.path.join(out_dir, "fidelities.csv"),
                               serialize.rows_csv(["set", "index", "fidelity"], rows))
        serialize.write_atomic(os.path.join(out_dir, "histogram.csv"),
                               serialize.rows_csv(["lo", "hi", "count"], self.histogram))
        if self.detector_counts is not None:
            c = self.detector_counts
            rows = [(i, j, int(c.signal[i, j]), int(c.reference[i, j])) for i, j in np.ndindex(c.shape)]
            serialize.write_atomic(os.path.join(out_dir, "counts_detector.csv"),
                                   serialize.rows_csv(["i", "j", "signal", "reference"], rows))


def run_pipeline(config=None):
    """Run the whole virtual experiment; deterministic for a given config."""
    config = config or ExperimentConfig()
    streams = rng_streams(config.seed)
    timings = {}
    with stage("protocol", timings):
        mubs = build_mub_d4()
        inputs = mubs.elements
    with stage("optics", timings):
        model = mirror_model(config)
        basis_fields(model.beam, model.grid)
    with stage("scenarios", timings):
        true = {name: scenario_projectors(name, config, mubs, model) for name in ("ideal", "inf", "pixel")}
    with stage("mirror optimization", timings):
        true["dm"] = scenario_projectors("dm", config, mubs, model)
    with stage("detector tomography", timings):
        p_dm, recovered, det_counts = detector_calibration(true["dm"], mubs, config, streams["detector"], True)
    with stage("conditioning", timings):
        etas = {name: eta(true[name]) for name in ("ideal", "inf", "pixel")}
        etas["dm"] = eta(recovered)
    with stage("mub tomography", timings):
        rhos = np.array([pure_density(v) for v in inputs])
        data = measure(rhos, true["dm"], config, streams["mub_counts"])
        mub_f = np.array([fidelity(reconstruct(data, i, recovered, config), rhos[i]) for i in range(len(rhos))])
    with stage("random-state tomography", timings):
        state_rng = np.random.default_rng(streams["states"])
        states = [random_pure_state(4, state_rng) for _ in range(config.n_random)]
        rand_f = np.array([])
        if states:
            rr = np.array([pure_density(s) for s in states])
            data = measure(rr, true["dm"], config, streams["state_counts"])
            rand_f = np.array([fidelity(reconstruct(data, i, recovered, config), rr[i]) for i in range(len(rr))])
    return RunReport(
        p_ideal=ideal_probability_matrix(mubs),
        p_inf=probability_matrix(inputs, true["inf"]),
        p_pixel=probability_matrix(inputs, true["pixel"]),
        # reported as a probability matrix; raw ratio estimates can exceed 1 by noise
        p_dm=np.clip(p_dm, 0.0, 1.0),
        projectors=recovered,
        eta=etas,
        mub_fidelities=mub_f,
        random_fidelities=rand_f,
        histogram=fidelity_histogram(rand_f),
        model_projectors=true,
        detector_counts=det_counts,
        timings=timings,
    )
