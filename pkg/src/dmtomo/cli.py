"""Command-line front end.

    dmtomo dump-mub [--out FILE]
    dmtomo eta --scenario {ideal,inf,pixel,dm}
    dmtomo pmatrix --scenario {ideal,inf,pixel,dm} [--out FILE]
    dmtomo simulate --out FILE [--noiseless]
    dmtomo tomo --input FILE [--out FILE]
    dmtomo histogram --n 210 [--out FILE]
    dmtomo run --out DIR

Every subcommand accepts ``--config``, ``--seed`` and ``--photons``.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import serialize
from .config import ExperimentConfig
from .pipeline import SCENARIOS, detector_calibration, rng_streams, run_pipeline, scenario_projectors
from .protocol import build_mub_d4, ideal_probability_matrix
from .qlin import check_density, fidelity, pure_density, random_pure_state
from .tomo import (
    CountsRecord,
    Projector,
    eta,
    ideal_projectors,
    linear_inversion,
    mle_reconstruct,
    probability_matrix,
    simulate_counts,
)

log = logging.getLogger("dmtomo")


def _emit(text, out):
    if out:
        serialize.write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _config(args):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    n_random = getattr(args, "n", None)
    return cfg.override(seed=args.seed, photons=args.photons, n_random=n_random)


def scenario_data(name, cfg):
    """Projectors and probability matrix of a scenario as the pipeline reports them.

    For ``dm`` this is the measured matrix and the projectors recovered from it.
    """
    mubs = build_mub_d4()
    if name == "ideal":
        return ideal_projectors(mubs.elements), ideal_probability_matrix(mubs)
    projectors = scenario_projectors(name, cfg, mubs)
    if name == "dm":
        p, recovered = detector_calibration(projectors, mubs, cfg, rng_streams(cfg.seed)["detector"])
        return recovered, np.clip(p, 0.0, 1.0)
    return projectors, probability_matrix(mubs.elements, projectors)


def cmd_dump_mub(args):
    mubs = build_mub_d4()
    items = []
    for b in range(mubs.bases.shape[0]):
        for e in range(mubs.bases.shape[1]):
            items.append({
                "index": mubs.flat_index(b, e),
                "basis": b,
                "element": e,
                "amplitudes": serialize.complex_list(mubs.bases[b, e]),
            })
    _emit(serialize.dumps_json({"dim": mubs.dim, "mode_order": ["HG00", "HG01", "HG10", "HG11"],
                                "elements": items}), args.out)


def cmd_eta(args):
    projectors, _ = scenario_data(args.scenario, _config(args))
    print(serialize.fmt(eta(projectors)))


def cmd_pmatrix(args):
    _, p = scenario_data(args.scenario, _config(args))
    _emit(serialize.matrix_csv(p), args.out)


def cmd_simulate(args):
    """Write a tomography input file for a random pure state (ideal MUB projectors)."""
    cfg = _config(args)
    rng = np.random.default_rng(cfg.seed)
    psi = random_pure_state(4, rng)
    projectors = ideal_projectors(build_mub_d4().elements)
    doc = {"projectors": [p.to_dict() for p in projectors], "truth": serialize.complex_list(psi)}
    if args.noiseless:
        doc["probabilities"] = probability_matrix([psi], projectors)[0].tolist()
    else:
        c = simulate_counts(pure_density(psi), projectors, cfg.photons, cfg.split_ratio, rng)
        doc["counts"] = {"signal": c.signal[0].tolist(), "reference": c.reference[0].tolist(),
                         "split_ratio": cfg.split_ratio}
    _emit(serialize.dumps_json(doc), args.out)


def _truth(doc):
    if "truth" in doc:
        psi = serialize.parse_complex(doc["truth"])
        return pure_density(psi / np.linalg.norm(psi))
    if "truth_density" in doc:
        return check_density(serialize.parse_complex(doc["truth_density"]))
    return None


def cmd_tomo(args):
    with open(args.input) as fh:
        doc = json.load(fh)
    if "projectors" in doc:
        projectors = [Projector.from_dict(p) for p in doc["projectors"]]
    else:
        projectors = ideal_projectors(build_mub_d4().elements)
    if "probabilities" in doc:
        rho = linear_inversion(doc["probabilities"], projectors)
        method = "linear"
    elif "counts" in doc:
        c = doc["counts"]
        rec = CountsRecord(c["signal"], c["reference"], c.get("split_ratio", 0.5))
        if args.estimator == "mle":
            rho = mle_reconstruct(rec, projectors).rho
        else:
            rho = linear_inversion(rec.probabilities()[0], projectors)
        method = args.estimator
    else:
        raise ValueError("input needs either 'probabilities' or 'counts'")
    out = {"estimator": method, "rho": [serialize.complex_list(row) for row in rho]}
    truth = _truth(doc)
    if truth is not None:
        out["fidelity"] = fidelity(rho, truth)
    _emit(serialize.dumps_json(out), args.out)


def cmd_histogram(args):
    report = run_pipeline(_config(args))
    _emit(serialize.rows_csv(["lo", "hi", "count"], report.histogram), args.out)


def cmd_run(args):
    cfg = _config(args)
    report = run_pipeline(cfg)
    report.write(args.out)
    serialize.write_atomic(os.path.join(args.out, "config.json"), serialize.dumps_json(cfg.to_dict()))
    print(serialize.dumps_json(report.summary), end="")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="master RNG seed")
    common.add_argument("--photons", type=float, help="mean photons per setting")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dmtomo", description="Deformable-mirror spatial-qudit tomography simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dump-mub", parents=[common], help="write the 20 MUB elements as JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dump_mub)

    p = sub.add_parser("eta", parents=[common], help="conditioning ratio of a projector set")
    p.add_argument("--scenario", choices=SCENARIOS, required=True)
    p.set_defaults(func=cmd_eta)

    p = sub.add_parser("pmatrix", parents=[common], help="20x20 probability matrix as CSV")
    p.add_argument("--scenario", choices=SCENARIOS, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pmatrix)

    p = sub.add_parser("simulate", parents=[common], help="generate a tomography input for a random state")
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tomo", parents=[common], help="reconstruct a density matrix from a JSON input")
    p.add_argument("--input", required=True)
    p.add_argument("--estimator", choices=("mle", "linear"), default="mle")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("histogram", parents=[common], help="fidelity histogram of random-state reconstructions")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("run", parents=[common], help="full pipeline, all outputs into a directory")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=None)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - report any failure as one diagnostic line
        print(f"dmtomo: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
