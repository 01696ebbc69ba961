"""Experiment configuration.

A config file is JSON with any subset of the keys below; missing keys take
the defaults, which reproduce the regime of the reference experiment
(780 nm, 0.9 mm waist, 210 random test states)::

    {
      "beam":   {"wavelength": 7.8e-7, "waist": 9e-4},
      "grid":   {"n": 256, "extent": null},
      "mirror": {"pitch": 3.05e-4, "sigma_fraction": 0.6, "max_stroke": 1.75e-6,
                 "max_evals": 3000, "optimization_n": 128},
      "photons": 1e6, "split_ratio": 0.5, "efficiency": 1.0, "noise": true,
      "estimator": "mle", "seed": 0, "n_random": 210
    }

``grid.extent = null`` means six beam waists.
"""

import json
from dataclasses import asdict, dataclass, field, fields, replace

from .mirror import DEFAULT_MAX_STROKE, DEFAULT_PITCH, ActuatorLayout, InfluenceModel
from .optics import BeamParams, Grid


@dataclass(frozen=True)
class BeamConfig:
    wavelength: float = 780e-9
    waist: float = 0.9e-3


@dataclass(frozen=True)
class GridConfig:
    n: int = 256
    extent: float | None = None


@dataclass(frozen=True)
class MirrorConfig:
    pitch: float = DEFAULT_PITCH
    sigma_fraction: float = 0.6
    max_stroke: float = DEFAULT_MAX_STROKE
    max_evals: int = 3000
    # stroke optimization runs on this coarser grid; projectors use the full grid
    optimization_n: int = 128


@dataclass(frozen=True)
class ExperimentConfig:
    beam: BeamConfig = field(default_factory=BeamConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    mirror: MirrorConfig = field(default_factory=MirrorConfig)
    photons: float = 1e6
    split_ratio: float = 0.5
    efficiency: float = 1.0
    noise: bool = True
    estimator: str = "mle"
    seed: int = 0
    n_random: int = 210

    def __post_init__(self):
        positive = {
            "wavelength": self.beam.wavelength,
            "waist": self.beam.waist,
            "grid.n": self.grid.n,
            "pitch": self.mirror.pitch,
            "sigma_fraction": self.mirror.sigma_fraction,
            "max_stroke": self.mirror.max_stroke,
            "max_evals": self.mirror.max_evals,
            "photons": self.photons,
            "efficiency": self.efficiency,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        if self.grid.extent is not None and not self.grid.extent > 0:
            raise ValueError("grid.extent must be positive")
        if not 0 < self.split_ratio < 1:
            raise ValueError("split_ratio must lie in (0, 1)")
        if self.estimator not in ("mle", "linear"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.n_random < 0:
            raise ValueError("n_random must be non-negative")

    def beam_params(self):
        return BeamParams(self.beam.wavelength, self.beam.waist)

    def make_grid(self, n=None):
        extent = self.grid.extent if self.grid.extent is not None else 6 * self.beam.waist
        return Grid(n or self.grid.n, extent)

    def layout(self):
        return ActuatorLayout(self.mirror.pitch)

    def influence(self):
        return InfluenceModel.from_pitch(self.mirror.pitch, self.mirror.sigma_fraction)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key, sub in (("beam", BeamConfig), ("grid", GridConfig), ("mirror", MirrorConfig)):
            if key in d:
                d[key] = sub(**d[key])
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def override(self, **kw):
        """Replace top-level fields, ignoring ``None`` values (unset CLI flags)."""
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self
