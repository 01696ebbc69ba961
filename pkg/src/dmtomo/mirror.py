"""Deformable-mirror model: actuators, membrane surface, phase masks, optimization.

The mirror is a square array of actuators (corners removed) under a
continuous membrane. Each actuator contributes a Gaussian bump to the
surface; the reflected field picks up twice the surface height as optical
path.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize

from .errors import GridMismatchError
from .optics import Field, basis_fields, field_value_at, fiber_mode, state_to_field
from .tomo import Projector

log = logging.getLogger(__name__)

DEFAULT_PITCH = 305e-6
DEFAULT_MAX_STROKE = 1.75e-6


@dataclass(frozen=True)
class ActuatorLayout:
    """``size x size`` actuators on a square pitch, centered on the axis.

    Actuator order is row-major: y row first, then x column, dead corners
    skipped. With the defaults there are 32 live actuators.
    """

    pitch: float = DEFAULT_PITCH
    size: int = 6
    drop_corners: bool = True

    @cached_property
    def cell_centers(self):
        return (np.arange(self.size) - (self.size - 1) / 2) * self.pitch

    def is_live(self, col, row):
        edge = (0, self.size - 1)
        return not (self.drop_corners and col in edge and row in edge)

    @cached_property
    def cells(self):
        """(col, row) index pairs of live actuators."""
        return [(c, r) for r in range(self.size) for c in range(self.size) if self.is_live(c, r)]

    @cached_property
    def positions(self):
        """``(n_actuators, 2)`` array of (x, y) centers."""
        cc = self.cell_centers
        return np.array([(cc[c], cc[r]) for c, r in self.cells])

    @property
    def n_actuators(self):
        return len(self.cells)

    @property
    def aperture(self):
        return self.size * self.pitch

    def cell_index(self, grid):
        """Per-sample actuator index, -1 outside the live footprint."""
        x, y = grid.mesh
        half = self.aperture / 2
        col = np.floor((x + half) / self.pitch).astype(int)
        row = np.floor((y + half) / self.pitch).astype(int)
        lookup = -np.ones((self.size, self.size), dtype=int)
        for k, (c, r) in enumerate(self.cells):
            lookup[r, c] = k
        inside = (col >= 0) & (col < self.size) & (row >= 0) & (row < self.size)
        out = -np.ones(x.shape, dtype=int)
        out[inside] = lookup[row[inside], col[inside]]
        return out


@dataclass(frozen=True)
class InfluenceModel:
    """Gaussian surface response ``exp(-r**2 / (2 sigma**2))`` per unit stroke."""

    sigma: float
    kind: str = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("influence width must be positive")
        if self.kind != "gaussian":
            raise ValueError(f"unsupported influence kind {self.kind!r}")

    @classmethod
    def from_pitch(cls, pitch, fraction=0.6):
        return cls(fraction * pitch)

    def response(self, r2):
        return np.exp(-r2 / (2 * self.sigma**2))

    def coupling_ratio(self, pitch):
        """Response one pitch away relative to the peak."""
        return float(self.response(pitch**2))


@dataclass(frozen=True, eq=False)
class MirrorState:
    strokes: np.ndarray
    max_stroke: float = DEFAULT_MAX_STROKE

    def __post_init__(self):
        s = np.asarray(self.strokes, dtype=float)
        object.__setattr__(self, "strokes", s)
        if np.any(np.abs(s) > self.max_stroke * (1 + 1e-12)):
            raise ValueError(f"stroke exceeds +-{self.max_stroke:g} m")

    @classmethod
    def flat(cls, n=32, max_stroke=DEFAULT_MAX_STROKE):
        return cls(np.zeros(n), max_stroke)

    def to_json(self):
        return json.dumps({"strokes": self.strokes.tolist(), "max_stroke": self.max_stroke})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(np.array(d["strokes"], dtype=float), float(d["max_stroke"]))


@dataclass(frozen=True, eq=False)
class PhaseMask:
    grid: object
    phase: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.phase)):
            raise ValueError("phase mask must be finite")

    def metadata(self):
        return {"n": self.grid.n, "extent": self.grid.extent, "order": "row-major", "units": "rad"}

    def save(self, stem):
        """Write ``<stem>.json`` (grid metadata) and ``<stem>.csv`` (phase samples)."""
        with open(f"{stem}.json", "w") as fh:
            json.dump(self.metadata(), fh)
        np.savetxt(f"{stem}.csv", self.phase, delimiter=",", fmt="%.9g")


def influence_basis(infl, layout, grid):
    """``(n_actuators, n, n)`` surface maps for unit strokes."""
    x, y = grid.mesh
    return np.array([infl.response((x - ax) ** 2 + (y - ay) ** 2) for ax, ay in layout.positions])


def surface_from_strokes(state, infl, layout, grid, basis=None):
    if basis is None:
        basis = influence_basis(infl, layout, grid)
    return np.tensordot(state.strokes, basis, axes=1)


def surface_at(strokes, infl, layout, x, y):
    """Membrane height at arbitrary points (no grid)."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.zeros(x.shape)
    for s, (ax, ay) in zip(np.asarray(strokes, dtype=float), layout.positions):
        out += s * infl.response((x - ax) ** 2 + (y - ay) ** 2)
    return out


def phase_from_surface(surface, wavelength, grid):
    """Reflection doubles the path: phase = 4 pi s / lambda."""
    return PhaseMask(grid, 4 * math.pi / wavelength * np.asarray(surface, dtype=float))


def apply_mask(f, mask):
    if f.grid != mask.grid:
        raise GridMismatchError(f"grid mismatch: {f.grid} vs {mask.grid}")
    return Field(f.grid, f.amplitudes * np.exp(1j * mask.phase))


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Truncated mode-transfer block and fiber-coupling amplitudes of one mask.

    ``matrix[k, l] = <HG_k| exp(i phi) |HG_l>`` and
    ``fiber_row[l] = <Psi00| exp(i phi) |HG_l>``.
    """

    matrix: np.ndarray
    fiber_row: np.ndarray

    @property
    def singular_values(self):
        return np.linalg.svd(self.matrix, compute_uv=False)

    def amplitude(self, psi):
        """<Psi00| M |psi> for a 4-dimensional input state."""
        return complex(self.fiber_row @ np.asarray(psi, dtype=complex))

    def projector(self):
        """Pi = M^dagger |Psi00><Psi00| M as efficiency plus direction."""
        return Projector.from_vector(self.fiber_row.conj())


def transfer_matrix(mask, beam, grid, basis=None, fiber=None):
    if mask.grid != grid:
        raise GridMismatchError(f"grid mismatch: {mask.grid} vs {grid}")
    if basis is None:
        basis = basis_fields(beam, grid)
    if fiber is None:
        fiber = fiber_mode(beam, grid).amplitudes
    da = grid.area_element
    shifted = basis * np.exp(1j * mask.phase)
    flat = shifted.reshape(len(basis), -1)
    m = basis.reshape(len(basis), -1).conj() @ flat.T * da
    row = fiber.reshape(-1).conj() @ flat.T * da
    return TransferMatrix(m, row)


def ideal_phase_mirror(target, beam, grid, basis=None):
    """Phase conjugation of the target field over the whole plane."""
    f = state_to_field(target, beam, grid, basis)
    return PhaseMask(grid, -np.angle(f.amplitudes))


def pixelated_mirror(target, layout, beam, grid):
    """Piecewise-constant conjugate phase, one value per live actuator cell.

    Each cell takes ``-arg`` of the target's continuum amplitude at the cell
    center. Dead corners and everything outside the array stay at zero phase.
    """
    idx = layout.cell_index(grid)
    px, py = layout.positions.T
    cell_phase = -np.angle(field_value_at(target, beam, px, py))
    phase = np.where(idx >= 0, cell_phase[np.maximum(idx, 0)], 0.0)
    return PhaseMask(grid, phase)


@dataclass
class MirrorModel:
    """Precomputed geometry for repeated mirror evaluations on one grid."""

    beam: object
    grid: object
    layout: ActuatorLayout = field(default_factory=ActuatorLayout)
    infl: InfluenceModel = None
    max_stroke: float = DEFAULT_MAX_STROKE

    def __post_init__(self):
        if self.infl is None:
            self.infl = InfluenceModel.from_pitch(self.layout.pitch)

    @cached_property
    def basis(self):
        return basis_fields(self.beam, self.grid)

    @cached_property
    def fiber(self):
        return fiber_mode(self.beam, self.grid).amplitudes

    @cached_property
    def influence(self):
        return influence_basis(self.infl, self.layout, self.grid)

    @property
    def wavenumber(self):
        return 4 * math.pi / self.beam.wavelength

    def mask(self, state):
        return phase_from_surface(surface_from_strokes(state, self.infl, self.layout, self.grid, self.influence),
                                  self.beam.wavelength, self.grid)

    def transfer(self, state_or_mask):
        mask = state_or_mask if isinstance(state_or_mask, PhaseMask) else self.mask(state_or_mask)
        return transfer_matrix(mask, self.beam, self.grid, self.basis, self.fiber)

    def coupling(self, state, target):
        """|<Psi00| M(strokes) |target>|**2."""
        return abs(self.transfer(state).amplitude(target)) ** 2


@dataclass
class OptimizationResult:
    state: MirrorState
    coupling: float
    initial_coupling: float
    converged: bool
    evaluations: int
    history: list


def initial_strokes(target, model):
    """Strokes whose membrane surface reproduces the conjugate target phase at
    every actuator center (a 32x32 linear solve through the influence matrix)."""
    pos = model.layout.positions
    phase = -np.angle(field_value_at(target, model.beam, pos[:, 0], pos[:, 1]))
    d2 = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(-1)
    coupling = model.infl.response(d2)
    s = np.linalg.solve(coupling, phase) / model.wavenumber
    return np.clip(s, -model.max_stroke, model.max_stroke)


def optimize_mirror(target, model, seed=0, max_evals=3000, support_tol=1e-7, fatol=1e-7):
    """Maximize fiber coupling of ``target`` over actuator strokes.

    Nelder-Mead over the stroke vector, started from :func:`initial_strokes`
    with a seed-dependent initial simplex. The cost only sums grid samples
    where ``|Psi00 * target|`` exceeds ``support_tol`` of its peak. Coupling in
    ``history`` is the best value seen so far after each iteration, so it is
    non-decreasing. If the evaluation budget runs out the best point is
    returned with ``converged=False``.
    """
    target = np.asarray(target, dtype=complex)
    rng = np.random.default_rng(seed)
    tgt = np.tensordot(target, model.basis, axes=1)
    w = (model.fiber.conj() * tgt).reshape(-1) * model.grid.area_element
    keep = np.abs(w) > support_tol * np.abs(w).max()
    w = w[keep]
    infl = model.influence.reshape(model.layout.n_actuators, -1)[:, keep]
    k = model.wavenumber
    ms = model.max_stroke

    def cost(s):
        s = np.clip(s, -ms, ms)
        return -abs(np.dot(w, np.exp(1j * k * (s @ infl)))) ** 2

    x0 = initial_strokes(target, model)
    n = x0.size
    step = model.beam.wavelength / 40
    signs = rng.choice([-1.0, 1.0], size=n)
    simplex = np.vstack([x0, x0 + np.diag(signs * step)])
    simplex = np.clip(simplex, -ms, ms)

    c0 = -cost(x0)
    history = [c0]
    best = [c0]

    def track(xk):
        best[0] = max(best[0], -cost(xk))
        history.append(best[0])

    res = minimize(
        cost,
        x0,
        method="Nelder-Mead",
        callback=track,
        bounds=[(-ms, ms)] * n,
        options={"initial_simplex": simplex, "maxfev": max_evals, "xatol": 1e-12, "fatol": fatol, "adaptive": True},
    )
    x = np.clip(res.x, -ms, ms)
    if -cost(x) < c0:
        x = x0
    state = MirrorState(x, ms)
    final = model.coupling(state, target)
    if not res.success:
        log.debug("mirror optimization stopped: %s", res.message)
    return OptimizationResult(state, final, model.coupling(MirrorState(x0, ms), target), bool(res.success),
                              int(res.nfev), history)
