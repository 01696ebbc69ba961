"""Sampled scalar fields at the mirror plane.

Everything is evaluated at the beam waist (z = 0), so Hermite-Gaussian modes
are real and free-space propagation never enters the pipeline.
"""

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import eval_hermite

from .errors import DimensionError, DiscretizationError, GridMismatchError

# computational basis order (m along x, n along y)
MODE_ORDER = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class BeamParams:
    wavelength: float = 780e-9
    waist: float = 0.9e-3

    def __post_init__(self):
        if not self.wavelength > 0 or not self.waist > 0:
            raise ValueError("wavelength and waist must be positive")

    @property
    def rayleigh_range(self):
        return rayleigh_range(self)


def rayleigh_range(beam):
    """z_R = pi * w0**2 / lambda."""
    return math.pi * beam.waist**2 / beam.wavelength


def gouy_phase(z, beam, order):
    """Gouy phase (m+n+1) * atan(z / z_R) of an HG_mn beam, ``order = m+n``."""
    return (order + 1) * math.atan(z / rayleigh_range(beam))


@dataclass(frozen=True)
class Grid:
    """Square sampling of the transverse plane, centered on the axis.

    Sample coordinates are ``(k - (n-1)/2) * spacing``; for even ``n`` no
    sample sits on the axis itself.
    """

    n: int = 256
    extent: float = 6 * 0.9e-3

    def __post_init__(self):
        if self.n < 16:
            raise ValueError(f"grid needs n >= 16 samples per side, got {self.n}")
        if not self.extent > 0:
            raise ValueError("grid extent must be positive")

    @property
    def spacing(self):
        return self.extent / self.n

    @property
    def area_element(self):
        return self.spacing**2

    @cached_property
    def axis(self):
        return (np.arange(self.n) - (self.n - 1) / 2) * self.spacing

    @cached_property
    def mesh(self):
        """(X, Y) coordinate arrays, ``X[row, col] = axis[col]``."""
        return np.meshgrid(self.axis, self.axis, indexing="xy")

    @classmethod
    def for_beam(cls, beam, n=256, waists=6.0):
        return cls(n=n, extent=waists * beam.waist)


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    amplitudes: np.ndarray

    def norm(self):
        return math.sqrt(float(np.sum(np.abs(self.amplitudes) ** 2)) * self.grid.area_element)

    def normalized(self):
        return Field(self.grid, self.amplitudes / self.norm())

    def __add__(self, other):
        _same_grid(self.grid, other.grid)
        return Field(self.grid, self.amplitudes + other.amplitudes)

    def __mul__(self, c):
        return Field(self.grid, self.amplitudes * c)

    __rmul__ = __mul__


def _same_grid(a, b):
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


def hg_profile(m, n, x, y, waist):
    """Continuum-normalized HG_mn amplitude at the waist, evaluated pointwise."""
    norm = math.sqrt(2.0 / math.pi) / waist / math.sqrt(2.0 ** (m + n) * math.factorial(m) * math.factorial(n))
    s = math.sqrt(2.0) / waist
    return (
        norm
        * eval_hermite(m, s * np.asarray(x))
        * eval_hermite(n, s * np.asarray(y))
        * np.exp(-(np.asarray(x) ** 2 + np.asarray(y) ** 2) / waist**2)
    )


def _check_sampling(beam, grid):
    if grid.spacing > beam.waist / 4:
        raise DiscretizationError(
            f"grid spacing {grid.spacing:.3g} m exceeds w0/4 = {beam.waist / 4:.3g} m"
        )
    if grid.extent < 6 * beam.waist * (1 - 1e-9):
        warnings.warn(
            f"grid extent {grid.extent:.3g} m covers less than 6 w0; truncation error grows",
            stacklevel=3,
        )


def hg_mode(m, n, beam, grid):
    """HG_mn at the waist, normalized so that ``overlap(f, f) == 1`` on the grid."""
    if m < 0 or n < 0:
        raise ValueError("mode indices must be non-negative")
    _check_sampling(beam, grid)
    x, y = grid.mesh
    return Field(grid, hg_profile(m, n, x, y, beam.waist).astype(complex)).normalized()


def basis_fields(beam, grid):
    """The four computational-basis fields stacked as ``(4, n, n)``."""
    return np.array([hg_mode(m, n, beam, grid).amplitudes for m, n in MODE_ORDER])


def fiber_mode(beam, grid, waist=None):
    """Back-propagated single-mode-fiber mode at the mirror plane.

    With ``waist=None`` the collection optics are taken as perfectly mode
    matched, so this is HG00 of the input beam.
    """
    if waist is None:
        return hg_mode(0, 0, beam, grid)
    return hg_mode(0, 0, BeamParams(beam.wavelength, waist), grid)


def state_to_field(psi, beam, grid, basis=None):
    """Superpose the HG basis with the amplitudes of a 4-dimensional state."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (len(MODE_ORDER),):
        raise DimensionError(f"expected a 4-dimensional state, got shape {psi.shape}")
    if basis is None:
        basis = basis_fields(beam, grid)
    return Field(grid, np.tensordot(psi, basis, axes=1))


def field_value_at(psi, beam, x, y):
    """Continuum amplitude of ``sum_k psi_k HG_k`` at arbitrary points."""
    return sum(c * hg_profile(m, n, x, y, beam.waist) for c, (m, n) in zip(psi, MODE_ORDER))


def overlap(a, b):
    """Discrete L2 inner product <a|b>."""
    _same_grid(a.grid, b.grid)
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.area_element)
