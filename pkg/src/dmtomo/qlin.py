"""Dense complex linear algebra for small quantum systems.

States are plain numpy arrays: a pure state is a length-``d`` complex vector,
a density matrix is a ``d x d`` complex array. The ``check_*`` helpers enforce
the numerical invariants used throughout the package.
"""

import math

import numpy as np

from .errors import (
    DegenerateInputError,
    DimensionError,
    InvalidStateError,
    NoValidProjectorError,
)

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
FIDELITY_PSD_TOL = 1e-8


def check_pure_state(psi, tol=NORM_TOL):
    """Return ``psi`` as a complex vector, raising if it is not unit norm."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise DimensionError(f"pure state must be 1-D, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise InvalidStateError(f"pure state norm {norm!r} differs from 1")
    return psi


def check_square(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def check_hermitian(a, tol=HERMITIAN_TOL):
    a = check_square(a)
    err = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if err > tol * max(1.0, np.max(np.abs(a))):
        raise InvalidStateError(f"operator is not Hermitian (max deviation {err:.3g})")
    return a


def check_density(rho, psd_tol=PSD_TOL):
    """Validate a density matrix: Hermitian, unit trace, positive semidefinite."""
    rho = check_hermitian(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"density matrix trace {tr!r} differs from 1")
    lam_min = np.linalg.eigvalsh(_hermitize(rho))[0]
    if lam_min < -psd_tol:
        raise InvalidStateError(f"density matrix has negative eigenvalue {lam_min:.3g}")
    return rho


def _hermitize(a):
    return 0.5 * (a + a.conj().T)


def pure_density(psi):
    """|psi><psi| for a (normalized) state vector."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def psd_sqrt(a):
    """Square root of a Hermitian PSD matrix, clipping negative eigenvalues to 0.

    Eigenvalues below ``1e-13`` of the largest are round-off and set to zero
    before the root, which would otherwise inflate them to ~1e-8.
    """
    w, v = np.linalg.eigh(_hermitize(a))
    w = np.where(w > 1e-13 * max(w[-1], 0.0), w, 0.0)
    w = np.sqrt(w)
    return (v * w) @ v.conj().T


def fidelity(rho, sigma):
    """Uhlmann fidelity ``[Tr sqrt(sqrt(rho) sigma sqrt(rho))]**2``.

    Both arguments must be density matrices of the same dimension. Square roots
    go through a Hermitian eigendecomposition with negative eigenvalues clipped,
    so nearly singular (e.g. pure) states are handled without ``sqrtm`` noise.

    Raises:
        DimensionError: shapes differ.
        InvalidStateError: an argument has an eigenvalue below -1e-8.
    """
    rho = check_square(rho)
    sigma = check_square(sigma)
    if rho.shape != sigma.shape:
        raise DimensionError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    for name, m in (("rho", rho), ("sigma", sigma)):
        lam_min = np.linalg.eigvalsh(_hermitize(m))[0]
        if lam_min < -FIDELITY_PSD_TOL:
            raise InvalidStateError(f"{name} has negative eigenvalue {lam_min:.3g}")
    # Tr sqrt(sqrt(rho) sigma sqrt(rho)) is the nuclear norm of sqrt(rho) sqrt(sigma)
    s = np.linalg.svd(psd_sqrt(rho) @ psd_sqrt(sigma), compute_uv=False)
    f = float(np.sum(s) ** 2)
    return min(max(f, 0.0), 1.0)


def hs_inner(a, b):
    """Hilbert-Schmidt inner product Tr(A^dagger B)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def vectorize(a):
    """Row-major flattening of a square operator."""
    return check_square(a).reshape(-1).copy()


def devectorize(v):
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise DimensionError(f"vectorized operator must be 1-D, got shape {v.shape}")
    d = math.isqrt(v.size)
    if d * d != v.size:
        raise DimensionError(f"length {v.size} is not a perfect square")
    return v.reshape(d, d).copy()


def random_pure_state(dim, seed=None):
    """Haar-random pure state: a normalized complex Gaussian vector.

    ``seed`` may be anything accepted by ``numpy.random.default_rng``,
    including an existing ``Generator``.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def fidelity_pdf(f, dim):
    """Density of |<psi|phi>|**2 for independent Haar-random pure states."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity must lie in [0, 1], got {f}")
    return (dim - 1) * (1.0 - f) ** (dim - 2)


def fidelity_cdf(f, dim):
    f = np.clip(f, 0.0, 1.0)
    return 1.0 - (1.0 - f) ** (dim - 1)


def project_to_density(a):
    """Nearest-physical repair of a Hermitian operator.

    Negative eigenvalues are clipped to zero and the trace renormalized to 1.
    This is the simple clip-and-renormalize rule, not the trace-constrained
    simplex projection; at d=4 the difference is immaterial for reconstruction.
    """
    a = check_hermitian(a, tol=1e-9)
    w, v = np.linalg.eigh(_hermitize(a))
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0.0:
        raise DegenerateInputError("operator has no positive eigenvalue to keep")
    rho = (v * (w / total)) @ v.conj().T
    return _hermitize(rho)


def phase_fix(v):
    """Rotate the global phase so the largest-magnitude entry is real positive."""
    v = np.asarray(v, dtype=complex)
    k = int(np.argmax(np.abs(v) - 1e-12 * np.arange(v.size)))
    return v * np.exp(-1j * np.angle(v[k]))


def dominant_eigenpair(a):
    """Largest eigenvalue of a Hermitian operator and its unit eigenvector.

    ``lam * |v><v|`` is the rank-1 truncation that keeps only the dominant
    eigenvalue. The eigenvector's global phase is fixed by :func:`phase_fix`.

    Raises:
        NoValidProjectorError: the largest eigenvalue is negative.
    """
    a = check_hermitian(a, tol=1e-9)
    w, v = np.linalg.eigh(_hermitize(a))
    lam = float(w[-1])
    if lam < 0.0:
        raise NoValidProjectorError(f"largest eigenvalue {lam:.3g} is negative")
    return lam, phase_fix(v[:, -1])


def hermitian_basis(dim):
    """Real-coordinate basis of the Hermitian ``dim x dim`` matrices.

    Returns an array of shape ``(dim**2, dim, dim)``: diagonal units first,
    then for each ``k < l`` the symmetric and antisymmetric off-diagonal pairs.
    A Hermitian operator is ``sum_a x_a * basis[a]`` with real ``x``.
    """
    out = []
    for k in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[k, k] = 1.0
        out.append(e)
    for k in range(dim):
        for l in range(k + 1, dim):
            s = np.zeros((dim, dim), dtype=complex)
            s[k, l] = s[l, k] = 1.0
            t = np.zeros((dim, dim), dtype=complex)
            t[k, l] = -1j
            t[l, k] = 1j
            out.extend([s, t])
    return np.array(out)


def trace_distance(rho, sigma):
    w = np.linalg.eigvalsh(_hermitize(np.asarray(rho) - np.asarray(sigma)))
    return 0.5 * float(np.sum(np.abs(w)))
