"""Photon counting, detector tomography, state reconstruction, conditioning."""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, DimensionError, RankDeficiencyError
from .qlin import (
    check_density,
    dominant_eigenpair,
    hermitian_basis,
    phase_fix,
    project_to_density,
    pure_density,
    trace_distance,
)

log = logging.getLogger(__name__)

RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class Projector:
    """Rank-1 measurement operator ``efficiency * |direction><direction|``."""

    efficiency: float
    direction: np.ndarray
    discarded_weight: float = 0.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=complex)
        object.__setattr__(self, "direction", d)
        if not -1e-12 <= self.efficiency <= 1 + 1e-6:
            raise ValueError(f"efficiency {self.efficiency!r} outside [0, 1]")
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("projector direction must be a unit vector")

    @property
    def dim(self):
        return self.direction.size

    @property
    def operator(self):
        return self.efficiency * pure_density(self.direction)

    @classmethod
    def from_vector(cls, v, **kw):
        """Build from an unnormalized vector ``sqrt(eff) * |P>``."""
        v = np.asarray(v, dtype=complex)
        eff = float(np.vdot(v, v).real)
        if eff == 0.0:
            raise DegenerateInputError("zero projector vector")
        return cls(eff, phase_fix(v / np.sqrt(eff)), **kw)

    def to_dict(self):
        return {
            "efficiency": self.efficiency,
            "direction": [[z.real, z.imag] for z in self.direction],
            "discarded_weight": self.discarded_weight,
        }

    @classmethod
    def from_dict(cls, d):
        v = np.array([complex(re, im) for re, im in d["direction"]])
        return cls(float(d["efficiency"]), v, float(d.get("discarded_weight", 0.0)))


def ideal_projectors(states):
    """Lossless projectors onto each of the given unit vectors."""
    return [Projector(1.0, np.asarray(s, dtype=complex)) for s in states]


def projector_stack(projectors):
    """``(k, d, d)`` array of measurement operators."""
    return np.array([p.operator for p in projectors])


def predicted_probability(rho, proj):
    """``eff * <P|rho|P>``: the Born-rule detection probability."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (proj.dim, proj.dim):
        raise DimensionError(f"state shape {rho.shape} vs projector dim {proj.dim}")
    v = proj.direction
    return float(proj.efficiency * np.vdot(v, rho @ v).real)


def probability_matrix(inputs, projectors):
    """``P[i, j]`` for pure input states (rows) against projectors (columns)."""
    inputs = np.asarray(inputs, dtype=complex)
    dirs = np.array([p.direction for p in projectors])
    eff = np.array([p.efficiency for p in projectors])
    return np.abs(inputs @ dirs.conj().T) ** 2 * eff


@dataclass(frozen=True, eq=False)
class CountsRecord:
    """Signal and reference counts, rows = input states, columns = settings.

    ``split_ratio`` is the fraction of light sent to the signal (fiber) arm,
    ``efficiency`` the global detector-efficiency product of the signal arm
    (known in simulation, absorbed into projector efficiencies in practice).
    """

    signal: np.ndarray
    reference: np.ndarray
    split_ratio: float = 0.5
    efficiency: float = 1.0

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.signal, dtype=np.int64))
        r = np.atleast_2d(np.asarray(self.reference, dtype=np.int64))
        if s.shape != r.shape:
            raise DimensionError(f"signal {s.shape} and reference {r.shape} differ")
        if (s < 0).any() or (r < 0).any():
            raise ValueError("counts must be non-negative")
        if not 0 < self.split_ratio < 1:
            raise ValueError("split_ratio must lie in (0, 1)")
        object.__setattr__(self, "signal", s)
        object.__setattr__(self, "reference", r)

    @property
    def shape(self):
        return self.signal.shape

    def row(self, i):
        return CountsRecord(self.signal[i : i + 1], self.reference[i : i + 1], self.split_ratio, self.efficiency)

    def expected_photons(self):
        """Per-cell photon number entering the signal arm, inferred from the reference arm."""
        if (self.reference <= 0).any():
            raise DegenerateInputError("reference counts must be positive for normalization")
        return self.reference * (self.split_ratio / (1.0 - self.split_ratio))

    def probabilities(self):
        """Reference-normalized detection probabilities."""
        return self.signal / self.expected_photons()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "signal", "reference"])
            for (i, j), s in np.ndenumerate(self.signal):
                w.writerow([i, j, int(s), int(self.reference[i, j])])

    @classmethod
    def from_csv(cls, path, split_ratio=0.5, efficiency=1.0):
        with open(path, newline="") as fh:
            rows = [tuple(int(x) for x in r) for r in list(csv.reader(fh))[1:]]
        n_i = max(r[0] for r in rows) + 1
        n_j = max(r[1] for r in rows) + 1
        sig = np.zeros((n_i, n_j), dtype=np.int64)
        ref = np.zeros((n_i, n_j), dtype=np.int64)
        for i, j, s, r in rows:
            sig[i, j] = s
            ref[i, j] = r
        return cls(sig, ref, split_ratio, efficiency)


def simulate_counts(rho, projectors, mean_photons, split_ratio=0.5, seed=None, efficiency=1.0):
    """Poisson photodetection for one or several states against all projectors.

    ``rho`` is a density matrix or a sequence/array of them. Each (state,
    setting) cell gets an independent signal draw with mean
    ``mean_photons * split_ratio * efficiency * p`` and a reference draw with
    mean ``mean_photons * (1 - split_ratio)``.
    """
    if not mean_photons > 0:
        raise ValueError("mean_photons must be positive")
    rhos = np.asarray(rho, dtype=complex)
    if rhos.ndim == 2:
        rhos = rhos[None]
    rng = np.random.default_rng(seed)
    ops = projector_stack(projectors)
    p = np.clip(np.einsum("jab,iba->ij", ops, rhos).real, 0.0, None)
    signal = rng.poisson(mean_photons * split_ratio * efficiency * p)
    reference = rng.poisson(mean_photons * (1.0 - split_ratio), size=p.shape)
    return CountsRecord(signal, reference, split_ratio, efficiency)


def _design_matrix(operators):
    """Real ``(k, d**2)`` matrix with rows ``Tr(O_k H_a)`` over the Hermitian basis."""
    ops = np.asarray(operators, dtype=complex)
    basis = hermitian_basis(ops.shape[-1])
    return np.einsum("kab,cba->kc", ops, basis).real, basis


def _hermitian_lstsq(operators, values):
    """Least-squares Hermitian X with ``Tr(O_k X) ~ values[k]``."""
    a, basis = _design_matrix(operators)
    x, _, rank, _ = np.linalg.lstsq(a, np.asarray(values, dtype=float), rcond=RANK_RTOL)
    if rank < a.shape[1]:
        raise RankDeficiencyError(f"design matrix rank {rank} < {a.shape[1]}")
    return np.tensordot(x, basis, axes=1)


def detector_tomography(p, inputs):
    """Recover rank-1 projectors from responses to known pure inputs.

    Column ``j`` of ``p`` holds the detection probabilities of setting ``j``
    for every input. Each column is fitted by a Hermitian operator in the
    least-squares sense, then all but the dominant eigenpair are dropped. The
    dropped spectral weight (sum of absolute minor eigenvalues) is kept on the
    returned projector as a diagnostic.
    """
    p = np.asarray(p, dtype=float)
    inputs = np.asarray(inputs, dtype=complex)
    if p.shape[0] != inputs.shape[0]:
        raise DimensionError(f"{p.shape[0]} rows of data for {inputs.shape[0]} inputs")
    rhos = np.array([pure_density(s) for s in inputs])
    out = []
    for j in range(p.shape[1]):
        pi = _hermitian_lstsq(rhos, p[:, j])
        lam, v = dominant_eigenpair(pi)
        w = np.linalg.eigvalsh(0.5 * (pi + pi.conj().T))
        out.append(Projector(min(lam, 1.0 + 1e-6), v, float(np.sum(np.abs(w[:-1])))))
    return out


def linear_inversion(probs, projectors, physical=True):
    """Least-squares state estimate from measured probabilities.

    With ``physical=False`` the raw Hermitian solution is returned; otherwise
    it is repaired into a density matrix by clip-and-renormalize.
    """
    probs = np.asarray(probs, dtype=float).ravel()
    if probs.size != len(projectors):
        raise DimensionError(f"{probs.size} probabilities for {len(projectors)} projectors")
    x = _hermitian_lstsq(projector_stack(projectors), probs)
    return project_to_density(x) if physical else x


def log_likelihood(rho, counts, expected, ops):
    """Poisson log-likelihood (up to rho-independent terms)."""
    p = np.einsum("jab,ba->j", ops, rho).real
    return _loglik_from_p(p, np.asarray(counts, dtype=float), np.asarray(expected, dtype=float))


def _loglik_from_p(p, counts, expected):
    mask = counts > 0
    if (p[mask] <= 0).any():
        return -np.inf
    return float(np.sum(counts[mask] * np.log(p[mask])) - np.sum(expected * p))


@dataclass
class MLEResult:
    rho: np.ndarray
    converged: bool
    iterations: int
    loglik: list = field(default_factory=list)


def mle_reconstruct(counts, projectors, damping=0.5, tol=1e-8, max_iter=5000):
    """Maximum-likelihood state from one row of counts.

    Diluted R-rho-R iteration for Poisson data with known per-setting photon
    numbers (from the reference arm). The ascent operator is the likelihood
    gradient ``sum_j (n_j / p_j - N_j) Pi_j`` divided by the total count, and
    each step is ``rho <- (I + t G) rho (I + t G)`` renormalized, with
    ``t = damping``. A step that lowers the likelihood is rejected and retried
    with half the step; accepted steps therefore never decrease it.
    Stops once an accepted step moves rho by less than ``tol`` in trace
    distance, or when no step length improves the likelihood.

    ``counts`` is a one-row :class:`CountsRecord` or a pair
    ``(signal_counts, expected_photons)``.
    """
    if isinstance(counts, CountsRecord):
        if counts.shape[0] != 1:
            raise DimensionError("mle_reconstruct takes a single row of counts")
        n = counts.signal[0].astype(float)
        expected = counts.expected_photons()[0].astype(float)
    else:
        n, expected = (np.asarray(a, dtype=float).ravel() for a in counts)
    ops = projector_stack(projectors)
    if n.size != len(ops):
        raise DimensionError(f"{n.size} count cells for {len(ops)} projectors")
    total = n.sum()
    if total <= 0:
        raise DegenerateInputError("all signal counts are zero")
    d = ops.shape[-1]
    # p_j = Tr(Pi_j rho) = <vec(Pi_j^T), vec(rho)>
    probe = ops.transpose(0, 2, 1).reshape(len(ops), -1)
    flat = ops.reshape(len(ops), -1)
    eye = np.eye(d)
    rho = eye / d
    p = (probe @ rho.ravel()).real
    ll = _loglik_from_p(p, n, expected)
    history = [ll]
    converged = False
    it = 0
    pos = n > 0
    while it < max_iter:
        weights = -expected.copy()
        weights[pos] += n[pos] / p[pos]
        grad = (weights @ flat).reshape(d, d) / total
        step = damping
        while True:
            a = eye + step * grad
            new = a @ rho @ a.conj().T
            new = 0.5 * (new + new.conj().T)
            new /= np.trace(new).real
            new_p = (probe @ new.ravel()).real
            new_ll = _loglik_from_p(new_p, n, expected)
            if new_ll >= ll or step < 1e-12:
                break
            step *= 0.5
        it += 1
        if new_ll < ll:
            converged = True
            break
        moved = trace_distance(new, rho)
        rho, p, ll = new, new_p, new_ll
        history.append(ll)
        if moved < tol:
            converged = True
            break
    if not converged:
        log.debug("MLE stopped after %d iterations without meeting tol=%g", it, tol)
    return MLEResult(check_density(rho), converged, it, history)


def eta(projectors):
    """Condition ratio of the stacked vectorized measurement operators.

    Rows are ``vec(eff_j |P_j><P_j|)``; the result is the largest over the
    smallest singular value of that stack.
    """
    ops = projector_stack(projectors) if not isinstance(projectors, np.ndarray) else projectors
    stack = ops.reshape(len(ops), -1)
    if stack.shape[0] < stack.shape[1]:
        raise RankDeficiencyError(f"{stack.shape[0]} operators cannot span {stack.shape[1]} dimensions")
    s = np.linalg.svd(stack, compute_uv=False)
    if s[-1] <= RANK_RTOL * s[0]:
        raise RankDeficiencyError("operator stack is rank deficient (infinite conditioning)")
    return float(s[0] / s[-1])
