"""Mutually unbiased bases for the four-mode qudit.

The computational basis is (HG00, HG01, HG10, HG11), read as two qubits
``|m>|n>`` with flat index ``2*m + n``. The other four bases are joint
eigenbases of the commuting Pauli classes of the standard stabilizer
partition, which is the prime-power (GF(4)) construction written in qubit
language:

    {ZI, IZ, ZZ}, {XI, IX, XX}, {YI, IY, YY}, {XZ, ZY, YX}, {XY, YZ, ZX}

Phase convention: inside each basis the elements are ordered by the
eigenvalue signature of the two listed generators, (+,+), (+,-), (-,+),
(-,-), and every vector is rotated so that its largest-magnitude amplitude
(lowest index on ties) is real positive.
"""

from dataclasses import dataclass

import numpy as np

from .qlin import phase_fix

DIM = 4
N_BASES = DIM + 1

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# generator pairs of the five commuting classes
PAULI_CLASSES = (
    ("ZI", "IZ"),
    ("XI", "IX"),
    ("YI", "IY"),
    ("XZ", "ZY"),
    ("XY", "YZ"),
)

_SIGNATURES = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def pauli(label):
    return np.kron(_PAULI[label[0]], _PAULI[label[1]])


@dataclass(frozen=True)
class MubSet:
    """Five bases of four elements each; ``bases[b, e]`` is a unit vector.

    Flat index (0-based) of basis ``b``, element ``e`` is ``4*b + e``.
    """

    bases: np.ndarray

    @property
    def dim(self):
        return self.bases.shape[2]

    @property
    def elements(self):
        """All elements as a ``(20, 4)`` array in flat-index order."""
        return self.bases.reshape(-1, self.dim)

    def __len__(self):
        return self.bases.shape[0] * self.bases.shape[1]

    def element(self, i):
        return self.elements[i]

    @staticmethod
    def flat_index(basis, element):
        return DIM * basis + element


def _joint_eigenvector(a, b, s1, s2):
    proj = (np.eye(DIM) + s1 * a) @ (np.eye(DIM) + s2 * b) / 4.0
    col = proj[:, np.argmax(np.linalg.norm(proj, axis=0))]
    return phase_fix(col / np.linalg.norm(col))


def build_mub_d4():
    """Complete set of 5 mutually unbiased bases in dimension 4."""
    bases = np.empty((N_BASES, DIM, DIM), dtype=complex)
    for b, (g1, g2) in enumerate(PAULI_CLASSES):
        a, c = pauli(g1), pauli(g2)
        for e, (s1, s2) in enumerate(_SIGNATURES):
            bases[b, e] = _joint_eigenvector(a, c, s1, s2)
    return MubSet(bases)


@dataclass(frozen=True)
class MubReport:
    orthonormality_error: float
    unbiasedness_error: float

    @property
    def accepted(self):
        return self.orthonormality_error < 1e-10 and self.unbiasedness_error < 1e-10


def verify_mub(mubs):
    """Largest deviations from orthonormality and from mutual unbiasedness."""
    bases = np.asarray(mubs.bases if isinstance(mubs, MubSet) else mubs)
    n_b, n_e, d = bases.shape
    orth = 0.0
    unb = 0.0
    for b in range(n_b):
        gram = bases[b].conj() @ bases[b].T
        orth = max(orth, float(np.max(np.abs(np.abs(gram) - np.eye(n_e)))))
        for c in range(b + 1, n_b):
            cross = np.abs(bases[b].conj() @ bases[c].T) ** 2
            unb = max(unb, float(np.max(np.abs(cross - 1.0 / d))))
    return MubReport(orth, unb)


def ideal_probability_matrix(mubs):
    """``P[i, j] = |<Phi_j|Phi_i>|**2`` over the flat element list."""
    v = mubs.elements
    return np.abs(v.conj() @ v.T) ** 2
