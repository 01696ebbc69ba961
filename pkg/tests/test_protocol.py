import itertools

import numpy as np
import pytest

from dmtomo.protocol import MubSet, build_mub_d4, ideal_probability_matrix, verify_mub
from dmtomo.qlin import pure_density
from dmtomo.tomo import eta, ideal_projectors


def test_twenty_elements(mubs):
    assert len(mubs) == 20
    assert mubs.elements.shape == (20, 4)
    assert mubs.dim == 4


def test_flat_index_is_basis_major(mubs):
    assert MubSet.flat_index(2, 3) == 11
    np.testing.assert_array_equal(mubs.element(11), mubs.bases[2, 3])


def test_verify_accepts(mubs):
    rep = verify_mub(mubs)
    assert rep.orthonormality_error < 1e-12
    assert rep.unbiasedness_error < 1e-12
    assert rep.accepted


def test_replaced_element_breaks_unbiasedness(mubs):
    bases = mubs.bases.copy()
    bases[1, 0] = [1, 0, 0, 0]
    rep = verify_mub(MubSet(bases))
    assert rep.unbiasedness_error == pytest.approx(0.75, abs=1e-12)
    assert not rep.accepted


def test_permutation_invariant(mubs):
    perm = mubs.bases[[3, 0, 4, 1, 2]][:, [2, 0, 3, 1]]
    a, b = verify_mub(mubs), verify_mub(MubSet(perm))
    assert a.orthonormality_error == pytest.approx(b.orthonormality_error, abs=1e-15)
    assert a.unbiasedness_error == pytest.approx(b.unbiasedness_error, abs=1e-15)


def test_computational_basis_first(mubs):
    np.testing.assert_allclose(np.abs(mubs.bases[0]), np.eye(4), atol=1e-15)


def test_informationally_complete(mubs):
    stack = np.array([pure_density(v).ravel() for v in mubs.elements])
    assert np.linalg.matrix_rank(stack) == 16


def test_ideal_eta(mubs):
    assert eta(ideal_projectors(mubs.elements)) == pytest.approx(np.sqrt(5), abs=1e-9)


def test_probability_blocks(mubs):
    p = ideal_probability_matrix(mubs)
    for b, c in itertools.product(range(5), repeat=2):
        block = p[4 * b:4 * b + 4, 4 * c:4 * c + 4]
        np.testing.assert_allclose(block, np.eye(4) if b == c else 0.25, atol=1e-12)


def test_deterministic():
    np.testing.assert_array_equal(build_mub_d4().bases, build_mub_d4().bases)
