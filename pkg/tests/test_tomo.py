import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from dmtomo.errors import DegenerateInputError, NoValidProjectorError, RankDeficiencyError
from dmtomo.protocol import build_mub_d4, ideal_probability_matrix
from dmtomo.qlin import check_density, fidelity, pure_density, random_pure_state
from dmtomo.tomo import (
    CountsRecord,
    Projector,
    detector_tomography,
    eta,
    ideal_projectors,
    linear_inversion,
    log_likelihood,
    mle_reconstruct,
    predicted_probability,
    probability_matrix,
    projector_stack,
    simulate_counts,
)

from conftest import random_density

seeds = st.integers(0, 2**32 - 1)


def random_projectors(rng, k=20, lo=0.2, hi=1.0):
    return [Projector(float(rng.uniform(lo, hi)), random_pure_state(4, rng)) for _ in range(k)]


def exact_probs(rho, projectors):
    return np.array([predicted_probability(rho, p) for p in projectors])


@pytest.fixture(scope="module")
def ideal(mubs):
    return ideal_projectors(mubs.elements)


class TestProjector:
    def test_from_vector(self):
        p = Projector.from_vector(np.array([0.6, 0.0, 0.0, 0.0]))
        assert p.efficiency == pytest.approx(0.36)
        np.testing.assert_allclose(p.direction, [1, 0, 0, 0])

    def test_bounds(self):
        with pytest.raises(ValueError):
            Projector(1.1, np.array([1, 0, 0, 0]))
        with pytest.raises(ValueError):
            Projector(0.5, np.array([1, 1, 0, 0]))
        with pytest.raises(DegenerateInputError):
            Projector.from_vector(np.zeros(4))

    def test_dict_roundtrip(self):
        p = Projector(0.7, random_pure_state(4, 1), 0.01)
        q = Projector.from_dict(p.to_dict())
        assert q.efficiency == p.efficiency and q.discarded_weight == p.discarded_weight
        np.testing.assert_array_equal(q.direction, p.direction)


class TestPredictedProbability:
    def test_self_and_orthogonal(self):
        p = Projector(1.0, np.array([0, 1, 0, 0], dtype=complex))
        assert predicted_probability(pure_density(p.direction), p) == pytest.approx(1)
        assert predicted_probability(pure_density([1, 0, 0, 0]), p) == 0

    @given(seeds, st.floats(0, 1))
    def test_maximally_mixed(self, seed, eff):
        p = Projector(eff, random_pure_state(4, seed))
        assert predicted_probability(np.eye(4) / 4, p) == pytest.approx(eff / 4, abs=1e-15)

    def test_matrix_agrees(self, mubs):
        rng = np.random.default_rng(0)
        projs = random_projectors(rng)
        pm = probability_matrix(mubs.elements, projs)
        for i in (0, 7, 19):
            np.testing.assert_allclose(pm[i], exact_probs(pure_density(mubs.elements[i]), projs), atol=1e-15)


class TestCounts:
    def test_law_of_large_numbers(self, ideal):
        rho = pure_density(random_pure_state(4, 0))
        c = simulate_counts(rho, ideal, 1e7, 0.5, seed=1)
        p = exact_probs(rho, ideal)
        big = p > 0.05
        np.testing.assert_allclose(c.probabilities()[0][big], p[big], rtol=0.01)

    def test_zero_probability_gives_zero(self, ideal):
        c = simulate_counts(pure_density(ideal[0].direction), ideal, 1e6, 0.5, seed=0)
        assert (c.signal[0, 1:4] == 0).all()

    def test_three_sigma_band(self):
        p = Projector(0.5, np.array([1, 0, 0, 0], dtype=complex))
        rho = pure_density([1, 0, 0, 0])
        sig = np.array([simulate_counts(rho, [p], 1e4, 0.5, seed=s).signal[0, 0] for s in range(2000)])
        assert np.mean((sig >= 2300) & (sig <= 2700)) >= 0.997

    def test_deterministic(self, ideal):
        a = simulate_counts(np.eye(4) / 4, ideal, 1e5, 0.3, seed=9)
        b = simulate_counts(np.eye(4) / 4, ideal, 1e5, 0.3, seed=9)
        np.testing.assert_array_equal(a.signal, b.signal)
        np.testing.assert_array_equal(a.reference, b.reference)

    def test_csv_roundtrip(self, ideal, tmp_path):
        c = simulate_counts(np.array([np.eye(4) / 4, pure_density([0, 0, 1, 0])]), ideal, 1e4, 0.5, seed=2)
        c.to_csv(tmp_path / "c.csv")
        d = CountsRecord.from_csv(tmp_path / "c.csv")
        np.testing.assert_array_equal(c.signal, d.signal)
        np.testing.assert_array_equal(c.reference, d.reference)

    def test_validation(self):
        with pytest.raises(ValueError):
            CountsRecord([[1, -1]], [[1, 1]])
        with pytest.raises(ValueError):
            CountsRecord([[1]], [[1]], split_ratio=1.0)
        with pytest.raises(ValueError):
            simulate_counts(np.eye(4) / 4, [], 0.0)


class TestDetectorTomography:
    @given(seeds)
    @settings(max_examples=30)
    def test_noiseless_roundtrip(self, seed):
        inputs = build_mub_d4().elements
        projs = random_projectors(np.random.default_rng(seed))
        rec = detector_tomography(probability_matrix(inputs, projs), inputs)
        for a, b in zip(projs, rec):
            assert abs(np.vdot(a.direction, b.direction)) ** 2 >= 1 - 1e-9
            assert b.efficiency == pytest.approx(a.efficiency, abs=1e-9)
            assert b.discarded_weight < 1e-9

    def test_ideal_matrix(self, mubs):
        rec = detector_tomography(ideal_probability_matrix(mubs), mubs.elements)
        for v, p in zip(mubs.elements, rec):
            assert p.efficiency == pytest.approx(1, abs=1e-12)
            assert abs(np.vdot(v, p.direction)) ** 2 == pytest.approx(1, abs=1e-12)

    def test_multiplicative_noise(self, mubs, ideal):
        pm = probability_matrix(mubs.elements, ideal)
        med = []
        for s in range(100):
            rng = np.random.default_rng(s)
            rec = detector_tomography(pm * (1 + 0.01 * rng.standard_normal(pm.shape)), mubs.elements)
            med.append(np.median([abs(np.vdot(a.direction, b.direction)) ** 2 for a, b in zip(ideal, rec)]))
        assert np.median(med) >= 0.99

    def test_rank_deficient_inputs(self, mubs):
        inputs = mubs.elements[:8]
        with pytest.raises(RankDeficiencyError):
            detector_tomography(np.full((8, 3), 0.25), inputs)

    def test_negative_column(self, mubs):
        with pytest.raises(NoValidProjectorError):
            detector_tomography(np.full((20, 1), -0.1), mubs.elements)


class TestLinearInversion:
    @given(seeds)
    def test_ideal_exact(self, seed):
        ideal = ideal_projectors(build_mub_d4().elements)
        rho = pure_density(random_pure_state(4, seed))
        assert fidelity(linear_inversion(exact_probs(rho, ideal), ideal), rho) >= 1 - 1e-9

    def test_maximally_mixed(self, ideal):
        np.testing.assert_allclose(linear_inversion(exact_probs(np.eye(4) / 4, ideal), ideal), np.eye(4) / 4, atol=1e-9)

    @given(seeds, st.integers(1, 4))
    def test_noiseless_identity_any_projectors(self, seed, rank):
        rng = np.random.default_rng(seed)
        projs = random_projectors(rng, k=int(rng.integers(16, 40)), lo=0.05)
        rho = random_density(rng, rank=rank)
        assert fidelity(linear_inversion(exact_probs(rho, projs), projs), rho) >= 1 - 1e-8

    def test_duality(self, mubs):
        rng = np.random.default_rng(11)
        true = random_projectors(rng)
        rec = detector_tomography(probability_matrix(mubs.elements, true), mubs.elements)
        for _ in range(50):
            rho = random_density(rng, rank=int(rng.integers(1, 5)))
            assert fidelity(linear_inversion(exact_probs(rho, true), rec), rho) >= 1 - 1e-6

    def test_rank_deficient(self, ideal):
        with pytest.raises(RankDeficiencyError):
            linear_inversion(np.full(8, 0.25), ideal[:8])

    def test_unphysical_flag(self, ideal):
        probs = exact_probs(pure_density(ideal[0].direction), ideal) + 0.05 * np.random.default_rng(0).standard_normal(20)
        raw = linear_inversion(probs, ideal, physical=False)
        assert np.linalg.eigvalsh(raw)[0] < 0
        check_density(linear_inversion(probs, ideal))


class TestMLE:
    def test_high_counts(self, ideal):
        for s in range(5):
            rng = np.random.default_rng(s)
            rho = pure_density(random_pure_state(4, rng))
            res = mle_reconstruct(simulate_counts(rho, ideal, 1e7, 0.5, rng), ideal)
            assert fidelity(res.rho, rho) >= 0.999

    def test_mixed_state_purity(self, ideal):
        for s in range(10):
            res = mle_reconstruct(simulate_counts(np.eye(4) / 4, ideal, 1e6, 0.5, s), ideal)
            purity = np.trace(res.rho @ res.rho).real
            assert 0.25 - 1e-12 <= purity <= 0.30

    def test_beats_linear_at_low_counts(self, ideal):
        wins = 0
        for s in range(200):
            rng = np.random.default_rng(s)
            rho = pure_density(random_pure_state(4, rng))
            c = simulate_counts(rho, ideal, 1e4, 0.5, rng)
            wins += fidelity(mle_reconstruct(c, ideal).rho, rho) >= fidelity(linear_inversion(c.probabilities()[0], ideal), rho)
        assert wins >= 120

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_likelihood_monotone_and_physical(self, seed):
        rng = np.random.default_rng(seed)
        projs = ideal_projectors(build_mub_d4().elements)
        c = simulate_counts(random_density(rng, rank=2), projs, 1e4, 0.5, rng)
        res = mle_reconstruct(c, projs, max_iter=300)
        assert np.all(np.diff(res.loglik) >= 0)
        check_density(res.rho)
        ops = projector_stack(projs)
        assert log_likelihood(res.rho, c.signal[0], c.expected_photons()[0], ops) == pytest.approx(res.loglik[-1])

    def test_pair_input(self, ideal):
        rho = pure_density(random_pure_state(4, 4))
        c = simulate_counts(rho, ideal, 1e6, 0.5, 4)
        a = mle_reconstruct(c, ideal).rho
        b = mle_reconstruct((c.signal[0], c.expected_photons()[0]), ideal).rho
        np.testing.assert_array_equal(a, b)

    def test_zero_counts(self, ideal):
        with pytest.raises(DegenerateInputError):
            mle_reconstruct(CountsRecord(np.zeros((1, 20)), np.ones((1, 20))), ideal)


class TestEta:
    def test_ideal(self, ideal):
        assert eta(ideal) == pytest.approx(np.sqrt(5), abs=1e-9)

    def test_duplicated(self, ideal):
        assert eta(ideal + ideal) == pytest.approx(eta(ideal), rel=1e-12)

    @given(seeds)
    @settings(max_examples=25)
    def test_unitary_invariance(self, seed):
        rng = np.random.default_rng(seed)
        projs = random_projectors(rng)
        u = unitary_group.rvs(4, random_state=rng)
        rotated = [Projector(p.efficiency, u @ p.direction) for p in projs]
        assert eta(rotated) == pytest.approx(eta(projs), rel=1e-9)

    def test_at_least_one(self):
        assert eta(random_projectors(np.random.default_rng(3))) >= 1

    def test_rank_deficient(self, ideal):
        with pytest.raises(RankDeficiencyError):
            eta(ideal[:12])
        with pytest.raises(RankDeficiencyError):
            eta(ideal[:4] * 5)


def test_monotone_noise_response(ideal):
    """Median infidelity does not increase with photon number (linear inversion)."""
    medians = []
    for photons in (1e3, 1e4, 1e5, 1e6):
        inf = []
        for s in range(200):
            rng = np.random.default_rng(s)
            rho = pure_density(random_pure_state(4, rng))
            c = simulate_counts(rho, ideal, photons, 0.5, rng)
            inf.append(1 - fidelity(linear_inversion(c.probabilities()[0], ideal), rho))
        medians.append(np.median(inf))
    assert all(b <= a for a, b in zip(medians, medians[1:]))
