import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from satbandit.linear import EpisodicMemory
from satbandit.numeric import softmax
from satbandit.reliability import (CentroidBank, KmeansEstimator, KnnEstimator,
                                   TrialRatioEstimator, XeEstimator,
                                   centroid_commit, centroid_distances,
                                   centroid_weights, kmeans_rho,
                                   trial_ratio_reliability, xe_reliability)


def make_bank(num_actions=3, latent_dim=4, m=2, seed=0, gamma=0.99):
    return CentroidBank(num_actions, latent_dim, m,
                        np.random.default_rng(seed), gamma=gamma)


def assert_probability_vector(p, n):
    assert p.shape == (n,)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-9)


class TestCentroidBank:
    def test_shapes(self):
        bank = make_bank()
        assert bank.centroids.shape == (3, 2, 4)
        assert bank.weights.shape == (3, 2)
        assert bank.counts.shape == (3,)

    def test_gamma_validated(self):
        with pytest.raises(ValueError):
            make_bank(gamma=0.0)
        with pytest.raises(ValueError):
            make_bank(gamma=1.5)

    def test_distances(self):
        bank = make_bank()
        bank.centroids[1, 0] = np.zeros(4)
        bank.centroids[1, 1] = np.array([3.0, 4.0, 0.0, 0.0])
        d = centroid_distances(np.zeros(4), bank, 1)
        np.testing.assert_allclose(d, [0.0, 5.0])

    def test_latent_dim_mismatch_rejected(self):
        with pytest.raises(ValueError):
            centroid_distances(np.zeros(5), make_bank(), 0)

    def test_inverse_distance_weights(self):
        w = centroid_weights(np.array([0.0, 1.0]), eps=1e-8)
        assert w[0] == pytest.approx(1e8)
        assert w[1] == pytest.approx(1.0 / (1.0 + 1e-8))


class TestCentroidCommit:
    def test_update_is_convex_combination(self):
        bank = make_bank()
        bank.weights[0] = [2.0, 0.5]
        z = np.full(4, 10.0)
        before = bank.centroids[0].copy()
        w = np.ones((3, 2))
        centroid_commit(bank, 0, z, w)
        for m in range(2):
            lo = np.minimum(before[m], z)
            hi = np.maximum(before[m], z)
            assert np.all(bank.centroids[0, m] >= lo - 1e-12)
            assert np.all(bank.centroids[0, m] <= hi + 1e-12)

    def test_zero_mass_centroid_jumps_to_sample(self):
        bank = make_bank()
        z = np.full(4, 7.0)
        centroid_commit(bank, 2, z, np.ones((3, 2)))
        np.testing.assert_allclose(bank.centroids[2], np.tile(z, (2, 1)))

    def test_decay_hits_all_actions_then_chosen_gains(self):
        bank = make_bank(gamma=0.9)
        bank.weights[:] = 1.0
        bank.counts[:] = 10.0
        centroid_commit(bank, 0, np.zeros(4), np.full((3, 2), 2.0))
        np.testing.assert_allclose(bank.weights[1], 0.9)
        np.testing.assert_allclose(bank.counts[1], 9.0)
        np.testing.assert_allclose(bank.weights[0], 0.9 + 2.0)
        assert bank.counts[0] == pytest.approx(9.0 + 1.0)

    def test_unchosen_centroids_do_not_move(self):
        bank = make_bank()
        before = bank.centroids[1].copy()
        centroid_commit(bank, 0, np.ones(4), np.ones((3, 2)))
        np.testing.assert_array_equal(bank.centroids[1], before)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 10_000))
    def test_convexity_fuzzed(self, seed):
        rng = np.random.default_rng(seed)
        bank = make_bank(seed=seed)
        bank.weights = rng.random((3, 2)) * 10
        z = rng.normal(size=4) * 5
        before = bank.centroids.copy()
        a = int(rng.integers(3))
        centroid_commit(bank, a, z, rng.random((3, 2)) * 3 + 1e-6)
        for m in range(2):
            lo = np.minimum(before[a, m], z) - 1e-9
            hi = np.maximum(before[a, m], z) + 1e-9
            assert np.all(bank.centroids[a, m] >= lo)
            assert np.all(bank.centroids[a, m] <= hi)


class TestRhoFunctions:
    def test_kmeans_rho_is_probability_vector(self):
        bank = make_bank()
        bank.counts[:] = [5.0, 1.0, 0.0]
        rho = kmeans_rho(bank, np.ones((3, 2)))
        assert_probability_vector(rho, 3)

    def test_kmeans_rho_favors_heavy_nearby_action(self):
        bank = make_bank()
        bank.counts[:] = [10.0, 10.0, 10.0]
        w = np.ones((3, 2))
        w[1] = 50.0  # action 1's centroids much closer
        rho = kmeans_rho(bank, w)
        assert rho.argmax() == 1

    def test_xe_is_softmax_of_outputs(self):
        out = np.array([0.2, -1.0, 0.7])
        np.testing.assert_allclose(xe_reliability(out), softmax(out))

    def test_trial_ratio(self):
        np.testing.assert_allclose(trial_ratio_reliability([3, 1, 0]),
                                   [0.75, 0.25, 0.0])

    def test_trial_ratio_no_trials_rejected(self):
        with pytest.raises(ValueError):
            trial_ratio_reliability([0, 0])


class TestEstimators:
    def make_estimators(self, num_actions=3, dim=5, latent_dim=4, seed=0):
        bank = CentroidBank(num_actions, latent_dim, 2, np.random.default_rng(seed))
        mem = EpisodicMemory(100, dim, num_actions)
        return [KmeansEstimator(bank),
                KnnEstimator(mem, k=10),
                XeEstimator(),
                TrialRatioEstimator()]

    def test_kinds(self):
        kinds = [e.kind for e in self.make_estimators()]
        assert kinds == ["kmeans", "knn", "xe", "trial_ratio"]
        flags = [e.uses_latent for e in self.make_estimators()]
        assert flags == [True, False, False, False]

    def test_all_return_probability_vectors_after_observations(self):
        rng = np.random.default_rng(1)
        ests = self.make_estimators()
        for _ in range(30):
            x = rng.normal(size=5)
            z = np.abs(rng.normal(size=4))
            a = int(rng.integers(3))
            for est in ests:
                est.observe(x, z, a)
        counts = np.array([12.0, 10.0, 8.0])
        for est in ests:
            rho = est.rho(rng.normal(size=5), np.abs(rng.normal(size=4)),
                          rng.normal(size=3), counts)
            assert_probability_vector(np.asarray(rho), 3)

    def test_knn_estimator_uniform_before_any_memory(self):
        est = KnnEstimator(EpisodicMemory(10, 2, 4), k=5)
        rho = est.rho(np.zeros(2), None, None, np.zeros(4))
        np.testing.assert_allclose(rho, 0.25)
