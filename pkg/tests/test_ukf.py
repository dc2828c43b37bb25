"""Engine behavior: sigma-point identities, equivalence with a linear Kalman
filter, gating, and covariance hygiene."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import random_state
from mukf.errors import CovarianceNotPSD, InnovationCovarianceSingular
from mukf.state import DIM, NavManifold, VectorManifold
from mukf.ukf import (
    GaussianBelief,
    ManifoldUkf,
    gate_threshold,
    repair_psd,
    ut_weights,
)


class PlainKalman:
    """Textbook linear KF, written independently as the oracle."""

    def __init__(self, x, P):
        self.x = np.array(x, dtype=float)
        self.P = np.array(P, dtype=float)

    def predict(self, F, Q, u=None):
        self.x = F @ self.x + (0.0 if u is None else u)
        self.P = F @ self.P @ F.T + Q

    def update(self, H, z, R):
        S = H @ self.P @ H.T + R
        K = self.P @ H.T @ np.linalg.inv(S)
        self.x = self.x + K @ (z - H @ self.x)
        self.P = self.P - K @ S @ K.T


def random_spd(rng, n, scale=1.0):
    a = rng.normal(size=(n, n))
    return scale * (a @ a.T + n * np.eye(n))


class TestWeights:
    def test_mean_weights_sum_to_one(self):
        wm, wc, c = ut_weights(43, 1e-2, 2.0, 0.0)
        assert wm.sum() == pytest.approx(1.0, abs=1e-9)
        assert len(wm) == len(wc) == 87
        assert c == pytest.approx(1e-2 * np.sqrt(43.0))

    def test_covariance_zeroth_weight_includes_beta_term(self):
        wm, wc, _ = ut_weights(4, 0.5, 2.0, 1.0)
        lam = 0.25 * 5 - 4
        assert wm[0] == pytest.approx(lam / (4 + lam))
        assert wc[0] == pytest.approx(wm[0] + 1 - 0.25 + 2.0)


class TestGateThreshold:
    # reference quantiles from chi-square tables
    @pytest.mark.parametrize(
        "dof, conf, expected",
        [
            (1, 0.6827, 1.000),
            (2, 0.95, 5.991),
            (3, 0.99, 11.345),
            (2, 0.99, 9.210),
            (6, 0.99, 16.812),
        ],
    )
    def test_against_tabulated_values(self, dof, conf, expected):
        assert gate_threshold(dof, conf) == pytest.approx(expected, abs=2e-3)

    def test_bad_confidence(self):
        with pytest.raises(ValueError):
            gate_threshold(3, 1.5)


class TestSigmaPoints:
    def test_count_and_zeroth_point(self, rng):
        man = NavManifold()
        ukf = ManifoldUkf(man)
        mean = random_state(rng)
        belief = GaussianBelief(mean, 1e-4 * np.eye(DIM))
        pts = ukf.draw_sigma_points(belief)
        assert pts.deltas.shape == (87, DIM)
        assert_allclose(pts.deltas[0], 0.0, atol=0.0)

    def test_zero_covariance_collapses_to_mean(self, rng):
        ukf = ManifoldUkf(VectorManifold(3))
        belief = GaussianBelief(rng.normal(size=3), np.zeros((3, 3)))
        pts = ukf.draw_sigma_points(belief)
        assert_allclose(pts.batch - belief.mean, 0.0, atol=0.0)

    def test_mean_reconstruction(self, rng):
        man = NavManifold()
        ukf = ManifoldUkf(man)
        mean = random_state(rng)
        belief = GaussianBelief(mean, random_spd(rng, DIM, 1e-4))
        pts = ukf.draw_sigma_points(belief)
        rec = man.weighted_mean(pts.batch, pts.wm)
        assert_allclose(rec.to_euclid(), mean.to_euclid(), atol=1e-9)
        assert rec.attitude.angle_to(mean.attitude) < 1e-9

    def test_covariance_reconstruction(self, rng):
        man = VectorManifold(5)
        ukf = ManifoldUkf(man)
        P = random_spd(rng, 5)
        belief = GaussianBelief(rng.normal(size=5), P)
        pred = ukf.predict(belief, lambda b: b, np.zeros((5, 5)))
        assert_allclose(pred.cov, P, atol=1e-9)
        assert_allclose(pred.mean, belief.mean, atol=1e-10)

    def test_process_noise_adds_exactly(self, rng):
        ukf = ManifoldUkf(VectorManifold(3))
        P = random_spd(rng, 3)
        q = np.array([0.1, 0.2, 0.3])
        belief = GaussianBelief(rng.normal(size=3), P)
        a = ukf.predict(belief, lambda b: b, np.diag(q))
        b = ukf.predict(belief, lambda b: b, q)  # diagonal shorthand
        assert_allclose(a.cov, b.cov, atol=0.0)
        assert_allclose(np.diag(a.cov) - np.diag(P), q, atol=1e-9)


class TestLinearEquivalence:
    def test_matches_kalman_filter_over_many_steps(self):
        # constant-velocity model with position measurement; the UKF on a
        # trivial chart must agree with the closed-form KF to ~machine noise
        rng = np.random.default_rng(20)
        dt = 0.5
        F = np.array([[1.0, dt], [0.0, 1.0]])
        Q = np.array([[1e-4, 0.0], [0.0, 1e-3]])
        H = np.array([[1.0, 0.0]])
        R = np.array([[0.09]])

        kf = PlainKalman([0.0, 1.0], np.diag([4.0, 1.0]))
        ukf = ManifoldUkf(VectorManifold(2))
        belief = GaussianBelief(np.array([0.0, 1.0]), np.diag([4.0, 1.0]))

        for _ in range(50):
            kf.predict(F, Q)
            belief = ukf.predict(belief, lambda b: b @ F.T, Q)
            z = kf.x[0] + rng.normal(0.0, 0.3)
            kf.update(H, np.array([z]), R)
            belief, rep = ukf.update(belief, lambda b: b @ H.T, np.array([z]), R)
            assert rep.accepted
            assert_allclose(belief.mean, kf.x, atol=1e-9)
            assert_allclose(belief.cov, kf.P, atol=1e-9)


class TestUpdate:
    def test_zero_innovation_leaves_mean_and_shrinks_cov(self, rng):
        ukf = ManifoldUkf(VectorManifold(3))
        P = random_spd(rng, 3)
        x = rng.normal(size=3)
        belief = GaussianBelief(x.copy(), P)
        H = rng.normal(size=(2, 3))
        out, rep = ukf.update(belief, lambda b: b @ H.T, H @ x, 0.1 * np.eye(2))
        assert rep.accepted
        assert rep.mahalanobis_sq == pytest.approx(0.0, abs=1e-18)
        assert_allclose(out.mean, x, atol=1e-12)
        assert np.trace(out.cov) < np.trace(P)

    def test_gate_rejects_large_innovation(self, rng):
        # S is engineered to the identity, so d^2 is just |innov|^2;
        # chi2(3, 0.99) = 11.345 sits between the two cases
        ukf = ManifoldUkf(VectorManifold(3))
        belief = GaussianBelief(np.zeros(3), 0.5 * np.eye(3))
        h = lambda b: b
        R = 0.5 * np.eye(3)

        z_far = np.full(3, 2.0)  # d^2 = 12.0
        out, rep = ukf.update(belief, h, z_far, R, gate_confidence=0.99)
        assert not rep.accepted
        assert out is belief
        assert rep.mahalanobis_sq == pytest.approx(12.0, abs=1e-9)
        assert rep.threshold == pytest.approx(11.345, abs=2e-3)

        z_near = np.full(3, 1.8)  # d^2 = 9.72
        out, rep = ukf.update(belief, h, z_near, R, gate_confidence=0.99)
        assert rep.accepted
        assert rep.mahalanobis_sq == pytest.approx(9.72, abs=1e-9)

    def test_rejected_update_returns_identical_arrays(self, rng):
        ukf = ManifoldUkf(VectorManifold(2))
        cov = np.eye(2)
        belief = GaussianBelief(np.zeros(2), cov)
        out, rep = ukf.update(belief, lambda b: b, np.array([50.0, 50.0]), np.eye(2), gate_confidence=0.99)
        assert not rep.accepted
        assert out.cov is cov

    def test_huge_R_changes_nothing(self, rng):
        ukf = ManifoldUkf(VectorManifold(3))
        P = random_spd(rng, 3)
        x = rng.normal(size=3)
        belief = GaussianBelief(x.copy(), P.copy())
        out, _ = ukf.update(belief, lambda b: b, x + 1.0, 1e12 * np.eye(3))
        assert np.max(np.abs(out.mean - x)) < 1e-6
        assert np.max(np.abs(out.cov - P)) / np.max(np.abs(P)) < 1e-6

    def test_singular_innovation_covariance_raises(self):
        ukf = ManifoldUkf(VectorManifold(2))
        belief = GaussianBelief(np.zeros(2), np.zeros((2, 2)))
        with pytest.raises(InnovationCovarianceSingular):
            ukf.update(belief, lambda b: b, np.ones(2), np.zeros((2, 2)))

    def test_update_on_manifold_state_moves_attitude(self, rng):
        # a direct observation of the attitude tangent pulls the quaternion
        man = NavManifold()
        ukf = ManifoldUkf(man)
        mean = random_state(rng)
        belief = GaussianBelief(mean, 1e-2 * np.eye(DIM))

        def h(batch):
            return man.residuals(batch, mean)[:, 3:6]

        z = np.array([0.05, 0.0, 0.0])
        out, rep = ukf.update(belief, h, z, 1e-6 * np.eye(3))
        assert rep.accepted
        rel = mean.attitude.inverse() * out.mean.attitude
        assert_allclose(rel.as_rotvec(), z, atol=1e-4)


class TestPsdRepair:
    def test_tiny_negative_eigenvalue_is_repaired(self, rng):
        P = random_spd(rng, 4)
        v = np.linalg.eigh(P)[1][:, 0]
        bad = P - (np.linalg.eigvalsh(P)[0] + 1e-13 * np.trace(P)) * np.outer(v, v)
        fixed = repair_psd(bad)
        assert np.linalg.eigvalsh(fixed)[0] > -1e-12 * np.trace(P)
        np.linalg.cholesky(fixed + 1e-30 * np.eye(4))

    def test_zero_matrix_passes_through(self):
        assert_allclose(repair_psd(np.zeros((3, 3))), np.zeros((3, 3)), atol=0.0)

    def test_hopeless_matrix_raises(self):
        with pytest.raises(CovarianceNotPSD):
            repair_psd(np.diag([1.0, -1.0]))

    def test_nonfinite_raises(self):
        with pytest.raises(CovarianceNotPSD):
            repair_psd(np.full((2, 2), np.nan))


class TestLongRunStability:
    def test_many_cycles_keep_covariance_healthy_vector(self):
        # 10^4 predict/update cycles tracking a bounded truth: covariance
        # must stay symmetric and numerically PSD throughout
        rng = np.random.default_rng(21)
        n = 4
        ukf = ManifoldUkf(VectorManifold(n))
        F = np.eye(n) + 0.01 * rng.normal(size=(n, n))
        F *= 0.995 / np.max(np.abs(np.linalg.eigvals(F)))  # keep the dynamics stable
        H = rng.normal(size=(2, n))
        Q = 1e-4 * np.eye(n)
        R = 0.05 * np.eye(2)
        truth = np.zeros(n)
        belief = GaussianBelief(np.zeros(n), np.eye(n))
        for i in range(10_000):
            truth = F @ truth + rng.normal(0.0, 1e-2, n)
            belief = ukf.predict(belief, lambda b: b @ F.T, Q)
            z = H @ truth + rng.normal(0.0, 0.2, 2)
            belief, _ = ukf.update(belief, lambda b: b @ H.T, z, R)
            if i % 500 == 0:
                assert_allclose(belief.cov, belief.cov.T, atol=1e-10)
                assert np.linalg.eigvalsh(belief.cov)[0] > -1e-9 * np.trace(belief.cov)
        assert np.all(np.isfinite(belief.cov))
        assert np.linalg.norm(belief.mean - truth) < 1.0

    def test_many_cycles_on_nav_manifold(self, rng):
        man = NavManifold()
        ukf = ManifoldUkf(man)
        mean = random_state(rng)
        belief = GaussianBelief(mean, 1e-3 * np.eye(DIM))
        q = np.full(DIM, 1e-8)

        def f(batch):
            batch.euclid[:, 0:3] += 0.01 * batch.euclid[:, 3:6]
            return batch

        def h(batch):
            return batch.euclid[:, 0:3]

        for i in range(300):
            belief = ukf.predict(belief, f, q)
            z = belief.mean.position + rng.normal(0.0, 0.05, 3)
            belief, _ = ukf.update(belief, h, z, 2.5e-3 * np.eye(3))
        assert_allclose(belief.cov, belief.cov.T, atol=1e-10)
        assert np.linalg.eigvalsh(belief.cov)[0] > -1e-9 * np.trace(belief.cov)
