import math

import numpy as np
import pytest

from constrained_duels.core_model import validate_preference_matrix
from constrained_duels.environment import DuelFeedback, InstanceSpec, env_init
from constrained_duels.errors import BoundViolation, GammaOutOfRange
from constrained_duels.harness import run_trial
from constrained_duels.instances import synthetic_instance
from constrained_duels.lp_benchmarks import solve_shifted_borda_lp
from constrained_duels.policies import (
    DuelingEXP3,
    DuelingTS,
    EstimateBundle,
    StaticLPPolicy,
    VigilantDEXP3,
    _mix,
    default_hyperparameters,
    estimate_bundle,
    vigilant_init,
)


def _fb(o=1, u=0.5, v=0.5):
    return DuelFeedback(o, np.atleast_1d(np.float64(u)), np.atleast_1d(np.float64(v)))


class TestHyperparameters:
    def test_pinned_values(self):
        # independent 30-digit evaluation of the closed form
        eta, gamma = default_hyperparameters(6, 2000, 2.0)
        assert eta == pytest.approx(0.00102285181622, rel=1e-10)
        assert gamma == pytest.approx(0.0783397146876, rel=1e-10)
        eta0, gamma0 = default_hyperparameters(6, 2000, 0.0)
        assert eta0 == pytest.approx(0.00511425908111, rel=1e-10)
        assert gamma0 == pytest.approx(0.175172927379, rel=1e-10)

    def test_closed_form(self):
        eta, gamma = default_hyperparameters(6, 2000, 2.0)
        assert eta == (math.log(6) / (2000 * math.sqrt(6))) ** (2 / 3) / 5
        assert gamma == math.sqrt(6 * eta)

    def test_gamma_out_of_range(self):
        with pytest.raises(GammaOutOfRange):
            default_hyperparameters(2, 1, 0.0)
        with pytest.raises(GammaOutOfRange):
            vigilant_init(10, 1, 20, 10, 0.0, 0.0)

    def test_short_horizon_k2_is_fine(self):
        _, gamma = default_hyperparameters(2, 4, 0.0)
        assert gamma == pytest.approx(0.7024, abs=1e-4)

    def test_init_state(self):
        pol = vigilant_init(6, 2, 2000, 1000, 2.0, 3.0)
        np.testing.assert_array_equal(pol.q_x, np.full(6, 1 / 6))
        np.testing.assert_array_equal(pol.q_y, np.full(6, 1 / 6))
        np.testing.assert_array_equal(pol.lambda_x, [0.0, 0.0])
        assert pol.eta_dual == pytest.approx(1 / math.sqrt(2000))
        assert pol.eta_y < pol.eta_x


class TestSelect:
    def test_point_mass(self):
        pol = vigilant_init(6, 1, 2000, 1000, 1.0, 1.0)
        pol.q_x = np.eye(6)[3]
        pol._refresh_cdf()
        rng = np.random.default_rng(0)
        assert all(pol.select(rng)[0] == 3 for _ in range(500))

    def test_uniform_frequencies(self):
        pol = vigilant_init(6, 1, 2000, 1000, 1.0, 1.0)
        rng = np.random.default_rng(1)
        n = 10**5
        draws = np.array([pol.select(rng) for _ in range(n)])
        sd = math.sqrt(n * (1 / 6) * (5 / 6))
        for col in range(2):
            counts = np.bincount(draws[:, col], minlength=6)
            assert np.all(np.abs(counts - n / 6) <= 3.5 * sd)


class TestEstimates:
    def setup_method(self):
        self.q = np.full(6, 1 / 6)

    def test_borda_estimate(self):
        est = estimate_bundle(self.q, self.q, 2, 4, 1, np.array([0.5]), np.array([0.5]))
        assert est.b_hat[2] == pytest.approx(6.0)
        assert np.count_nonzero(est.b_hat) == 1

    def test_loss_gives_zero(self):
        est = estimate_bundle(self.q, self.q, 2, 4, 0, np.array([0.5]), np.array([0.5]))
        assert not est.b_hat.any()

    def test_consumption_estimate(self):
        est = estimate_bundle(self.q, self.q, 2, 4, 1, np.array([0.4]), np.array([1.0]))
        assert est.u_hat_x[2, 0] == pytest.approx(-2.6)
        assert np.all(np.delete(est.u_hat_x, 2, axis=0) == 1.0)
        np.testing.assert_array_equal(est.u_hat_y, 1.0)

    def test_y_side_uses_its_own_distribution(self):
        q_y = np.array([0.5, 0.1, 0.1, 0.1, 0.1, 0.1])
        est = estimate_bundle(self.q, q_y, 2, 0, 1, np.array([0.4]), np.array([0.4]))
        assert est.u_hat_y[0, 0] == pytest.approx(1 - 0.6 / 0.5)
        assert est.b_hat[2] == pytest.approx(1 / (6 * (1 / 6) * 0.5))


class TestLagrangian:
    def _pol(self, **kw):
        # B/T = 0.5 gives a per-slot pace of 0.25
        return VigilantDEXP3(6, 1, 2000, 1000, 1.0, 1.0, **kw)

    def test_zero_dual_gives_borda_estimate(self):
        pol = self._pol()
        est = estimate_bundle(pol.q_x, pol.q_y, 1, 1, 1, np.array([0.3]), np.array([0.3]))
        lx, ly = pol.lagrangian(est)
        np.testing.assert_array_equal(lx, est.b_hat)
        np.testing.assert_array_equal(ly, est.b_hat)

    def test_full_dual(self):
        pol = self._pol()
        pol.lambda_x[:] = 1.0
        est = EstimateBundle(np.arange(6.0), np.ones((6, 1)), np.ones((6, 1)))
        lx, _ = pol.lagrangian(est)
        np.testing.assert_allclose(lx, np.arange(6.0) - 0.75)

    def test_zero_scale_ignores_dual(self):
        pol = VigilantDEXP3(6, 1, 2000, 1000, 0.0, 0.0)
        pol.lambda_x[:] = 1.0
        est = EstimateBundle(np.zeros(6), np.full((6, 1), -3.0), np.ones((6, 1)))
        lx, _ = pol.lagrangian(est)
        np.testing.assert_array_equal(lx, 0.0)

    def test_bound_violation(self):
        pol = self._pol()
        est = EstimateBundle(np.full(6, 1e9), np.ones((6, 1)), np.ones((6, 1)))
        with pytest.raises(BoundViolation):
            pol.lagrangian(est)


class TestPrimal:
    def test_equal_losses_stay_uniform(self):
        pol = vigilant_init(6, 1, 2000, 1000, 1.0, 1.0)
        pol.update_primal(np.full(6, 3.0), np.full(6, 3.0))
        np.testing.assert_allclose(pol.q_x, 1 / 6, atol=1e-15)

    def test_saturation_and_floor(self):
        pol = VigilantDEXP3(6, 1, 2000, 1000, 1.0, 1.0, eta_x=1.0, eta_y=1.0)
        pol.update_primal(np.array([1000.0, 0, 0, 0, 0, 0]), np.zeros(6))
        g = pol.gamma_x
        np.testing.assert_allclose(pol.q_x[1:], g / 6, atol=1e-9)
        assert pol.q_x[0] == pytest.approx(1 - g + g / 6, abs=1e-9)

    def test_mixing_floor(self):
        q = _mix(np.random.default_rng(0).normal(size=10) * 100, 1.0, 0.1)
        assert q.min() >= 0.01 - 1e-15
        assert q.sum() == pytest.approx(1.0)

    @pytest.mark.parametrize("scale", [1e3, 1e6, -1e6])
    def test_stability(self, scale):
        L = np.array([scale, 0.0, -scale, 0.5 * scale])
        q = _mix(L, 1.0, 0.05)
        assert np.all(np.isfinite(q))
        assert q.sum() == pytest.approx(1.0)


class TestDual:
    def _pol(self, d=1):
        return VigilantDEXP3(6, d, 2000, 1000, 1.0, 1.0)

    def test_zero_gradient(self):
        pol = self._pol()
        pol.lambda_x[:] = 0.3
        pol.update_dual(np.zeros(1), np.zeros(1))
        assert pol.lambda_x[0] == pytest.approx(0.3)

    def test_overspending_raises_dual_and_clips(self):
        pol = self._pol()
        for _ in range(200):
            pol.update_dual(np.array([-5.0]), np.array([-5.0]))
        assert pol.lambda_x[0] == 1.0 and pol.lambda_y[0] == 1.0

    def test_underspending_stays_at_zero(self):
        pol = self._pol()
        pol.update_dual(np.array([0.2]), np.array([0.2]))
        assert pol.lambda_x[0] == 0.0

    def test_gradient_sources(self):
        pol = VigilantDEXP3(6, 1, 2000, 1000, 1.0, 1.0, dual_input="estimate")
        fb = _fb(1, 0.4, 0.9)
        est = pol.estimates(2, 4, fb.o, fb.u_obs, fb.v_obs)
        gx, gy = pol.dual_gradients(est, 2, 4, fb)
        assert gx[0] == pytest.approx(0.25 - (-2.6))
        obs = self._pol()
        gx, gy = obs.dual_gradients(est, 2, 4, fb)
        assert gx[0] == pytest.approx(0.25 - 0.4) and gy[0] == pytest.approx(0.25 - 0.9)

    def test_invariants_over_a_run(self):
        inst = synthetic_instance("a").replace(T=600, B=300.0)
        pol = VigilantDEXP3(6, 1, 600, 300.0, 2.0, 2.0)
        env = env_init(inst, 0)
        rng = np.random.default_rng(1)
        while not env.stopped:
            x, y = pol.select(rng)
            pol.update(x, y, env.step(x, y))
            assert pol.q_x.min() >= pol.gamma_x / 6 - 1e-12
            assert pol.q_y.min() >= pol.gamma_y / 6 - 1e-12
            assert 0 <= pol.lambda_x.min() and pol.lambda_x.max() <= 1


class TestBaselines:
    def test_dexp3_matches_zero_scale_vigilant(self):
        inst = synthetic_instance("b").replace(T=500, B=250.0)
        a = run_trial(inst, DuelingEXP3(6, 1, 500, 250.0), 3)
        b = run_trial(inst, VigilantDEXP3(6, 1, 500, 250.0, 0.0, 0.0), 3)
        assert a.fingerprint() == b.fingerprint()

    def test_zero_consumption_keeps_dual_idle(self):
        inst = synthetic_instance("c", noise_sigma=0.0).replace(T=500)
        pol = VigilantDEXP3(6, 1, 500, 1000, 2.0, 2.0)
        run_trial(inst, pol, 0)
        assert pol.lambda_x[0] == 0.0 and pol.lambda_y[0] == 0.0

    def test_dexp3_uniform_preferences(self):
        P = validate_preference_matrix(np.full((6, 6), 0.5))
        inst = InstanceSpec(P, np.zeros(6), np.zeros(6), noise_sigma=0.0, T=10**4, B=1.0)
        pol = DuelingEXP3(6, 1, 10**4, 1.0)
        run_trial(inst, pol, 0)
        assert np.abs(pol.q_x - 1 / 6).max() < 0.1

    def test_dts_posterior(self):
        ts = DuelingTS(4)
        assert ts.posterior_mean(0, 3) == 0.5
        for _ in range(100):
            ts.update(0, 3, _fb(1))
        assert ts.posterior_mean(0, 3) == pytest.approx(101 / 102)
        assert ts.alpha[0, 3] == ts.beta[3, 0]

    def test_dts_ignores_self_duel(self):
        ts = DuelingTS(3)
        ts.update(1, 1, _fb(1))
        assert np.all(ts.alpha == 1) and np.all(ts.beta == 1)

    def test_dts_two_arms(self):
        P = validate_preference_matrix([[0.5, 0.9], [0.1, 0.5]])
        inst = InstanceSpec(P, [0, 0], [0, 0], noise_sigma=0.0, T=10**4, B=1.0)
        tr = run_trial(inst, DuelingTS(2), 0)
        assert np.mean(tr.x[-1000:] == 0) >= 0.9

    def test_static_point_mass(self):
        inst = synthetic_instance("c")
        pol = StaticLPPolicy(solve_shifted_borda_lp(inst))
        rng = np.random.default_rng(0)
        assert {pol.select(rng) for _ in range(100)} == {(0, 0)}

    def test_static_policy_consumption_and_reward(self):
        inst = synthetic_instance("b").replace(T=10**4, B=5000.0)
        sol = solve_shifted_borda_lp(inst)
        pol = StaticLPPolicy(sol)
        rng = np.random.default_rng(2)
        draws = np.array([pol.select(rng) for _ in range(10**4)])
        u = inst.u_mean[:, 0]
        per_round = u[draws[:, 0]] + u[draws[:, 1]]
        se = per_round.std() / math.sqrt(per_round.size)
        assert per_round.mean() <= inst.B / inst.T + 3 * se
        expected = sol.policy.pi_x @ u + sol.policy.pi_y @ u
        assert expected <= inst.B / inst.T + 1e-9
