"""Duel-selection policies sharing a ``select(rng) -> (x, y)`` / ``update`` interface.

``VigilantDEXP3`` is the primal-dual exponential-weights learner; ``DuelingEXP3``
is the same machinery with the constraint term switched off; ``DuelingTS``
is a Beta-posterior Thompson sampler; ``StaticLPPolicy`` replays an LP solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .environment import DuelFeedback
from .errors import BoundViolation, GammaOutOfRange, ValidationError

DualInput = Literal["observed", "estimate"]


def default_hyperparameters(K: int, T: int, Z: float) -> tuple[float, float]:
    """Learning and exploration rates ``(eta, gamma)`` for horizon ``T`` and scale ``Z``."""
    if K < 2 or T < 1 or Z < 0:
        raise ValidationError("need K >= 2, T >= 1 and Z >= 0")
    eta = (math.log(K) / (T * math.sqrt(K))) ** (2.0 / 3.0) / (2.0 * Z + 1.0)
    gamma = math.sqrt(eta * K)
    if gamma >= 1.0:
        raise GammaOutOfRange(
            f"exploration rate {gamma:.4f} >= 1 for K={K}, T={T}, Z={Z}; horizon too short"
        )
    return eta, gamma


@dataclass
class EstimateBundle:
    b_hat: np.ndarray
    u_hat_x: np.ndarray
    u_hat_y: np.ndarray


def estimate_bundle(
    q_x: np.ndarray, q_y: np.ndarray, x: int, y: int, o: int,
    u_obs: np.ndarray, v_obs: np.ndarray,
) -> EstimateBundle:
    """Importance-weighted estimates of shifted Borda scores and consumptions."""
    K = q_x.size
    d = np.size(u_obs)
    b_hat = np.zeros(K)
    if o:
        b_hat[x] = 1.0 / (K * q_x[x] * q_y[y])
    u_hat_x = np.ones((K, d))
    u_hat_x[x] = 1.0 - (1.0 - np.asarray(u_obs, dtype=float)) / q_x[x]
    u_hat_y = np.ones((K, d))
    u_hat_y[y] = 1.0 - (1.0 - np.asarray(v_obs, dtype=float)) / q_y[y]
    return EstimateBundle(b_hat, u_hat_x, u_hat_y)


def _mix(L: np.ndarray, eta: float, gamma: float) -> np.ndarray:
    logits = eta * L
    logits = logits - logits.max()
    w = np.exp(logits)
    return (1.0 - gamma) * (w / w.sum()) + gamma / L.size


def _draw(cdf: np.ndarray, r: float) -> int:
    i = int(np.searchsorted(cdf, r, side="right"))
    return min(i, cdf.size - 1)


class VigilantDEXP3:
    """Primal-dual exponential weights on Lagrangian-adjusted Borda estimates.

    Two independent distributions pick the x and y slot; each slot carries its
    own dual vector in [0, 1]^d penalising consumption above the per-slot pace
    ``B / 2T``.  The dual vectors follow projected online gradient descent
    with step ``dual_step`` (default ``1 / sqrt(T)``).
    """

    name = "vigilant"

    def __init__(
        self, K: int, d: int, T: int, B: float, z_x: float, z_y: float, *,
        eta_x: Optional[float] = None, eta_y: Optional[float] = None,
        gamma_x: Optional[float] = None, gamma_y: Optional[float] = None,
        dual_step: Optional[float] = None, dual_input: DualInput = "observed",
        check_bounds: bool = True,
    ):
        if z_x < 0 or z_y < 0:
            raise ValidationError("Z_x and Z_y must be nonnegative")
        if dual_input not in ("observed", "estimate"):
            raise ValidationError(f"unknown dual input {dual_input!r}")
        self.K, self.d, self.T, self.B = K, d, T, float(B)
        self.z_x, self.z_y = float(z_x), float(z_y)
        if eta_x is None or gamma_x is None:
            ex, gx = default_hyperparameters(K, T, self.z_x)
            eta_x = ex if eta_x is None else eta_x
            gamma_x = gx if gamma_x is None else gamma_x
        if eta_y is None or gamma_y is None:
            ey, gy = default_hyperparameters(K, T, self.z_y)
            eta_y = ey if eta_y is None else eta_y
            gamma_y = gy if gamma_y is None else gamma_y
        for g in (gamma_x, gamma_y):
            if not 0.0 < g < 1.0:
                raise GammaOutOfRange(f"exploration rate {g} outside (0, 1)")
        self.eta_x, self.eta_y = float(eta_x), float(eta_y)
        self.gamma_x, self.gamma_y = float(gamma_x), float(gamma_y)
        self.eta_dual = 1.0 / math.sqrt(T) if dual_step is None else float(dual_step)
        self.dual_input = dual_input
        self.check_bounds = check_bounds
        self.pace = self.B / (2.0 * T)

        self.Lhat_x = np.zeros(K)
        self.Lhat_y = np.zeros(K)
        self.q_x = np.full(K, 1.0 / K)
        self.q_y = np.full(K, 1.0 / K)
        self.lambda_x = np.zeros(d)
        self.lambda_y = np.zeros(d)
        self._refresh_cdf()

        self.loss_bound_x = K / (self.gamma_x * self.gamma_y) + self.z_x * (self.pace + K / self.gamma_x) * d
        self.loss_bound_y = K / (self.gamma_x * self.gamma_y) + self.z_y * (self.pace + K / self.gamma_y) * d

    def _refresh_cdf(self) -> None:
        self._cdf_x = np.cumsum(self.q_x)
        self._cdf_y = np.cumsum(self.q_y)

    def select(self, rng: np.random.Generator) -> tuple[int, int]:
        r = rng.random(2)
        return _draw(self._cdf_x, r[0]), _draw(self._cdf_y, r[1])

    def estimates(self, x: int, y: int, o: int, u_obs, v_obs) -> EstimateBundle:
        return estimate_bundle(self.q_x, self.q_y, x, y, o, u_obs, v_obs)

    def lagrangian(self, est: EstimateBundle) -> tuple[np.ndarray, np.ndarray]:
        pace = self.pace
        loss_x = est.b_hat + self.z_x * (pace * self.lambda_x.sum() - est.u_hat_x @ self.lambda_x)
        loss_y = est.b_hat + self.z_y * (pace * self.lambda_y.sum() - est.u_hat_y @ self.lambda_y)
        if self.check_bounds:
            if (np.abs(loss_x).max() > self.loss_bound_x * (1 + 1e-12) + 1e-12
                    or np.abs(loss_y).max() > self.loss_bound_y * (1 + 1e-12) + 1e-12):
                raise BoundViolation("estimated Lagrangian exceeds its magnitude bound")
        return loss_x, loss_y

    def update_primal(self, loss_x: np.ndarray, loss_y: np.ndarray) -> None:
        self.Lhat_x += loss_x
        self.Lhat_y += loss_y
        self.q_x = _mix(self.Lhat_x, self.eta_x, self.gamma_x)
        self.q_y = _mix(self.Lhat_y, self.eta_y, self.gamma_y)
        self._refresh_cdf()

    def dual_gradients(self, est: EstimateBundle, x: int, y: int, fb: DuelFeedback) -> tuple[np.ndarray, np.ndarray]:
        if self.dual_input == "estimate":
            cx, cy = est.u_hat_x[x], est.u_hat_y[y]
        else:
            cx, cy = fb.u_obs, fb.v_obs
        return self.pace - cx, self.pace - cy

    def update_dual(self, grad_x: np.ndarray, grad_y: np.ndarray) -> None:
        self.lambda_x = np.clip(self.lambda_x - self.eta_dual * grad_x, 0.0, 1.0)
        self.lambda_y = np.clip(self.lambda_y - self.eta_dual * grad_y, 0.0, 1.0)

    def update(self, x: int, y: int, fb: DuelFeedback) -> None:
        # Estimates use the distributions that sampled (x, y), so compute all
        # round-t quantities before touching q or lambda.
        est = self.estimates(x, y, fb.o, fb.u_obs, fb.v_obs)
        loss_x, loss_y = self.lagrangian(est)
        grads = self.dual_gradients(est, x, y, fb)
        self.update_primal(loss_x, loss_y)
        self.update_dual(*grads)


def vigilant_init(K: int, d: int, T: int, B: float, Z_x: float, Z_y: float, **overrides) -> VigilantDEXP3:
    return VigilantDEXP3(K, d, T, B, Z_x, Z_y, **overrides)


class DuelingEXP3(VigilantDEXP3):
    """Exponential weights on estimated shifted Borda scores, consumption-blind."""

    name = "dexp3"

    def __init__(self, K: int, d: int, T: int, B: float, **overrides):
        overrides.pop("z_x", None)
        overrides.pop("z_y", None)
        super().__init__(K, d, T, B, 0.0, 0.0, **overrides)


class DuelingTS:
    """Thompson sampling with independent Beta(1, 1) priors on each ordered pair.

    ``alpha[i, j]`` counts wins of i over j (plus one), ``beta[i, j]`` losses;
    the mirror ``alpha[i, j] == beta[j, i]`` is kept exactly.  Each slot plays
    the Borda winner of an independently sampled preference matrix.
    """

    name = "dts"

    def __init__(self, K: int, **_ignored):
        self.K = K
        self.alpha = np.ones((K, K))
        self.beta = np.ones((K, K))
        self._iu = np.triu_indices(K, 1)

    def posterior_mean(self, i: int, j: int) -> float:
        return self.alpha[i, j] / (self.alpha[i, j] + self.beta[i, j])

    def _sample_borda_argmax(self, rng: np.random.Generator) -> int:
        iu = self._iu
        theta = np.full((self.K, self.K), 0.5)
        upper = rng.beta(self.alpha[iu], self.beta[iu])
        theta[iu] = upper
        theta[iu[1], iu[0]] = 1.0 - upper
        return int(np.argmax(theta.sum(axis=1)))

    def select(self, rng: np.random.Generator) -> tuple[int, int]:
        return self._sample_borda_argmax(rng), self._sample_borda_argmax(rng)

    def update(self, x: int, y: int, fb: DuelFeedback) -> None:
        if x == y:
            return
        if fb.o:
            self.alpha[x, y] += 1
            self.beta[y, x] += 1
        else:
            self.beta[x, y] += 1
            self.alpha[y, x] += 1


class StaticLPPolicy:
    """Plays ``x ~ pi_x`` and ``y ~ pi_y`` independently every round."""

    name = "static-lp"

    def __init__(self, solution, **_ignored):
        self.solution = solution
        self._cdf_x = np.cumsum(solution.policy.pi_x)
        self._cdf_y = np.cumsum(solution.policy.pi_y)
        self._cdf_x[-1] = self._cdf_y[-1] = 1.0

    def select(self, rng: np.random.Generator) -> tuple[int, int]:
        r = rng.random(2)
        return _draw(self._cdf_x, r[0]), _draw(self._cdf_y, r[1])

    def update(self, x: int, y: int, fb: DuelFeedback) -> None:
        pass


POLICY_NAMES = ("vigilant", "dexp3", "dts", "static-lp")
