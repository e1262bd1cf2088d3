"""Stochastic duel simulator with knapsack-style budget accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core_model import PreferenceMatrix, ScoreKind, scores
from .errors import AlreadyStopped, ValidationError

DEFAULT_SIGMA = 0.05


def _as_consumption(arr, K: int, name: str) -> np.ndarray:
    a = np.array(arr, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] != K or a.shape[1] < 1:
        raise ValidationError(f"{name} must have shape (K={K}, d>=1), got {a.shape}")
    if not np.all(np.isfinite(a)) or a.min() < 0 or a.max() > 1:
        raise ValidationError(f"{name} entries must lie in [0, 1]")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class InstanceSpec:
    """Preference matrix, mean consumptions per slot, noise level, horizon and budget."""

    P: PreferenceMatrix
    u_mean: np.ndarray
    v_mean: np.ndarray
    noise_sigma: float = DEFAULT_SIGMA
    T: int = 2000
    B: float = 1000.0
    name: str = "instance"

    def __post_init__(self):
        K = self.P.K
        u = _as_consumption(self.u_mean, K, "u_mean")
        v = _as_consumption(self.v_mean, K, "v_mean")
        if u.shape != v.shape:
            raise ValidationError("u_mean and v_mean must have the same number of resources")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be nonnegative")
        if int(self.T) != self.T or self.T < 1:
            raise ValidationError("T must be a positive integer")
        if self.B < 0:
            raise ValidationError("B must be nonnegative")
        object.__setattr__(self, "u_mean", u)
        object.__setattr__(self, "v_mean", v)
        object.__setattr__(self, "T", int(self.T))
        object.__setattr__(self, "B", float(self.B))
        object.__setattr__(self, "noise_sigma", float(self.noise_sigma))

    @property
    def K(self) -> int:
        return self.P.K

    @property
    def d(self) -> int:
        return self.u_mean.shape[1]

    def replace(self, **changes) -> "InstanceSpec":
        fields = dict(
            P=self.P, u_mean=self.u_mean, v_mean=self.v_mean, noise_sigma=self.noise_sigma,
            T=self.T, B=self.B, name=self.name,
        )
        fields.update(changes)
        return InstanceSpec(**fields)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InstanceSpec):
            return NotImplemented
        return (
            self.P == other.P
            and np.array_equal(self.u_mean, other.u_mean)
            and np.array_equal(self.v_mean, other.v_mean)
            and self.noise_sigma == other.noise_sigma
            and self.T == other.T
            and self.B == other.B
            and self.name == other.name
        )

    __hash__ = None


@dataclass(frozen=True)
class DuelFeedback:
    o: int
    u_obs: np.ndarray
    v_obs: np.ndarray


@dataclass
class EnvState:
    """One trial's environment. ``t`` is the 1-based index of the next round."""

    inst: InstanceSpec
    rng: np.random.Generator
    t: int = 1
    consumed: np.ndarray = field(default=None)
    stopped: bool = False
    tau: Optional[int] = None

    def __post_init__(self):
        if self.consumed is None:
            self.consumed = np.zeros(self.inst.d)

    def step(self, x: int, y: int) -> DuelFeedback:
        return step(self, x, y)


def env_init(inst: InstanceSpec, seed: int | np.random.Generator) -> EnvState:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return EnvState(inst, rng)


def step(env: EnvState, x: int, y: int) -> DuelFeedback:
    """Play one duel.

    Random draws happen in a fixed order (preference, then x-slot noise, then
    y-slot noise) and noise is drawn even when sigma is 0, so streams stay
    aligned across configurations.  The round that pushes any resource past
    ``B`` still counts and becomes the stopping round.
    """
    if env.stopped:
        raise AlreadyStopped(f"environment stopped at round {env.tau}")
    inst = env.inst
    K, d = inst.K, inst.d
    if not (0 <= x < K and 0 <= y < K):
        raise ValidationError(f"arms ({x}, {y}) out of range for K={K}")
    rng = env.rng
    o = 1 if rng.random() < inst.P.entries[x, y] else 0
    noise = rng.standard_normal(2 * d) * inst.noise_sigma
    u_obs = np.clip(inst.u_mean[x] + noise[:d], 0.0, 1.0)
    v_obs = np.clip(inst.v_mean[y] + noise[d:], 0.0, 1.0)
    env.consumed = env.consumed + u_obs + v_obs
    if np.any(env.consumed > inst.B):
        env.stopped = True
        env.tau = env.t
    env.t += 1
    if not env.stopped and env.t > inst.T:
        env.stopped = True
        env.tau = inst.T
    return DuelFeedback(o, u_obs, v_obs)


def true_reward(inst: InstanceSpec, x: int, y: int, kind: ScoreKind) -> float:
    s = scores(inst.P, kind).values
    return float(s[x] + s[y])
