"""Brute-force reference computations, independent of the library's solvers."""

from __future__ import annotations

import itertools

import numpy as np

from constrained_duels.core_model import validate_preference_matrix
from constrained_duels.environment import InstanceSpec


def knapsack_oracle(score, cons, rate):
    """Single simplex, one resource: best of pure arms and two-arm mixes on the boundary.

    Returns None when nothing is feasible.
    """
    score = np.asarray(score, dtype=float)
    cons = np.asarray(cons, dtype=float)
    best = None
    for i in range(score.size):
        if cons[i] <= rate:
            best = score[i] if best is None else max(best, score[i])
    for i, j in itertools.permutations(range(score.size), 2):
        if cons[i] < rate < cons[j]:
            a = (cons[j] - rate) / (cons[j] - cons[i])
            val = a * score[i] + (1 - a) * score[j]
            best = val if best is None else max(best, val)
    return best


def paired_knapsack_oracle(score, u, v, rate):
    """Two simplexes, one resource: enumerate every vertex of the feasible polytope.

    Vertices are feasible pairs of point masses, or one point mass paired with
    a two-arm mix that makes the budget tight.
    """
    s = np.asarray(score, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    K = s.size
    best = None

    def consider(val):
        nonlocal best
        best = val if best is None else max(best, val)

    for i in range(K):
        for j in range(K):
            if u[i] + v[j] <= rate:
                consider(s[i] + s[j])
    for fixed in range(K):
        for j, k in itertools.permutations(range(K), 2):
            # x fixed, y mixes j/k
            if v[j] != v[k]:
                a = (rate - u[fixed] - v[k]) / (v[j] - v[k])
                if 0 <= a <= 1:
                    consider(s[fixed] + a * s[j] + (1 - a) * s[k])
            # y fixed, x mixes j/k
            if u[j] != u[k]:
                a = (rate - v[fixed] - u[k]) / (u[j] - u[k])
                if 0 <= a <= 1:
                    consider(s[fixed] + a * s[j] + (1 - a) * s[k])
    return best


def random_simplex_max(score, A, rate, n_points, rng, chunk=200_000):
    """Largest objective among uniformly sampled feasible simplex points (or -inf)."""
    score = np.asarray(score, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = score.size
    best = -np.inf
    left = n_points
    while left > 0:
        m = min(chunk, left)
        left -= m
        pts = rng.standard_exponential((m, n))
        pts /= pts.sum(axis=1, keepdims=True)
        ok = np.all(pts @ A.T <= rate, axis=1)
        if ok.any():
            best = max(best, float((pts[ok] @ score).max()))
    return best


def random_preference_matrix(K, rng):
    P = np.full((K, K), 0.5)
    iu = np.triu_indices(K, 1)
    vals = rng.random(len(iu[0]))
    P[iu] = vals
    P[iu[1], iu[0]] = 1.0 - vals
    return P


def random_instance(rng, K=None, d=None, T=1000, symmetric=False):
    """Random instance whose budget rate keeps every benchmark LP feasible.

    The rate is at least twice the cheapest arm's worst component on each
    side, so the per-slot LPs (and hence the joint ones) have a feasible point.
    ``symmetric`` draws one consumption table for both slots.
    """
    K = int(rng.integers(2, 9)) if K is None else K
    d = int(rng.integers(1, 4)) if d is None else d
    P = validate_preference_matrix(random_preference_matrix(K, rng))
    u = rng.random((K, d))
    v = u.copy() if symmetric else rng.random((K, d))
    floor = 2 * max(u.max(axis=1).min(), v.max(axis=1).min())
    rate = floor + rng.random() * (2.0 - floor)
    return InstanceSpec(P, u, v, noise_sigma=0.0, T=T, B=rate * T, name="random")
