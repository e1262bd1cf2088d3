"""Dense two-phase simplex over the probability simplex, and the benchmark LPs.

Every benchmark is a maximisation of a linear score over one or two
probability simplexes subject to per-resource budget-rate constraints.  The
problems are tiny (at most ``2K + d`` rows), so a dense tableau with Bland's
rule is used: no external solver, and results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core_model import condorcet_scores, scores, shifted_borda_scores
from .environment import InstanceSpec
from .errors import Infeasible, NumericalFailure

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9

BenchmarkKind = Literal["condorcet", "borda", "shifted_borda", "separated_x", "separated_y"]


@dataclass(frozen=True)
class LpProblem:
    """max ``objective @ x`` over ``x >= 0``, ``sum(x) = 1``, ``ineq_matrix @ x <= ineq_rhs``."""

    objective: np.ndarray
    ineq_matrix: np.ndarray
    ineq_rhs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.objective, dtype=float))
        A = np.asarray(self.ineq_matrix, dtype=float).reshape(-1, c.size)
        b = np.atleast_1d(np.asarray(self.ineq_rhs, dtype=float))
        if c.size < 1:
            raise ValueError("LP needs at least one variable")
        if A.shape[0] != b.size:
            raise ValueError(f"{A.shape[0]} constraint rows but {b.size} right-hand sides")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "ineq_matrix", A)
        object.__setattr__(self, "ineq_rhs", b)


@dataclass(frozen=True)
class StaticPolicyPair:
    pi_x: np.ndarray
    pi_y: np.ndarray


@dataclass(frozen=True)
class BenchmarkSolution:
    policy: StaticPolicyPair
    per_round_value: float
    T: int
    benchmark_kind: BenchmarkKind

    @property
    def opt_total(self) -> float:
        return self.T * self.per_round_value

    def to_dict(self) -> dict:
        return {
            "benchmark_kind": self.benchmark_kind,
            "per_round_value": self.per_round_value,
            "opt_total": self.opt_total,
            "T": self.T,
            "pi_x": self.policy.pi_x.tolist(),
            "pi_y": self.policy.pi_y.tolist(),
        }


def _pivot(tab: np.ndarray, basis: list[int], r: int, c: int) -> None:
    tab[r] /= tab[r, c]
    col = tab[:, c].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])
    basis[r] = c


def _run_simplex(tab: np.ndarray, basis: list[int], n_cols: int, allowed: np.ndarray) -> None:
    """Maximise the objective row (last row holds negated reduced costs).

    Bland's rule on both entering and leaving choices rules out cycling.
    """
    m = len(basis)
    max_iter = 50 * (n_cols + m) + 100
    for _ in range(max_iter):
        obj = tab[-1, :n_cols]
        entering = -1
        for j in range(n_cols):
            if allowed[j] and obj[j] < -PIVOT_TOL:
                entering = j
                break
        if entering < 0:
            return
        col = tab[:m, entering]
        rhs = tab[:m, -1]
        best_r = -1
        best_ratio = np.inf
        for r in range(m):
            if col[r] > PIVOT_TOL:
                ratio = rhs[r] / col[r]
                if ratio < best_ratio - PIVOT_TOL or (
                    abs(ratio - best_ratio) <= PIVOT_TOL and basis[r] < basis[best_r]
                ):
                    best_ratio = ratio
                    best_r = r
        if best_r < 0:
            raise NumericalFailure("LP unbounded over the simplex, which cannot happen")
        _pivot(tab, basis, best_r, entering)
    raise NumericalFailure("simplex iteration limit reached")


def solve_lp(p: LpProblem) -> tuple[np.ndarray, float]:
    """Maximise over the simplex; returns (solution, value) or raises ``Infeasible``."""
    c, A, b = p.objective, p.ineq_matrix, p.ineq_rhs
    n, m_ineq = c.size, b.size
    # Standard form: [A I] [x; s] = b and 1'x = 1, then one artificial per row.
    m = m_ineq + 1
    n_struct = n + m_ineq
    n_cols = n_struct + m
    tab = np.zeros((m + 1, n_cols + 1))
    tab[:m_ineq, :n] = A
    tab[:m_ineq, n:n_struct] = np.eye(m_ineq)
    tab[:m_ineq, -1] = b
    tab[m_ineq, :n] = 1.0
    tab[m_ineq, -1] = 1.0
    neg = tab[:m, -1] < 0
    tab[:m][neg] *= -1.0
    tab[:m, n_struct:n_cols] = np.eye(m)
    basis = list(range(n_struct, n_cols))

    # Phase 1: maximise -sum(artificials).
    tab[-1, :] = 0.0
    tab[-1, n_struct:n_cols] = 1.0
    tab[-1] -= tab[:m].sum(axis=0)
    _run_simplex(tab, basis, n_cols, np.ones(n_cols, dtype=bool))
    if -tab[-1, -1] > FEAS_TOL:
        raise Infeasible("no point of the simplex satisfies the budget constraints")

    # Drive remaining artificials out of the basis (their rows are redundant if that fails).
    for r in range(m):
        if basis[r] >= n_struct:
            row = tab[r, :n_struct]
            cand = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if cand.size:
                _pivot(tab, basis, r, int(cand[0]))

    # Phase 2 on the original objective, artificials barred from re-entering.
    allowed = np.zeros(n_cols, dtype=bool)
    allowed[:n_struct] = True
    tab[-1, :] = 0.0
    tab[-1, :n] = -c
    for r, j in enumerate(basis):
        if tab[-1, j] != 0.0:
            tab[-1] -= tab[-1, j] * tab[r]
    _run_simplex(tab, basis, n_cols, allowed)

    z = np.zeros(n_cols)
    for r, j in enumerate(basis):
        z[j] = tab[r, -1]
    x = z[:n]
    x[x < 0] = 0.0
    x = x / x.sum()
    if m_ineq and (A @ x - b).max() > FEAS_TOL:
        raise NumericalFailure("simplex returned a point violating the budget constraints")
    return x, float(c @ x)


def _two_simplex_lp(
    score: np.ndarray, u: np.ndarray, v: np.ndarray, rate: float
) -> tuple[np.ndarray, np.ndarray, float]:
    """max score.pi_x + score.pi_y s.t. u'pi_x + v'pi_y <= rate over two simplexes.

    Reduced to a single-simplex LP over the product-free joint variable
    w = (pi_x / 2, pi_y / 2) with the split sum(w_x) = sum(w_y) = 1/2 added
    as a pair of inequalities.
    """
    K, d = u.shape
    c = np.concatenate([score, score]) * 2.0
    cons = np.hstack([u.T, v.T]) * 2.0
    half = np.concatenate([np.ones(K), np.zeros(K)])
    A = np.vstack([cons, half, -half])
    b = np.concatenate([np.full(d, rate), [0.5, -0.5]])
    w, val = solve_lp(LpProblem(c, A, b))
    pi_x = w[:K] * 2.0
    pi_y = w[K:] * 2.0
    pi_x /= pi_x.sum()
    pi_y /= pi_y.sum()
    return pi_x, pi_y, float(score @ pi_x + score @ pi_y)


def _paired_benchmark(inst: InstanceSpec, score: np.ndarray, kind: BenchmarkKind) -> BenchmarkSolution:
    pi_x, pi_y, val = _two_simplex_lp(score, inst.u_mean, inst.v_mean, inst.B / inst.T)
    return BenchmarkSolution(StaticPolicyPair(pi_x, pi_y), val, inst.T, kind)


def solve_borda_lp(inst: InstanceSpec) -> BenchmarkSolution:
    return _paired_benchmark(inst, scores(inst.P, "borda").values, "borda")


def solve_condorcet_lp(inst: InstanceSpec) -> BenchmarkSolution:
    return _paired_benchmark(inst, condorcet_scores(inst.P).values, "condorcet")


def solve_shifted_borda_lp(inst: InstanceSpec) -> BenchmarkSolution:
    return _paired_benchmark(inst, shifted_borda_scores(inst.P).values, "shifted_borda")


def solve_separated_lps(inst: InstanceSpec) -> tuple[BenchmarkSolution, BenchmarkSolution]:
    """Per-side shifted-Borda LPs with half the budget rate each."""
    s = shifted_borda_scores(inst.P).values
    rate = inst.B / (2 * inst.T)
    out = []
    for cons, kind in ((inst.u_mean, "separated_x"), (inst.v_mean, "separated_y")):
        pi, val = solve_lp(LpProblem(s, cons.T, np.full(inst.d, rate)))
        # One-sided LP: the same distribution is reported for both slots.
        out.append(BenchmarkSolution(StaticPolicyPair(pi, pi.copy()), val, inst.T, kind))
    return out[0], out[1]


def solve_benchmark(inst: InstanceSpec, kind: BenchmarkKind) -> BenchmarkSolution:
    if kind == "borda":
        return solve_borda_lp(inst)
    if kind == "condorcet":
        return solve_condorcet_lp(inst)
    if kind == "shifted_borda":
        return solve_shifted_borda_lp(inst)
    x, y = solve_separated_lps(inst)
    if kind == "separated_x":
        return x
    if kind == "separated_y":
        return y
    raise ValueError(f"unknown benchmark kind {kind!r}")
