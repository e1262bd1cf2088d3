"""Experiment runner, regret accounting, CSV persistence and the estimator oracle."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .core_model import PreferenceMatrix, condorcet_winner, scores
from .environment import InstanceSpec, env_init
from .errors import Infeasible, KindMismatch, ValidationError
from .instances import resolve_instance
from .lp_benchmarks import BenchmarkSolution, solve_borda_lp, solve_separated_lps, solve_shifted_borda_lp
from .policies import (
    POLICY_NAMES,
    DuelingEXP3,
    DuelingTS,
    StaticLPPolicy,
    VigilantDEXP3,
    estimate_bundle,
)

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    instance: str
    policies: list[str] = field(default_factory=lambda: ["vigilant", "dexp3", "dts"])
    seeds: list[int] = field(default_factory=lambda: list(range(50)))
    T: Optional[int] = None
    B: Optional[float] = None
    sigma: Optional[float] = None
    z: Optional[float] = None
    eta: Optional[float] = None
    gamma: Optional[float] = None
    dual_step: Optional[float] = None
    dual_input: str = "observed"
    out: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        unknown = [p for p in self.policies if p not in POLICY_NAMES]
        if unknown:
            raise ValidationError(f"unknown policies {unknown}; choose from {POLICY_NAMES}")
        if not self.policies:
            raise ValidationError("at least one policy is required")
        if not self.seeds:
            raise ValidationError("seed set must be nonempty")
        if self.T is not None and self.T < 1:
            raise ValidationError("T must be positive")
        if self.dual_input not in ("observed", "estimate"):
            raise ValidationError("dual_input must be 'observed' or 'estimate'")

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        doc = json.loads(Path(path).read_text())
        if "seed_count" in doc:
            base = doc.pop("seed_base", 0)
            doc["seeds"] = list(range(base, base + doc.pop("seed_count")))
        return cls(**doc)

    def resolve(self) -> InstanceSpec:
        inst = resolve_instance(self.instance)
        changes: dict[str, Any] = {}
        if self.T is not None:
            changes["T"] = self.T
        if self.B is not None:
            changes["B"] = self.B
        if self.sigma is not None:
            changes["noise_sigma"] = self.sigma
        return inst.replace(**changes) if changes else inst


@dataclass
class TrialTrace:
    policy: str
    seed: int
    T: int
    B: float
    tau: int
    x: Optional[np.ndarray]
    y: Optional[np.ndarray]
    o: Optional[np.ndarray]
    u_obs: Optional[np.ndarray]
    v_obs: Optional[np.ndarray]
    cum_reward: dict[str, np.ndarray]
    cum_consumption: np.ndarray

    def final_reward(self, kind: str = "borda") -> float:
        return float(self.cum_reward[kind][-1]) if self.tau else 0.0

    def consumption_before_tau(self) -> np.ndarray:
        """Cumulative consumption at the start of the stopping round."""
        if self.tau <= 1:
            return np.zeros(self.cum_consumption.shape[1])
        return self.cum_consumption[self.tau - 2]

    def fingerprint(self) -> bytes:
        """Byte image of the trajectory, excluding the policy label."""
        parts = [np.int64([self.seed, self.T, self.tau]).tobytes(), np.float64([self.B]).tobytes()]
        for arr in (self.x, self.y, self.o, self.u_obs, self.v_obs, self.cum_consumption):
            parts.append(np.ascontiguousarray(arr).tobytes())
        for k in sorted(self.cum_reward):
            parts.append(k.encode() + np.ascontiguousarray(self.cum_reward[k]).tobytes())
        return b"".join(parts)


@dataclass
class RegretSummary:
    policy: str
    kind: str
    opt_total: float
    per_seed: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.per_seed.mean())

    @property
    def std(self) -> float:
        return float(self.per_seed.std(ddof=1)) if self.per_seed.size > 1 else 0.0


@dataclass
class ResultsTable:
    instance_name: str
    T: int
    B: float
    d: int
    traces: dict[str, list[TrialTrace]]
    benchmarks: dict[str, BenchmarkSolution] = field(default_factory=dict)

    def final_rewards(self, policy: str, kind: str = "borda") -> np.ndarray:
        return np.array([tr.final_reward(kind) for tr in self.traces[policy]])

    def taus(self, policy: str) -> np.ndarray:
        return np.array([tr.tau for tr in self.traces[policy]])

    def seeds(self, policy: str) -> list[int]:
        return [tr.seed for tr in self.traces[policy]]

    def curve(self, policy: str, kind: str = "borda") -> tuple[np.ndarray, np.ndarray]:
        """Mean and std across seeds of the cumulative reward, rounds 1..max tau.

        Trials that stopped earlier hold their final value.
        """
        traces = self.traces[policy]
        horizon = max(tr.tau for tr in traces)
        mat = np.zeros((len(traces), horizon))
        for row, tr in zip(mat, traces):
            c = tr.cum_reward[kind]
            row[: c.size] = c
            if c.size:
                row[c.size:] = c[-1]
        std = mat.std(axis=0, ddof=1) if len(traces) > 1 else np.zeros(horizon)
        return mat.mean(axis=0), std

    def summary(self) -> dict:
        out: dict[str, Any] = {
            "instance": self.instance_name, "T": self.T, "B": self.B,
            "benchmarks": {k: b.to_dict() for k, b in self.benchmarks.items()},
            "policies": {},
        }
        for pol in self.traces:
            fr = self.final_rewards(pol)
            taus = self.taus(pol)
            entry = {
                "seeds": self.seeds(pol),
                "final_reward_mean": float(fr.mean()),
                "final_reward_std": float(fr.std(ddof=1)) if fr.size > 1 else 0.0,
                "tau_median": float(np.median(taus)),
                "tau": taus.tolist(),
            }
            if "borda" in self.benchmarks:
                reg = compute_regret(self, self.benchmarks["borda"])[pol]
                entry["borda_regret_mean"] = reg.mean
                entry["borda_regret_std"] = reg.std
            out["policies"][pol] = entry
        return out


def default_z(inst: InstanceSpec) -> tuple[float, float]:
    """Lagrangian scales ``OPT_w / B + 1`` from the per-slot shifted-Borda LPs.

    When a per-slot LP is infeasible (budget pace below every arm's
    consumption) the unconstrained value ``T * max score`` stands in for
    ``OPT_w``; a zero budget is treated as one unit.
    """
    B = max(inst.B, 1.0)
    try:
        sx, sy = solve_separated_lps(inst)
        return sx.opt_total / B + 1.0, sy.opt_total / B + 1.0
    except Infeasible:
        top = inst.T * float(scores(inst.P, "shifted_borda").values.max())
        log.warning("per-slot LP infeasible for %s; using unconstrained value for Z", inst.name)
        return top / B + 1.0, top / B + 1.0


def make_policy(name: str, inst: InstanceSpec, cfg: ExperimentConfig,
                z: Optional[tuple[float, float]] = None,
                static_solution: Optional[BenchmarkSolution] = None):
    common = dict(dual_input=cfg.dual_input, dual_step=cfg.dual_step)
    if cfg.eta is not None:
        common.update(eta_x=cfg.eta, eta_y=cfg.eta)
    if cfg.gamma is not None:
        common.update(gamma_x=cfg.gamma, gamma_y=cfg.gamma)
    if name == "vigilant":
        if cfg.z is not None:
            z = (cfg.z, cfg.z)
        elif z is None:
            z = default_z(inst)
        return VigilantDEXP3(inst.K, inst.d, inst.T, inst.B, z[0], z[1], **common)
    if name == "dexp3":
        return DuelingEXP3(inst.K, inst.d, inst.T, inst.B, **common)
    if name == "dts":
        return DuelingTS(inst.K)
    if name == "static-lp":
        return StaticLPPolicy(static_solution if static_solution is not None else solve_shifted_borda_lp(inst))
    raise ValidationError(f"unknown policy {name!r}")


def _score_table(P: PreferenceMatrix) -> dict[str, np.ndarray]:
    table = {k: scores(P, k).values for k in ("borda", "shifted_borda")}
    if condorcet_winner(P) is not None:
        table["condorcet"] = scores(P, "condorcet").values
    return table


def run_trial(inst: InstanceSpec, policy, seed: int) -> TrialTrace:
    """One episode: fresh environment, select -> step -> update until stopped.

    The seed spawns two independent streams, one for the environment and one
    for the policy, so environment noise is common across policies.
    """
    env_ss, pol_ss = np.random.SeedSequence(seed).spawn(2)
    env = env_init(inst, np.random.default_rng(env_ss))
    prng = np.random.default_rng(pol_ss)
    score_tab = _score_table(inst.P)
    xs, ys, os_, us, vs, cons = [], [], [], [], [], []
    while not env.stopped:
        x, y = policy.select(prng)
        fb = env.step(x, y)
        policy.update(x, y, fb)
        xs.append(x)
        ys.append(y)
        os_.append(fb.o)
        us.append(fb.u_obs)
        vs.append(fb.v_obs)
        cons.append(env.consumed)
    x_arr, y_arr = np.array(xs, dtype=np.int64), np.array(ys, dtype=np.int64)
    cum = {k: np.cumsum(s[x_arr] + s[y_arr]) for k, s in score_tab.items()}
    return TrialTrace(
        policy=getattr(policy, "name", type(policy).__name__), seed=int(seed), T=inst.T, B=inst.B,
        tau=int(env.tau), x=x_arr, y=y_arr, o=np.array(os_, dtype=np.int64),
        u_obs=np.array(us), v_obs=np.array(vs), cum_reward=cum, cum_consumption=np.array(cons),
    )


def _trial_task(args) -> TrialTrace:
    inst, name, seed, cfg, z, static_solution = args
    return run_trial(inst, make_policy(name, inst, cfg, z, static_solution), seed)


def run_experiment(cfg: ExperimentConfig, inst: Optional[InstanceSpec] = None) -> ResultsTable:
    """Run every (policy, seed) pair; results are ordered by seed regardless of workers."""
    inst = cfg.resolve() if inst is None else inst
    benchmarks: dict[str, BenchmarkSolution] = {}
    for kind, solver in (("borda", solve_borda_lp), ("shifted_borda", solve_shifted_borda_lp)):
        try:
            benchmarks[kind] = solver(inst)
        except Infeasible:
            log.warning("%s benchmark infeasible for %s", kind, inst.name)
    z = None
    if "vigilant" in cfg.policies and cfg.z is None:
        z = default_z(inst)
    static_solution = benchmarks.get("shifted_borda")
    if "static-lp" in cfg.policies and static_solution is None:
        raise Infeasible("static-lp policy needs a feasible shifted-Borda benchmark")
    seeds = sorted(set(int(s) for s in cfg.seeds))
    tasks = [(inst, name, s, cfg, z, static_solution) for name in cfg.policies for s in seeds]

    traces: dict[str, list[TrialTrace]] = {name: [] for name in cfg.policies}
    try:
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
        else:
            results = []
            for task in tasks:
                results.append(_trial_task(task))
    except Exception as exc:
        if cfg.out:
            partial = ResultsTable(inst.name, inst.T, inst.B, inst.d, {}, benchmarks)
            done = locals().get("results", [])
            for (_, name, _, _, _, _), tr in zip(tasks, done):
                partial.traces.setdefault(name, []).append(tr)
            out = Path(cfg.out)
            out.mkdir(parents=True, exist_ok=True)
            if partial.traces:
                emit_csv(partial, out / "traces.csv")
            (out / "FAILED").write_text(f"{type(exc).__name__}: {exc}\n")
        raise
    for (_, name, _, _, _, _), tr in zip(tasks, results):
        traces[name].append(tr)
    for name in traces:
        traces[name].sort(key=lambda tr: tr.seed)
    return ResultsTable(inst.name, inst.T, inst.B, inst.d, traces, benchmarks)


_BENCH_TO_REWARD = {"borda": "borda", "shifted_borda": "shifted_borda", "condorcet": "condorcet"}


def compute_regret(table: ResultsTable, benchmark: BenchmarkSolution) -> dict[str, RegretSummary]:
    """``OPT - REW`` per seed for each policy, matching the benchmark's score kind."""
    kind = _BENCH_TO_REWARD.get(benchmark.benchmark_kind)
    if kind is None:
        raise KindMismatch(f"no realised reward corresponds to benchmark {benchmark.benchmark_kind!r}")
    if benchmark.T != table.T:
        raise KindMismatch(f"benchmark horizon {benchmark.T} differs from table horizon {table.T}")
    out = {}
    for pol, traces in table.traces.items():
        if any(kind not in tr.cum_reward for tr in traces):
            raise KindMismatch(f"traces of {pol!r} carry no {kind!r} reward")
        rew = np.array([tr.final_reward(kind) for tr in traces])
        out[pol] = RegretSummary(pol, kind, benchmark.opt_total, benchmark.opt_total - rew)
    return out


def sweep(cfg: ExperimentConfig, horizons: Sequence[int], budget_ratio: Optional[float] = None,
          kind: str = "borda") -> list[tuple[int, ResultsTable, dict[str, RegretSummary]]]:
    """Run the config at each horizon with ``B = budget_ratio * T``."""
    base = resolve_instance(cfg.instance)
    if cfg.sigma is not None:
        base = base.replace(noise_sigma=cfg.sigma)
    ratio = base.B / base.T if budget_ratio is None else budget_ratio
    out = []
    for T in horizons:
        inst = base.replace(T=int(T), B=ratio * T)
        table = run_experiment(cfg, inst)
        bench = table.benchmarks[kind]
        out.append((int(T), table, compute_regret(table, bench)))
    return out


def loglog_slope(horizons: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(horizons)."""
    return float(np.polyfit(np.log(horizons), np.log(values), 1)[0])


CSV_BASE_COLUMNS = ["policy", "seed", "t", "cum_reward"]


def emit_csv(table: ResultsTable, path: str | Path, kind: str = "borda") -> None:
    """One row per (policy, seed, round) up to that trial's stopping round."""
    cols = CSV_BASE_COLUMNS + [f"cum_consumption_{k + 1}" for k in range(table.d)] + ["tau"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for pol, traces in table.traces.items():
            for tr in traces:
                cr = tr.cum_reward[kind]
                for t in range(tr.tau):
                    w.writerow([pol, tr.seed, t + 1, repr(float(cr[t]))]
                               + [repr(float(c)) for c in tr.cum_consumption[t]] + [tr.tau])


def load_csv(path: str | Path, kind: str = "borda") -> ResultsTable:
    """Rebuild a (reward-curve-only) table from a CSV written by ``emit_csv``."""
    rows: dict[tuple[str, int], list] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:4] != CSV_BASE_COLUMNS or header[-1] != "tau":
            raise ValidationError(f"{path}: not a trace CSV")
        d = len(header) - 5
        for rec in reader:
            rows.setdefault((rec[0], int(rec[1])), []).append(rec)
    traces: dict[str, list[TrialTrace]] = {}
    T = 0
    for (pol, seed), recs in rows.items():
        recs.sort(key=lambda r: int(r[2]))
        tau = int(recs[0][-1])
        T = max(T, tau)
        cum = np.array([float(r[3]) for r in recs])
        cons = np.array([[float(v) for v in r[4:4 + d]] for r in recs]).reshape(len(recs), d)
        traces.setdefault(pol, []).append(TrialTrace(
            pol, seed, T=0, B=float("nan"), tau=tau, x=None, y=None, o=None, u_obs=None, v_obs=None,
            cum_reward={kind: cum}, cum_consumption=cons,
        ))
    for pol in traces:
        traces[pol].sort(key=lambda tr: tr.seed)
        for tr in traces[pol]:
            tr.T = T
    return ResultsTable(Path(path).stem, T, float("nan"), d, traces)


@dataclass
class ExpectedEstimates:
    b_hat: np.ndarray
    u_hat_x: np.ndarray
    u_hat_y: np.ndarray


def estimator_oracle(P: PreferenceMatrix | np.ndarray, q_x, q_y, u_mean, v_mean) -> ExpectedEstimates:
    """Exact expectation of the importance-weighted estimates by outcome enumeration.

    Sums the estimator over every (x, y, o) with weight
    ``q_x(x) q_y(y) P(x, y)`` (or ``1 - P(x, y)`` for a loss), with noiseless
    consumptions.
    """
    M = P.entries if isinstance(P, PreferenceMatrix) else np.asarray(P, dtype=float)
    q_x, q_y = np.asarray(q_x, dtype=float), np.asarray(q_y, dtype=float)
    u_mean = np.asarray(u_mean, dtype=float).reshape(M.shape[0], -1)
    v_mean = np.asarray(v_mean, dtype=float).reshape(M.shape[0], -1)
    K, d = u_mean.shape
    Eb = np.zeros(K)
    Eu = np.zeros((K, d))
    Ev = np.zeros((K, d))
    for x in range(K):
        for y in range(K):
            for o, p_o in ((1, M[x, y]), (0, 1.0 - M[x, y])):
                w = q_x[x] * q_y[y] * p_o
                if w == 0.0:
                    continue
                est = estimate_bundle(q_x, q_y, x, y, o, u_mean[x], v_mean[y])
                Eb += w * est.b_hat
                Eu += w * est.u_hat_x
                Ev += w * est.u_hat_y
    return ExpectedEstimates(Eb, Eu, Ev)


def write_outputs(table: ResultsTable, out: str | Path) -> dict[str, Path]:
    """CSV traces, JSON summary and the SVG reward figure into ``out``."""
    from .plotting import emit_plot

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / "traces.csv", "summary": out / "summary.json", "plot": out / "cumulative_reward.svg"}
    emit_csv(table, paths["csv"])
    paths["summary"].write_text(json.dumps(table.summary(), indent=2) + "\n")
    emit_plot(table, paths["plot"])
    return paths
