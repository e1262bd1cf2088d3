"""Dueling bandits with knapsack constraints."""

from .core_model import (
    PreferenceMatrix,
    ScoreVector,
    borda_scores,
    borda_winner,
    check_sst,
    check_total_ordering,
    condorcet_scores,
    condorcet_winner,
    shifted_borda_scores,
    validate_preference_matrix,
)
from .environment import DuelFeedback, EnvState, InstanceSpec, env_init, step, true_reward
from .harness import (
    ExperimentConfig,
    ResultsTable,
    TrialTrace,
    compute_regret,
    emit_csv,
    estimator_oracle,
    run_experiment,
    run_trial,
)
from .lp_benchmarks import (
    BenchmarkSolution,
    LpProblem,
    StaticPolicyPair,
    solve_borda_lp,
    solve_condorcet_lp,
    solve_lp,
    solve_separated_lps,
    solve_shifted_borda_lp,
)
from .policies import DuelingEXP3, DuelingTS, StaticLPPolicy, VigilantDEXP3, vigilant_init

__version__ = "0.1.0"
