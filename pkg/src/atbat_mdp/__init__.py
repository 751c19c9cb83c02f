"""Batter strategy MDPs estimated from pitch-by-pitch data."""

from .estimation import (
    GeneralPool,
    build_general_pool,
    build_general_pools,
    compute_quota,
    estimate_transitions,
    general_policies,
    general_strategy_performance,
)
from .exceptions import *  # noqa: F401,F403
from .exploit import (
    ExploitResult,
    HypothesisReport,
    binomial_tail_pvalue,
    compare_strategies,
    intuitive_policy,
    run_hypothesis_test,
)
from .ingest import AtBatRecord, PitchRecord, TrajectoryParams, parse_season, read_season, write_season
from .mdp import (
    Policy,
    SolverConfig,
    TabularMDP,
    ValueVector,
    enumerate_policies_oracle,
    exact_policy_values,
    policy_evaluation,
    root_value,
    value_iteration,
)
from .model import TransitionModel
from .simulate import BattingLine, SimConfig, SimOutcome, SkipReason, accumulate_stats, simulate_atbat, simulate_batter
from .spatial import BatterProfile, QuadraticKernelSVC, believed_trajectory, gate_batter, train_classifier
from .states import AtBatState, BattingAction, Count, ModelKind, PitchClass, TerminalOutcome, reward
from .strategy import BattingStrategy, GeneralStrategy, TransitionEstimator
from .synthgen import SyntheticPitcherSpec, generate_season, implied_transition_model

__version__ = "0.1.0"
