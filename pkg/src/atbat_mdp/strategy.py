"""Estimator-style wrappers: fit on at-bats, score on held-out at-bats."""

from __future__ import annotations

import math
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .estimation import DEFAULT_POOLS, build_general_pools, estimate_transitions, general_policies
from .exceptions import EmptyInput
from .exploit import evaluate_root
from .ingest import AtBatRecord, group_by_pitcher
from .mdp import SolverConfig, value_iteration
from .states import ModelKind


def _check_atbats(atbats) -> list:
    atbats = list(atbats)
    if not atbats:
        raise EmptyInput("no at-bats")
    if not all(isinstance(ab, AtBatRecord) for ab in atbats):
        raise TypeError("expected AtBatRecord items")
    return atbats


class _SolverParams:
    def _solver_config(self) -> SolverConfig:
        return SolverConfig(epsilon=self.epsilon, max_iterations=self.max_iter, discount=self.discount)


class TransitionEstimator(BaseEstimator):
    """Fits an empirical :class:`TransitionModel` to a list of at-bats."""

    def __init__(self, model_kind: str = "srlib", pitch_map: Optional[Mapping] = None):
        self.model_kind = model_kind
        self.pitch_map = pitch_map

    def fit(self, atbats: Sequence[AtBatRecord], y=None):
        self.model_ = estimate_transitions(_check_atbats(atbats), ModelKind.parse(self.model_kind), self.pitch_map)
        return self

    def transform(self, atbats: Sequence[AtBatRecord]):
        """Transition model of ``atbats`` (the fitted one is left untouched)."""
        return estimate_transitions(_check_atbats(atbats), ModelKind.parse(self.model_kind), self.pitch_map)


class BattingStrategy(_SolverParams, BaseEstimator):
    """Pitcher-specific strategy: value iteration on the training at-bats."""

    def __init__(self, model_kind: str = "srlib", epsilon: float = 2.22e-16, max_iter: int = 1_000_000,
                 discount: float = 1.0, pitch_map: Optional[Mapping] = None):
        self.model_kind = model_kind
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.discount = discount
        self.pitch_map = pitch_map

    def fit(self, atbats: Sequence[AtBatRecord], y=None):
        self.model_ = TransitionEstimator(self.model_kind, self.pitch_map).fit(atbats).model_
        self.policy_, self.values_ = value_iteration(self.model_, self._solver_config())
        return self

    def predict(self, states) -> np.ndarray:
        """Action per state index (-1 where the policy is null)."""
        check_is_fitted(self, "policy_")
        return self.policy_.actions[np.asarray(states, dtype=int)]

    def score(self, atbats: Sequence[AtBatRecord], y=None) -> float:
        """Root value of the fitted policy on the model estimated from ``atbats``."""
        check_is_fitted(self, "policy_")
        test = TransitionEstimator(self.model_kind, self.pitch_map).transform(atbats)
        return evaluate_root(test, self.policy_, self._solver_config())


class GeneralStrategy(_SolverParams, BaseEstimator):
    """Population strategy: policies learned on ``n_pools`` proportional pools."""

    def __init__(self, model_kind: str = "srlib", n_pools: int = DEFAULT_POOLS, seed: int = 0,
                 epsilon: float = 2.22e-16, max_iter: int = 1_000_000, discount: float = 1.0,
                 pitch_map: Optional[Mapping] = None):
        self.model_kind = model_kind
        self.n_pools = n_pools
        self.seed = seed
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.discount = discount
        self.pitch_map = pitch_map

    def fit(self, atbats: Union[Sequence[AtBatRecord], Mapping[str, Sequence[AtBatRecord]]], y=None):
        seasons = atbats if isinstance(atbats, Mapping) else group_by_pitcher(_check_atbats(atbats))
        self.pools_ = build_general_pools(seasons, self.seed, self.n_pools)
        self.policies_ = general_policies(self.pools_, ModelKind.parse(self.model_kind),
                                          self._solver_config(), self.pitch_map)
        return self

    def score(self, atbats: Sequence[AtBatRecord], y=None) -> float:
        """Mean root value of the pool policies on the model estimated from ``atbats``."""
        check_is_fitted(self, "policies_")
        test = TransitionEstimator(self.model_kind, self.pitch_map).transform(atbats)
        cfg = self._solver_config()
        return math.fsum(evaluate_root(test, p, cfg) for p in self.policies_) / len(self.policies_)
