"""Pitcher-specific vs general strategies and the exploitation test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .estimation import GeneralPool, general_strategy_performance
from .exceptions import EmptyResults
from .mdp import Policy, SolverConfig, policy_evaluation, root_value
from .model import TransitionModel
from .states import COUNT_ORDER, Count, ModelKind, PitchClass

WEAK_TOL = 1e-12

_INTUITIVE_SWING = {Count(1, 0), Count(2, 0), Count(3, 0), Count(2, 1), Count(3, 1)}


def intuitive_policy(kind: Union[ModelKind, str] = ModelKind.SRLIB) -> Policy:
    """Swing only in a batter's count ({1,0}, {2,0}, {3,0}, {2,1}, {3,1})."""
    kind = ModelKind.parse(kind)
    row = [1 if c in _INTUITIVE_SWING else 0 for c in COUNT_ORDER]
    reps = 1 if kind is ModelKind.SRLIB else len(PitchClass)
    return Policy(np.array(row * reps, dtype=int), kind)


@dataclass(frozen=True)
class ExploitResult:
    pitcher_id: str
    train_season: Optional[int]
    test_season: Optional[int]
    j_specific: float
    j_general: float
    j_intuitive: float = float("nan")

    @property
    def degree_diff(self) -> float:
        return self.j_specific - self.j_general

    @property
    def degree_ratio(self) -> float:
        return self.j_specific / self.j_general if self.j_general != 0 else float("nan")

    @property
    def exploited_weak(self) -> bool:
        return self.j_specific >= self.j_general - WEAK_TOL

    @property
    def exploited_strict(self) -> bool:
        return self.j_specific > self.j_general

    def row(self) -> dict:
        return {
            "pitcher_id": self.pitcher_id,
            "train_season": self.train_season,
            "test_season": self.test_season,
            "j_general": self.j_general,
            "j_specific": self.j_specific,
            "j_intuitive": self.j_intuitive,
            "exploited_weak": int(self.exploited_weak),
            "exploited_strict": int(self.exploited_strict),
            "degree_diff": self.degree_diff,
            "degree_ratio": self.degree_ratio,
        }


def evaluate_root(test_model: TransitionModel, policy: Policy, cfg: SolverConfig = SolverConfig()) -> float:
    values = policy_evaluation(test_model, policy, cfg)
    return root_value(values, test_model.model_kind, test_model.pitch_class_counts)


def compare_strategies(
    test_model: TransitionModel,
    pi_specific: Policy,
    general_pools: Sequence[GeneralPool],
    cfg: SolverConfig = SolverConfig(),
    *,
    pitcher_id: str = "",
    train_season: Optional[int] = None,
    test_season: Optional[int] = None,
    mapping: Optional[Mapping] = None,
) -> ExploitResult:
    """Root values of the pitcher-specific, general and intuitive strategies on ``test_model``."""
    kind = test_model.model_kind
    if pi_specific.model_kind is not None and pi_specific.model_kind is not kind:
        raise ValueError("pitcher-specific policy and test model use different state spaces")
    j_specific = evaluate_root(test_model, pi_specific, cfg)
    j_general = general_strategy_performance(general_pools, test_model, kind, cfg, mapping)
    j_intuitive = evaluate_root(test_model, intuitive_policy(kind), cfg)
    return ExploitResult(pitcher_id, train_season, test_season, j_specific, j_general, j_intuitive)


def binomial_tail_pvalue(n: int, m: int, p: float) -> float:
    """Upper tail ``P(X > m)`` for ``X ~ Binomial(n, p)``.

    Terms use exact integer binomial coefficients (updated by an exact
    integer recurrence) and are summed with ``math.fsum``; all terms are
    positive, so the relative error stays at a few ulps. Very large ``n``
    switches to log-space terms.
    """
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be a probability")
    if m == n:
        return 0.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    q = 1.0 - p
    if n <= 1000:
        c = math.comb(n, m + 1)
        terms = []
        for i in range(m + 1, n + 1):
            terms.append(c * p**i * q ** (n - i))
            c = c * (n - i) // (i + 1)
        return min(1.0, math.fsum(terms))
    lp, lq = math.log(p), math.log1p(-p)
    lgn = math.lgamma(n + 1)
    terms = [
        math.exp(lgn - math.lgamma(i + 1) - math.lgamma(n - i + 1) + i * lp + (n - i) * lq)
        for i in range(m + 1, n + 1)
    ]
    return min(1.0, math.fsum(terms))


@dataclass(frozen=True)
class HypothesisReport:
    n: int
    m_weak: int
    m_strict: int
    p_value_weak: float
    p_value_strict: float
    alpha: float = 0.05

    @property
    def reject_weak(self) -> bool:
        return self.p_value_weak < self.alpha

    @property
    def reject_strict(self) -> bool:
        return self.p_value_strict < self.alpha

    @property
    def degenerate_weak(self) -> bool:
        """Every trial succeeded, so the strict tail is 0 by construction."""
        return self.m_weak == self.n

    @property
    def degenerate_strict(self) -> bool:
        return self.m_strict == self.n

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m_weak": self.m_weak,
            "m_strict": self.m_strict,
            "p_value_weak": self.p_value_weak,
            "p_value_strict": self.p_value_strict,
            "alpha": self.alpha,
            "reject_weak": self.reject_weak,
            "reject_strict": self.reject_strict,
            "degenerate_weak": self.degenerate_weak,
            "degenerate_strict": self.degenerate_strict,
        }


def run_hypothesis_test(results: Sequence[ExploitResult], alpha: float = 0.05) -> HypothesisReport:
    """Binomial test of H0: p = 1/2 under the weak (>=) and strict (>) alternatives."""
    if not results:
        raise EmptyResults("no exploitation results to test")
    n = len(results)
    m_weak = sum(r.exploited_weak for r in results)
    m_strict = sum(r.exploited_strict for r in results)
    return HypothesisReport(
        n, m_weak, m_strict,
        binomial_tail_pvalue(n, m_weak, 0.5),
        binomial_tail_pvalue(n, m_strict, 0.5),
        alpha,
    )
