"""Empirical transition models and the proportional general pool."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .exceptions import EmptyInput, PoolError
from .ingest import AtBatRecord, apply_missing_type_rule, classify_pitch, srlib_transitions
from .mdp import Policy, SolverConfig, policy_evaluation, root_value, value_iteration
from .model import TransitionModel
from .seeding import child_rng, derive_seed
from .states import ModelKind, PitchClass, TerminalOutcome, state_index, terminal_index

DEFAULT_POOLS = 10


def estimate_transitions(
    atbats: Iterable[AtBatRecord],
    kind: Union[ModelKind, str] = ModelKind.SRLIB,
    mapping: Optional[Mapping[str, PitchClass]] = None,
) -> TransitionModel:
    """Observed conditional proportions ``N(i,u,j) / N(i,u)``.

    Pairs never observed stay null. The share of O transitions that were
    strikeouts is recorded per row, and typed pitches are tallied per class.
    """
    kind = ModelKind.parse(kind)
    model = TransitionModel.empty(kind)
    counts = np.zeros_like(model.probs, dtype=np.int64)
    strikeouts = np.zeros(model.available.shape, dtype=np.int64)
    class_counts = np.zeros(len(PitchClass), dtype=np.int64)
    o_index = terminal_index(TerminalOutcome.O, kind)

    for ab in atbats:
        if kind is ModelKind.SRLIB:
            transitions = srlib_transitions(ab)
        else:
            transitions = apply_missing_type_rule(ab, mapping)
        for pitch in ab.pitches:
            cls = classify_pitch(pitch.raw_type, mapping)
            if cls is not None:
                class_counts[cls] += 1
        for tr in transitions:
            i = state_index(tr.source, kind)
            j = state_index(tr.successor, kind)
            counts[i, tr.action, j] += 1
            if tr.strikeout:
                strikeouts[i, tr.action] += 1

    support = counts.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(support[..., None] > 0, counts / np.maximum(support, 1)[..., None], 0.0)
        outs = counts[..., o_index]
        share = np.where(outs > 0, strikeouts / np.maximum(outs, 1), 0.0)
    return TransitionModel(kind, probs, support, strikeout_share=share, pitch_class_counts=class_counts)


def count_pitches(atbats: Iterable[AtBatRecord]) -> int:
    return sum(ab.n_pitches for ab in atbats)


def compute_quota(pitcher_pitches: int, pool_pitches: int, target_pool_size: float, exact: bool = False) -> int:
    """Pitches a pitcher owes the general pool: ``ceil(share * target)``.

    The share is rounded to 5 decimals first unless ``exact``. Arithmetic is
    done in decimal/rational form so the ceiling is never off by float error.
    """
    if pool_pitches <= 0:
        raise ValueError("pool_pitches must be positive")
    if target_pool_size <= 0:
        raise ValueError("target_pool_size must be positive")
    if not 0 <= pitcher_pitches <= pool_pitches:
        raise ValueError("pitcher_pitches must lie between 0 and pool_pitches")
    target = Fraction(Decimal(repr(float(target_pool_size))))
    if exact:
        share = Fraction(int(pitcher_pitches), int(pool_pitches))
    else:
        share = Fraction(
            (Decimal(int(pitcher_pitches)) / Decimal(int(pool_pitches))).quantize(Decimal("0.00001"), ROUND_HALF_EVEN)
        )
    return max(0, math.ceil(share * target))


@dataclass(frozen=True)
class SamplerQuota:
    pitcher_id: str
    pitcher_pitches: int
    pool_pitches: int
    target_pool_size: float
    quota: int


@dataclass
class GeneralPool:
    seed: int
    at_bats: list
    per_pitcher_pitch_counts: dict = field(default_factory=dict)
    quotas: dict = field(default_factory=dict)
    target_pool_size: float = 0.0

    @property
    def n_pitches(self) -> int:
        return count_pitches(self.at_bats)


def build_general_pool(seasons: Mapping[str, Sequence[AtBatRecord]], seed: int, exact: bool = False) -> GeneralPool:
    """Sample each pitcher's at-bats in proportion to their share of all pitches.

    The pool size targets the mean per-pitcher pitch total. Each pitcher's
    at-bats are drawn without replacement, stopping as soon as that pitcher's
    sampled pitches reach its quota.
    """
    totals = {pid: count_pitches(abs_) for pid, abs_ in sorted(seasons.items())}
    totals = {pid: n for pid, n in totals.items() if n > 0}
    if not totals:
        raise EmptyInput("no pitcher has any pitches")
    pool_pitches = sum(totals.values())
    target = pool_pitches / len(totals)

    pool = GeneralPool(seed, [], target_pool_size=target)
    for pid, n in totals.items():
        quota = compute_quota(n, pool_pitches, target, exact)
        pool.quotas[pid] = SamplerQuota(pid, n, pool_pitches, target, quota)
        atbats = seasons[pid]
        taken = 0
        if quota > 0:
            for k in child_rng(seed, "general-pool", pid).permutation(len(atbats)):
                pool.at_bats.append(atbats[k])
                taken += atbats[k].n_pitches
                if taken >= quota:
                    break
        pool.per_pitcher_pitch_counts[pid] = taken
    return pool


def pool_seeds(master_seed: int, n_pools: int = DEFAULT_POOLS) -> list[int]:
    return [derive_seed(master_seed, "pool", k) for k in range(n_pools)]


def build_general_pools(
    seasons: Mapping[str, Sequence[AtBatRecord]], master_seed: int, n_pools: int = DEFAULT_POOLS, exact: bool = False
) -> list[GeneralPool]:
    return [build_general_pool(seasons, s, exact) for s in pool_seeds(master_seed, n_pools)]


def general_pool_values(
    pools: Sequence[GeneralPool],
    test_model: TransitionModel,
    kind: Union[ModelKind, str, None] = None,
    cfg: SolverConfig = SolverConfig(),
    mapping: Optional[Mapping[str, PitchClass]] = None,
) -> list[float]:
    """Root value on ``test_model`` of the policy learned from each pool.

    Entries may also be already-solved :class:`Policy` objects (see
    :func:`general_policies`), which skips re-estimation.
    """
    kind = test_model.model_kind if kind is None else ModelKind.parse(kind)
    out = []
    for k, pool in enumerate(pools):
        try:
            if isinstance(pool, Policy):
                policy = pool
            else:
                policy, _ = value_iteration(estimate_transitions(pool.at_bats, kind, mapping), cfg)
            values = policy_evaluation(test_model, policy, cfg)
            out.append(root_value(values, kind, test_model.pitch_class_counts))
        except Exception as exc:  # noqa: BLE001 - re-raised with the pool index
            raise PoolError(k, exc) from exc
    return out


def general_strategy_performance(
    pools: Sequence[GeneralPool],
    test_model: TransitionModel,
    kind: Union[ModelKind, str, None] = None,
    cfg: SolverConfig = SolverConfig(),
    mapping: Optional[Mapping[str, PitchClass]] = None,
) -> float:
    """Mean test-season root value over the general pools' policies."""
    values = general_pool_values(pools, test_model, kind, cfg, mapping)
    if not values:
        raise EmptyInput("no general pools")
    return math.fsum(values) / len(values)


def general_policies(
    pools: Sequence[GeneralPool],
    kind: Union[ModelKind, str],
    cfg: SolverConfig = SolverConfig(),
    mapping: Optional[Mapping[str, PitchClass]] = None,
) -> list[Policy]:
    """Value-iteration policy of each pool."""
    out = []
    for k, pool in enumerate(pools):
        try:
            out.append(value_iteration(estimate_transitions(pool.at_bats, kind, mapping), cfg)[0])
        except Exception as exc:  # noqa: BLE001 - re-raised with the pool index
            raise PoolError(k, exc) from exc
    return out
