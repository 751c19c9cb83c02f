"""Synthetic seasons with a known transition model.

A :class:`SyntheticPitcherSpec` fixes, per count, how the pitcher picks a
pitch class and, per (count, class, batter action), the distribution of the
pitch result. Seasons drawn from it are written in the canonical JSON-Lines
format, and :func:`implied_transition_model` gives the exact model they are
sampled from.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .exceptions import InvalidSpec
from .ingest import AtBatRecord, PitchRecord, TrajectoryParams
from .mdp import Policy, SolverConfig, value_iteration
from .model import TransitionModel
from .seeding import child_rng
from .states import (
    ACTIONS,
    COUNT_ORDER,
    N_COUNTS,
    BattingAction,
    Count,
    ModelKind,
    PitchClass,
    PitchResult,
    ResultKind,
    TerminalOutcome,
    advance_count,
    count_index,
    n_nonterminal,
    n_states,
    nonterminal_index,
    terminal_index,
)

# Pitch result categories, in the order of the last axis of ``outcome_probs``.
RESULTS = (
    PitchResult.ball(),
    PitchResult.strike(),
    PitchResult.foul(),
    PitchResult.in_play("O"),
    PitchResult.in_play("S"),
    PitchResult.in_play("D"),
    PitchResult.in_play("T"),
    PitchResult.in_play("HR"),
)
RESULT_NAMES = ("ball", "strike", "foul", "O", "S", "D", "T", "HR")
N_RESULTS = len(RESULTS)

DEFAULT_CODES = ("FF", "CU", "SL", "KN")
MAX_PITCHES = 500
SUM_TOL = 1e-12


def default_templates() -> dict:
    """Mean flight parameters per class (feet, seconds) and jitter scales."""
    return {
        PitchClass.FASTBALL: TrajectoryParams((-1.5, 50.0, 6.0), (5.0, -135.0, -6.0), (-8.0, 28.0, -14.0), 0.40),
        PitchClass.CURVE_CHANGE: TrajectoryParams((-1.0, 50.0, 6.3), (2.0, -110.0, 1.0), (6.0, 22.0, -42.0), 0.49),
        PitchClass.SINK_SLIDE: TrajectoryParams((-2.0, 50.0, 5.8), (4.0, -122.0, -3.0), (14.0, 25.0, -28.0), 0.44),
        PitchClass.KNUCKLE_UNKNOWN: TrajectoryParams((-1.2, 50.0, 6.1), (1.0, -98.0, 3.0), (-1.0, 18.0, -30.0), 0.55),
    }


@dataclass
class SyntheticPitcherSpec:
    """Ground-truth behaviour of one synthetic pitcher.

    Attributes
    ----------
    class_probs : ndarray, shape (12, 4)
        Pitch-class distribution at each count (canonical count order).
    outcome_probs : ndarray, shape (12, 4, 2, 8)
        Result distribution per (count, class, action) over ``RESULT_NAMES``.
    templates : dict PitchClass -> TrajectoryParams
        Mean trajectory per class.
    jitter : float
        Half-width of the uniform perturbation added to every trajectory field.
    untyped_rate : float
        Probability that a pitch is recorded without a pitch type.
    """

    pitcher_id: str
    class_probs: np.ndarray
    outcome_probs: np.ndarray
    templates: dict = field(default_factory=default_templates)
    jitter: float = 0.05
    codes: tuple = DEFAULT_CODES
    untyped_rate: float = 0.0

    def __post_init__(self) -> None:
        self.class_probs = np.asarray(self.class_probs, dtype=float)
        self.outcome_probs = np.asarray(self.outcome_probs, dtype=float)
        self.templates = {PitchClass(k): v for k, v in self.templates.items()}
        self.codes = tuple(self.codes)

    def validate(self) -> None:
        if self.class_probs.shape != (N_COUNTS, len(PitchClass)):
            raise InvalidSpec(f"class_probs must have shape (12, 4), got {self.class_probs.shape}")
        if self.outcome_probs.shape != (N_COUNTS, len(PitchClass), len(ACTIONS), N_RESULTS):
            raise InvalidSpec(f"outcome_probs must have shape (12, 4, 2, 8), got {self.outcome_probs.shape}")
        for name, arr in (("class_probs", self.class_probs), ("outcome_probs", self.outcome_probs)):
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise InvalidSpec(f"{name} must be finite and nonnegative")
            if np.any(np.abs(arr.sum(axis=-1) - 1.0) > SUM_TOL):
                raise InvalidSpec(f"{name} distributions must sum to 1")
        if set(self.templates) != set(PitchClass):
            raise InvalidSpec("need a trajectory template for each of the four classes")
        if len(self.codes) != len(PitchClass):
            raise InvalidSpec("need one raw pitch code per class")
        if not (0 <= self.untyped_rate <= 1) or self.jitter < 0:
            raise InvalidSpec("untyped_rate must be in [0, 1] and jitter nonnegative")

    def to_dict(self) -> dict:
        return {
            "pitcher_id": self.pitcher_id,
            "class_probs": self.class_probs.tolist(),
            "outcome_probs": self.outcome_probs.tolist(),
            "templates": {PitchClass(k).label: v.to_dict() for k, v in sorted(self.templates.items())},
            "jitter": self.jitter,
            "codes": list(self.codes),
            "untyped_rate": self.untyped_rate,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SyntheticPitcherSpec":
        templates = default_templates()
        for label, params in d.get("templates", {}).items():
            templates[PitchClass.from_label(label)] = TrajectoryParams.from_dict(params)
        spec = cls(
            str(d["pitcher_id"]),
            d["class_probs"],
            d["outcome_probs"],
            templates,
            float(d.get("jitter", 0.05)),
            tuple(d.get("codes", DEFAULT_CODES)),
            float(d.get("untyped_rate", 0.0)),
        )
        spec.validate()
        return spec


def random_spec(pitcher_id: str, seed: int, concentration: float = 2.0, **kwargs) -> SyntheticPitcherSpec:
    """A plausible random pitcher.

    Standing only produces balls and called strikes. Swinging never produces
    a ball and puts the ball in play a fair share of the time.
    """
    rng = child_rng(seed, "random-spec", pitcher_id)
    class_probs = rng.dirichlet(np.full(len(PitchClass), concentration), size=N_COUNTS)
    outcome = np.zeros((N_COUNTS, len(PitchClass), len(ACTIONS), N_RESULTS))
    for c in range(N_COUNTS):
        for k in range(len(PitchClass)):
            p_ball = rng.uniform(0.25, 0.6)
            outcome[c, k, BattingAction.STAND, 0] = p_ball
            outcome[c, k, BattingAction.STAND, 1] = 1.0 - p_ball
            swing = np.zeros(N_RESULTS)
            swing[1] = rng.uniform(0.1, 0.35)   # swinging strike
            swing[2] = rng.uniform(0.1, 0.35)   # foul
            in_play = 1.0 - swing[1] - swing[2]
            split = rng.dirichlet([12.0, 3.5, 1.2, 0.2, 0.6])
            swing[3:] = in_play * split
            outcome[c, k, BattingAction.SWING] = swing
    spec = SyntheticPitcherSpec(pitcher_id, class_probs, outcome, **kwargs)
    spec.validate()
    return spec


def gapped_spec(
    pitcher_id: str, seed: int, favoured: Optional[Sequence[int]] = None, **kwargs
) -> SyntheticPitcherSpec:
    """A pitcher whose optimal action is well separated at every count.

    ``favoured`` gives the locally better action per count (canonical order);
    by default it is drawn at random. The optimum can still differ where the
    successor counts outweigh the local edge. Where Swing is favoured, contact is hard
    and frequent; elsewhere swinging mostly produces strikes and weak outs
    while standing draws balls.
    """
    rng = child_rng(seed, "gapped-spec", pitcher_id)
    if favoured is None:
        favoured = rng.integers(0, 2, size=N_COUNTS)
    favoured = [int(a) for a in favoured]
    if len(favoured) != N_COUNTS:
        raise InvalidSpec("favoured needs one action per count")
    class_probs = rng.dirichlet(np.full(len(PitchClass), 4.0), size=N_COUNTS)
    outcome = np.zeros((N_COUNTS, len(PitchClass), len(ACTIONS), N_RESULTS))
    for c in range(N_COUNTS):
        for k in range(len(PitchClass)):
            stand = np.zeros(N_RESULTS)
            swing = np.zeros(N_RESULTS)
            if favoured[c] == BattingAction.SWING:
                stand[0] = rng.uniform(0.3, 0.5)
                stand[1] = 1.0 - stand[0]
                swing[1], swing[2] = 0.05, 0.1
                swing[3:] = 0.85 * np.array([0.3, 0.3, 0.15, 0.05, 0.2])
            else:
                stand[0] = rng.uniform(0.75, 0.9)
                stand[1] = 1.0 - stand[0]
                swing[1], swing[2] = 0.55, 0.1
                swing[3:] = 0.35 * np.array([0.95, 0.05, 0.0, 0.0, 0.0])
            outcome[c, k, BattingAction.STAND] = stand
            outcome[c, k, BattingAction.SWING] = swing
    spec = SyntheticPitcherSpec(pitcher_id, class_probs, outcome, **kwargs)
    spec.validate()
    return spec


def _choose(rng: np.random.Generator, probs: np.ndarray) -> int:
    # inverse transform on the cumulative distribution
    u = rng.random()
    k = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    return min(k, len(probs) - 1)


def _jittered(template: TrajectoryParams, jitter: float, rng: np.random.Generator) -> TrajectoryParams:
    noise = rng.uniform(-jitter, jitter, size=10)
    return TrajectoryParams(
        tuple(np.add(template.start_position, noise[0:3]).tolist()),
        tuple(np.add(template.initial_velocity, noise[3:6]).tolist()),
        tuple(np.add(template.acceleration, noise[6:9]).tolist()),
        max(template.flight_time + 0.1 * noise[9], 1e-3),
    )


BatterBehaviour = Union[Policy, float]


def _batter_action(batter: BatterBehaviour, count: Count, cls: PitchClass, rng: np.random.Generator) -> BattingAction:
    if isinstance(batter, Policy):
        kind = batter.model_kind or ModelKind.SRLIB
        a = batter.action(nonterminal_index(count, cls, kind))
        return BattingAction.STAND if a is None else BattingAction(a)
    return BattingAction.SWING if rng.random() < float(batter) else BattingAction.STAND


def generate_season(
    spec: SyntheticPitcherSpec,
    n_atbats: int,
    batter_policy: BatterBehaviour,
    seed: int,
    season: int = 2009,
    batter_ids: Sequence[str] = ("B000",),
    with_trajectories: bool = True,
) -> list[AtBatRecord]:
    """Simulate ``n_atbats`` at-bats against ``spec``.

    ``batter_policy`` is either a deterministic :class:`Policy` (SRLIB or
    CRLIB) or a swing probability applied independently at every pitch.
    Each at-bat draws from its own stream seeded by (seed, pitcher, season,
    index), so the season is reproducible and at-bats are independent.
    """
    spec.validate()
    if n_atbats < 1:
        raise InvalidSpec("n_atbats must be at least 1")
    out = []
    for n in range(n_atbats):
        rng = child_rng(seed, "synth", spec.pitcher_id, season, n)
        count = Count(0, 0)
        pitches = []
        state = None
        while state is None or not state.is_terminal:
            if len(pitches) >= MAX_PITCHES:
                raise InvalidSpec(f"at-bat {n} did not terminate within {MAX_PITCHES} pitches")
            c = count_index(count)
            cls = PitchClass(_choose(rng, spec.class_probs[c]))
            action = _batter_action(batter_policy, count, cls, rng)
            result = RESULTS[_choose(rng, spec.outcome_probs[c, cls, action])]
            untyped = spec.untyped_rate > 0 and rng.random() < spec.untyped_rate
            traj = _jittered(spec.templates[cls], spec.jitter, rng) if with_trajectories else None
            pitches.append(PitchRecord(
                len(pitches) + 1, count.balls, count.strikes,
                None if untyped else spec.codes[cls], action, result, traj,
            ))
            state = advance_count(count, result)
            if not state.is_terminal:
                count = state.count
        out.append(AtBatRecord(
            f"{spec.pitcher_id}-{season}-{n:06d}", spec.pitcher_id,
            batter_ids[n % len(batter_ids)], season, pitches, state.outcome,
        ))
    return out


def implied_transition_model(spec: SyntheticPitcherSpec, kind: Union[ModelKind, str] = ModelKind.SRLIB) -> TransitionModel:
    """Exact transition model induced by ``spec`` for both batter actions."""
    spec.validate()
    kind = ModelKind.parse(kind)
    probs = np.zeros((n_nonterminal(kind), len(ACTIONS), n_states(kind)))
    strike_outs = np.zeros((n_nonterminal(kind), len(ACTIONS)))
    o_idx = terminal_index(TerminalOutcome.O, kind)

    for c, count in enumerate(COUNT_ORDER):
        for cls in PitchClass:
            if kind is ModelKind.SRLIB:
                source, weight = c, spec.class_probs[c, cls]
            else:
                source, weight = nonterminal_index(count, cls, kind), 1.0
            for a in ACTIONS:
                for r, result in enumerate(RESULTS):
                    mass = weight * spec.outcome_probs[c, cls, a, r]
                    if mass == 0.0:
                        continue
                    nxt = advance_count(count, result)
                    if nxt.is_terminal:
                        probs[source, a, terminal_index(nxt.outcome, kind)] += mass
                        if nxt.outcome is TerminalOutcome.O and result.kind is ResultKind.STRIKE:
                            strike_outs[source, a] += mass
                    elif kind is ModelKind.SRLIB:
                        probs[source, a, count_index(nxt.count)] += mass
                    else:
                        c2 = count_index(nxt.count)
                        for cls2 in PitchClass:
                            probs[source, a, nonterminal_index(nxt.count, cls2, kind)] += mass * spec.class_probs[c2, cls2]

    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.where(probs[..., o_idx] > 0, strike_outs / np.where(probs[..., o_idx] > 0, probs[..., o_idx], 1.0), 0.0)
    support = np.zeros(probs.shape[:2], dtype=int)
    available = np.ones(probs.shape[:2], dtype=bool)
    class_weights = np.rint(spec.class_probs[0] * 1_000_000).astype(int)
    return TransitionModel(kind, probs, support, available, share, class_weights)


def action_value_gaps(model: TransitionModel, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """|Q(Swing) - Q(Stand)| per nonterminal state at the optimum (NaN where an action is null)."""
    _, values = value_iteration(model, cfg)
    mdp = model.as_tabular()
    q = mdp.expected_rewards() + cfg.discount * mdp.transitions @ values.values
    gaps = np.abs(q[:, 1] - q[:, 0])
    gaps[~mdp.available.all(axis=1)] = np.nan
    return gaps


def load_specs(path: Union[str, Path]) -> list[SyntheticPitcherSpec]:
    """Read a JSON spec file: one spec object or ``{"pitchers": [...]}``."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    items = raw["pitchers"] if isinstance(raw, dict) and "pitchers" in raw else (raw if isinstance(raw, list) else [raw])
    return [SyntheticPitcherSpec.from_dict(d) for d in items]
