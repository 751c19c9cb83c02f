"""Monte Carlo at-bats driven by identified pitch types.

Each repetition of an at-bat walks the actual pitch sequence. At every pitch
the batter's believed trajectory is classified, the policy picks an action
for ``count x predicted class``, and the successor is drawn by inverse
transform from the test-season model row.

Randomness per repetition comes from two streams derived from
``(seed, at_bat_id, repetition)``: one for perception noise (all pitches'
noise drawn up front, in pitch order) and one supplying a single uniform
variate per transition.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import MissingTrajectory
from .ingest import AtBatRecord, expand_trajectory
from .mdp import Policy
from .model import TransitionModel
from .seeding import child_rng
from .spatial import BatterProfile, QuadraticKernelSVC, believed_trajectory
from .states import (
    Count,
    ModelKind,
    PitchClass,
    TerminalOutcome,
    TERMINAL_ORDER,
    n_nonterminal,
    nonterminal_index,
    state_from_index,
    terminal_index,
)


@dataclass(frozen=True)
class SimConfig:
    repetitions: int = 100
    seed: int = 0
    redraw_noise: bool = True
    trajectory_points: int = 100

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")


class SkipReason(str, enum.Enum):
    PITCHES_EXHAUSTED = "PitchesExhausted"
    UNSEEN_STATE_PITCH_PAIR = "UnseenStatePitchPair"


@dataclass(frozen=True)
class SimOutcome:
    terminal: Optional[TerminalOutcome] = None
    skipped: Optional[SkipReason] = None
    strikeout: bool = False

    def __post_init__(self) -> None:
        if (self.terminal is None) == (self.skipped is None):
            raise ValueError("an outcome is either terminal or skipped")


def inverse_transform(probs: np.ndarray, u: float) -> int:
    """Index of the bin containing ``u`` when bins of length ``probs`` tile [0, 1] in order."""
    cum = np.cumsum(probs)
    k = int(np.searchsorted(cum, u, side="right"))
    if k >= len(probs):
        # u beyond the rounded total: fall back to the last bin with mass
        k = int(np.flatnonzero(np.asarray(probs) > 0)[-1])
    return k


def successor_bins(row: np.ndarray, strikeout_share: float, kind: ModelKind) -> tuple[np.ndarray, list]:
    """Row probabilities with the O bin split into (strikeout, other out).

    Returns the bin lengths and, per bin, ``(state index, is_strikeout)``.
    """
    o = terminal_index(TerminalOutcome.O, kind)
    lengths = []
    labels = []
    for j, p in enumerate(row):
        if j == o:
            so = p * strikeout_share
            lengths.extend([so, p - so])
            labels.extend([(j, True), (j, False)])
        else:
            lengths.append(p)
            labels.append((j, False))
    return np.asarray(lengths), labels


def simulate_atbat(
    atbat: AtBatRecord,
    policy: Policy,
    model: TransitionModel,
    classifier: QuadraticKernelSVC,
    profile: BatterProfile,
    cfg: SimConfig = SimConfig(),
) -> list[SimOutcome]:
    """Replay one at-bat ``cfg.repetitions`` times under ``policy`` on ``model``."""
    kind = model.model_kind
    if kind is not ModelKind.CRLIB or (policy.model_kind not in (None, ModelKind.CRLIB)):
        raise ValueError("simulation needs a CRLIB policy and model")
    for p in atbat.pitches:
        if p.trajectory is None:
            raise MissingTrajectory(p.seq)
    true_paths = np.vstack([expand_trajectory(p.trajectory, cfg.trajectory_points) for p in atbat.pitches])
    n_nt = n_nonterminal(kind)
    bins_cache: dict = {}

    fixed_classes = None
    if not cfg.redraw_noise:
        fixed_classes = _predict(classifier, true_paths, profile.alpha, child_rng(cfg.seed, "noise", atbat.at_bat_id, "fixed"))

    out = []
    for rep in range(cfg.repetitions):
        if fixed_classes is None:
            classes = _predict(classifier, true_paths, profile.alpha, child_rng(cfg.seed, "noise", atbat.at_bat_id, rep))
        else:
            classes = fixed_classes
        uniforms = child_rng(cfg.seed, "transition", atbat.at_bat_id, rep)
        count = Count(0, 0)
        result = None
        for k in range(len(atbat.pitches)):
            state = nonterminal_index(count, PitchClass(int(classes[k])), kind)
            action = policy.action(state)
            if action is None or not model.available[state, action]:
                result = SimOutcome(skipped=SkipReason.UNSEEN_STATE_PITCH_PAIR)
                break
            key = (state, action)
            if key not in bins_cache:
                bins_cache[key] = successor_bins(model.probs[state, action], model.strikeout_share[state, action], kind)
            lengths, labels = bins_cache[key]
            j, strikeout = labels[inverse_transform(lengths, uniforms.random())]
            if j >= n_nt:
                result = SimOutcome(terminal=TERMINAL_ORDER[j - n_nt], strikeout=strikeout)
                break
            count = state_from_index(j, kind).count
        if result is None:
            result = SimOutcome(skipped=SkipReason.PITCHES_EXHAUSTED)
        out.append(result)
    return out


def _predict(classifier: QuadraticKernelSVC, paths: np.ndarray, alpha: float, rng: np.random.Generator) -> np.ndarray:
    believed = np.vstack([believed_trajectory(x, alpha, rng) for x in paths])
    return classifier.predict(believed)


@dataclass(frozen=True)
class BattingLine:
    ab: int = 0
    singles: int = 0
    doubles: int = 0
    triples: int = 0
    hr: int = 0
    bb: int = 0
    so: int = 0
    skipped: int = 0

    @property
    def h(self) -> int:
        return self.singles + self.doubles + self.triples + self.hr

    @property
    def avg(self) -> float:
        return self.h / self.ab if self.ab else 0.0

    @property
    def obp(self) -> float:
        # (H + BB) / (AB + BB); the walk-inclusive denominator reproduces published lines
        denom = self.ab + self.bb
        return (self.h + self.bb) / denom if denom else 0.0

    @property
    def slg(self) -> float:
        bases = self.singles + 2 * self.doubles + 3 * self.triples + 4 * self.hr
        return bases / self.ab if self.ab else 0.0

    def __add__(self, other: "BattingLine") -> "BattingLine":
        return BattingLine(*(getattr(self, f) + getattr(other, f) for f in _LINE_FIELDS))

    def row(self) -> dict:
        return {
            "AB": self.ab, "H": self.h, "1B": self.singles, "2B": self.doubles, "3B": self.triples,
            "HR": self.hr, "BB": self.bb, "SO": self.so, "skipped": self.skipped,
            "AVG": f"{self.avg:.3f}", "OBP": f"{self.obp:.3f}", "SLG": f"{self.slg:.3f}",
        }


_LINE_FIELDS = ("ab", "singles", "doubles", "triples", "hr", "bb", "so", "skipped")
_HIT_FIELD = {
    TerminalOutcome.S: "singles",
    TerminalOutcome.D: "doubles",
    TerminalOutcome.T: "triples",
    TerminalOutcome.HR: "hr",
}


def accumulate_stats(outcomes: Iterable[SimOutcome]) -> BattingLine:
    """Batting line over simulated outcomes; skipped runs count only as ``skipped``."""
    tally = dict.fromkeys(_LINE_FIELDS, 0)
    for o in outcomes:
        if o.skipped is not None:
            tally["skipped"] += 1
        elif o.terminal is TerminalOutcome.W:
            tally["bb"] += 1
        else:
            tally["ab"] += 1
            if o.terminal is TerminalOutcome.O:
                tally["so"] += o.strikeout
            else:
                tally[_HIT_FIELD[o.terminal]] += 1
    return BattingLine(**tally)


def simulate_batter(
    atbats: Sequence[AtBatRecord],
    policy: Policy,
    model: TransitionModel,
    classifier: QuadraticKernelSVC,
    profile: BatterProfile,
    cfg: SimConfig = SimConfig(),
) -> BattingLine:
    outcomes = []
    for ab in atbats:
        outcomes.extend(simulate_atbat(ab, policy, model, classifier, profile, cfg))
    return accumulate_stats(outcomes)
