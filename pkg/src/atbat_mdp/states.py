"""At-bat vocabulary: counts, terminal outcomes, pitch classes and the two state spaces.

State indices are canonical and stable. SRLIB nonterminals are the 12 counts in
``COUNT_ORDER``; CRLIB nonterminals are ordered pitch-class-major, so the CRLIB
index of ``count x cls`` is ``cls * 12 + count_index``. Terminals follow the
nonterminals in the order O, S, D, T, HR, W.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

from .exceptions import TerminalStateError


class ModelKind(str, enum.Enum):
    SRLIB = "srlib"
    CRLIB = "crlib"

    @classmethod
    def parse(cls, value: Union[str, "ModelKind"]) -> "ModelKind":
        if isinstance(value, ModelKind):
            return value
        return cls(str(value).lower())


class TerminalOutcome(str, enum.Enum):
    O = "O"
    S = "S"
    D = "D"
    T = "T"
    HR = "HR"
    W = "W"

    @property
    def is_hit(self) -> bool:
        return self in (TerminalOutcome.S, TerminalOutcome.D, TerminalOutcome.T, TerminalOutcome.HR)


TERMINAL_ORDER = tuple(TerminalOutcome)


class PitchClass(enum.IntEnum):
    FASTBALL = 0
    CURVE_CHANGE = 1
    SINK_SLIDE = 2
    KNUCKLE_UNKNOWN = 3

    @property
    def label(self) -> str:
        return _CLASS_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "PitchClass":
        for member, name in _CLASS_LABELS.items():
            if name.lower() == label.lower() or member.name.lower() == label.lower():
                return member
        raise ValueError(f"unknown pitch class {label!r}")


_CLASS_LABELS = {
    PitchClass.FASTBALL: "Fastball",
    PitchClass.CURVE_CHANGE: "CurveChange",
    PitchClass.SINK_SLIDE: "SinkSlide",
    PitchClass.KNUCKLE_UNKNOWN: "KnuckleUnknown",
}


class BattingAction(enum.IntEnum):
    STAND = 0
    SWING = 1


ACTIONS = (BattingAction.STAND, BattingAction.SWING)


@dataclass(frozen=True, order=True)
class Count:
    balls: int
    strikes: int

    def __post_init__(self) -> None:
        if not (0 <= self.balls <= 3 and 0 <= self.strikes <= 2):
            raise ValueError(f"illegal count {{{self.balls},{self.strikes}}}")

    def __str__(self) -> str:
        return f"{{{self.balls},{self.strikes}}}"


COUNT_ORDER = tuple(
    Count(b, s)
    for b, s in [
        (0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (0, 2),
        (1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2),
    ]
)
N_COUNTS = len(COUNT_ORDER)
_COUNT_INDEX = {c: i for i, c in enumerate(COUNT_ORDER)}


def count_index(count: Count) -> int:
    return _COUNT_INDEX[count]


class ResultKind(str, enum.Enum):
    BALL = "ball"
    STRIKE = "strike"
    FOUL = "foul"
    IN_PLAY = "in_play"


@dataclass(frozen=True)
class PitchResult:
    """Outcome of a single pitch. ``outcome`` is set only for balls put in play."""

    kind: ResultKind
    outcome: Optional[TerminalOutcome] = None

    def __post_init__(self) -> None:
        if self.kind is ResultKind.IN_PLAY:
            if self.outcome is None or self.outcome is TerminalOutcome.W:
                raise ValueError("in-play result needs an outcome other than W")
        elif self.outcome is not None:
            raise ValueError(f"{self.kind.value} result cannot carry an outcome")

    @classmethod
    def ball(cls) -> "PitchResult":
        return cls(ResultKind.BALL)

    @classmethod
    def strike(cls) -> "PitchResult":
        return cls(ResultKind.STRIKE)

    @classmethod
    def foul(cls) -> "PitchResult":
        return cls(ResultKind.FOUL)

    @classmethod
    def in_play(cls, outcome: Union[TerminalOutcome, str]) -> "PitchResult":
        return cls(ResultKind.IN_PLAY, TerminalOutcome(outcome))


@dataclass(frozen=True)
class AtBatState:
    """Either a nonterminal count (with a pitch class in CRLIB) or a terminal outcome."""

    count: Optional[Count] = None
    pitch_class: Optional[PitchClass] = None
    outcome: Optional[TerminalOutcome] = None

    def __post_init__(self) -> None:
        if (self.count is None) == (self.outcome is None):
            raise ValueError("a state is either a count or a terminal outcome")
        if self.outcome is not None and self.pitch_class is not None:
            raise ValueError("terminal states carry no pitch class")

    @classmethod
    def nonterminal(cls, count: Count, pitch_class: Optional[PitchClass] = None) -> "AtBatState":
        return cls(count=count, pitch_class=pitch_class)

    @classmethod
    def terminal(cls, outcome: Union[TerminalOutcome, str]) -> "AtBatState":
        return cls(outcome=TerminalOutcome(outcome))

    @property
    def is_terminal(self) -> bool:
        return self.outcome is not None

    def __str__(self) -> str:
        if self.outcome is not None:
            return self.outcome.value
        if self.pitch_class is None:
            return str(self.count)
        return f"{self.count}x{self.pitch_class.label}"


def n_nonterminal(kind: Union[ModelKind, str]) -> int:
    kind = ModelKind.parse(kind)
    return N_COUNTS if kind is ModelKind.SRLIB else N_COUNTS * len(PitchClass)


def n_states(kind: Union[ModelKind, str]) -> int:
    return n_nonterminal(kind) + len(TERMINAL_ORDER)


@lru_cache(maxsize=None)
def _enumerate(kind: ModelKind) -> tuple:
    if kind is ModelKind.SRLIB:
        nonterm = [AtBatState.nonterminal(c) for c in COUNT_ORDER]
    else:
        nonterm = [AtBatState.nonterminal(c, cls) for cls in PitchClass for c in COUNT_ORDER]
    return tuple(nonterm + [AtBatState.terminal(o) for o in TERMINAL_ORDER])


def enumerate_states(model_kind: Union[ModelKind, str]) -> list[AtBatState]:
    """All states of a model in canonical order (nonterminals, then O,S,D,T,HR,W)."""
    return list(_enumerate(ModelKind.parse(model_kind)))


@lru_cache(maxsize=None)
def _index_map(kind: ModelKind) -> dict:
    return {s: i for i, s in enumerate(_enumerate(kind))}


def state_index(state: AtBatState, model_kind: Union[ModelKind, str]) -> int:
    kind = ModelKind.parse(model_kind)
    try:
        return _index_map(kind)[state]
    except KeyError:
        raise ValueError(f"state {state} does not belong to {kind.value}") from None


def state_from_index(index: int, model_kind: Union[ModelKind, str]) -> AtBatState:
    return _enumerate(ModelKind.parse(model_kind))[index]


def terminal_index(outcome: TerminalOutcome, model_kind: Union[ModelKind, str]) -> int:
    return n_nonterminal(model_kind) + TERMINAL_ORDER.index(TerminalOutcome(outcome))


def nonterminal_index(
    count: Count, pitch_class: Optional[PitchClass], model_kind: Union[ModelKind, str]
) -> int:
    kind = ModelKind.parse(model_kind)
    if kind is ModelKind.SRLIB:
        return count_index(count)
    if pitch_class is None:
        raise ValueError("CRLIB states need a pitch class")
    return int(pitch_class) * N_COUNTS + count_index(count)


def advance_count(count: Count, result: PitchResult) -> AtBatState:
    """Apply one pitch result to a count."""
    kind = result.kind
    if kind is ResultKind.BALL:
        if count.balls == 3:
            return AtBatState.terminal(TerminalOutcome.W)
        return AtBatState.nonterminal(Count(count.balls + 1, count.strikes))
    if kind is ResultKind.STRIKE:
        if count.strikes == 2:
            return AtBatState.terminal(TerminalOutcome.O)
        return AtBatState.nonterminal(Count(count.balls, count.strikes + 1))
    if kind is ResultKind.FOUL:
        # a two-strike foul leaves the count unchanged
        return AtBatState.nonterminal(Count(count.balls, min(count.strikes + 1, 2)))
    return AtBatState.terminal(result.outcome)


# Reward units for (action, terminal outcome); every other combination pays 0.
_REWARD_TABLE = {
    (BattingAction.STAND, TerminalOutcome.W): 1,
    (BattingAction.SWING, TerminalOutcome.S): 2,
    (BattingAction.SWING, TerminalOutcome.D): 3,
    (BattingAction.SWING, TerminalOutcome.T): 4,
    (BattingAction.SWING, TerminalOutcome.HR): 5,
}


def outcome_reward(action: BattingAction, outcome: Optional[TerminalOutcome]) -> int:
    if outcome is None:
        return 0
    return _REWARD_TABLE.get((BattingAction(action), TerminalOutcome(outcome)), 0)


def reward(i: AtBatState, u: BattingAction, j: AtBatState) -> int:
    """Reward for moving from nonterminal ``i`` to ``j`` after action ``u``."""
    if i.is_terminal:
        raise TerminalStateError(f"reward is undefined from terminal state {i}")
    return outcome_reward(u, j.outcome)


@lru_cache(maxsize=None)
def reward_table(model_kind: ModelKind):
    """Reward by (action, successor index) as a read-only ``(2, n_states)`` array."""
    import numpy as np

    kind = ModelKind.parse(model_kind)
    table = np.zeros((len(ACTIONS), n_states(kind)))
    offset = n_nonterminal(kind)
    for a in ACTIONS:
        for k, o in enumerate(TERMINAL_ORDER):
            table[a, offset + k] = outcome_reward(a, o)
    table.setflags(write=False)
    return table
