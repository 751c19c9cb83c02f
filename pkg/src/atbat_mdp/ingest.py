"""Pitch-by-pitch season files.

One at-bat per line, UTF-8 JSON::

    {"v":1,"at_bat_id":str,"pitcher_id":str,"batter_id":str,"season":int,
     "outcome":"O|S|D|T|HR|W",
     "pitches":[{"seq":int,"balls":int,"strikes":int,"type":str|null,
                 "action":"stand|swing","result":"ball|strike|foul|in_play",
                 "traj":{"p0":[x,y,z],"v0":[x,y,z],"a":[x,y,z],"t":float}|null}]}

The last pitch of an at-bat ending O (on contact), S, D, T or HR has result
``in_play``; an O whose last pitch is a strike is a strikeout.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

import numpy as np

from .exceptions import InconsistentAtBat, MalformedLine
from .states import (
    AtBatState,
    BattingAction,
    Count,
    PitchClass,
    PitchResult,
    ResultKind,
    TerminalOutcome,
    advance_count,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

DEFAULT_PITCH_MAP: dict[str, PitchClass] = {
    **dict.fromkeys(["FA", "FF", "FT", "FC", "FS"], PitchClass.FASTBALL),
    **dict.fromkeys(["CU", "CH", "EP", "SC", "KC"], PitchClass.CURVE_CHANGE),
    **dict.fromkeys(["SL", "SI", "ST"], PitchClass.SINK_SLIDE),
    **dict.fromkeys(["KN", "UN", "PO", "IN"], PitchClass.KNUCKLE_UNKNOWN),
}

_ACTION_NAMES = {"stand": BattingAction.STAND, "swing": BattingAction.SWING}
_ACTION_LABELS = {v: k for k, v in _ACTION_NAMES.items()}
_warned_codes: set = set()


@dataclass(frozen=True)
class TrajectoryParams:
    start_position: tuple
    initial_velocity: tuple
    acceleration: tuple
    flight_time: float

    def __post_init__(self) -> None:
        for name in ("start_position", "initial_velocity", "acceleration"):
            vec = tuple(float(x) for x in getattr(self, name))
            if len(vec) != 3 or not all(np.isfinite(vec)):
                raise ValueError(f"{name} must be three finite numbers")
            object.__setattr__(self, name, vec)
        t = float(self.flight_time)
        if not (np.isfinite(t) and t > 0):
            raise ValueError("flight_time must be positive")
        object.__setattr__(self, "flight_time", t)

    def to_dict(self) -> dict:
        return {
            "p0": list(self.start_position),
            "v0": list(self.initial_velocity),
            "a": list(self.acceleration),
            "t": self.flight_time,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrajectoryParams":
        return cls(tuple(d["p0"]), tuple(d["v0"]), tuple(d["a"]), d["t"])


@dataclass(frozen=True)
class PitchRecord:
    seq: int
    balls: int
    strikes: int
    raw_type: Optional[str]
    action: BattingAction
    result: PitchResult
    trajectory: Optional[TrajectoryParams] = None

    @property
    def count(self) -> Count:
        return Count(self.balls, self.strikes)


@dataclass
class AtBatRecord:
    at_bat_id: str
    pitcher_id: str
    batter_id: str
    season: int
    pitches: list
    outcome: TerminalOutcome

    @property
    def n_pitches(self) -> int:
        return len(self.pitches)

    @property
    def is_strikeout(self) -> bool:
        return (
            self.outcome is TerminalOutcome.O
            and bool(self.pitches)
            and self.pitches[-1].result.kind is ResultKind.STRIKE
        )


@dataclass(frozen=True)
class Reject:
    line_no: int
    at_bat_id: Optional[str]
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class Transition:
    """One observed move: ``source`` state, batter action, successor state."""

    source: AtBatState
    action: BattingAction
    successor: AtBatState
    strikeout: bool = False


# -- pitch classes ---------------------------------------------------------

def classify_pitch(raw_pitch_type: Optional[str], mapping: Optional[Mapping[str, PitchClass]] = None) -> Optional[PitchClass]:
    """Map a raw pitch code to one of the four pitch classes (None if missing or unknown)."""
    if raw_pitch_type is None or raw_pitch_type == "":
        return None
    table = DEFAULT_PITCH_MAP if mapping is None else mapping
    cls = table.get(raw_pitch_type.upper())
    if cls is None and raw_pitch_type not in _warned_codes:
        _warned_codes.add(raw_pitch_type)
        logger.warning("unmapped pitch type %r treated as missing", raw_pitch_type)
    return cls


def load_pitch_map(path: Union[str, Path]) -> dict[str, PitchClass]:
    """Read a ``{"code": "ClassLabel"}`` JSON object into a pitch map."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return {str(code).upper(): PitchClass.from_label(label) for code, label in raw.items()}


# -- trajectories ----------------------------------------------------------

def expand_trajectory(p: TrajectoryParams, m: int = 100) -> np.ndarray:
    """Sample the quadratic flight path at ``m`` evenly spaced times.

    Returns the ``m`` (x, y, z) positions concatenated in time order.
    """
    if m < 2:
        raise ValueError("need at least two sample points")
    t = np.arange(m) * p.flight_time / (m - 1)
    p0 = np.asarray(p.start_position)
    v0 = np.asarray(p.initial_velocity)
    a = np.asarray(p.acceleration)
    pos = p0[None, :] + t[:, None] * v0[None, :] + 0.5 * (t[:, None] ** 2) * a[None, :]
    return pos.reshape(-1)


# -- replay ------------------------------------------------------------------

def replay(atbat: AtBatRecord) -> AtBatState:
    """Fold the pitch results from {0,0}, checking every recorded count on the way."""
    if not atbat.pitches:
        raise InconsistentAtBat(atbat.at_bat_id, "no pitches")
    state = AtBatState.nonterminal(Count(0, 0))
    last_seq = 0
    for k, pitch in enumerate(atbat.pitches):
        if pitch.seq <= last_seq:
            raise InconsistentAtBat(atbat.at_bat_id, f"pitch seq {pitch.seq} is not increasing")
        last_seq = pitch.seq
        if state.is_terminal:
            raise InconsistentAtBat(atbat.at_bat_id, f"pitch {pitch.seq} thrown after the at-bat ended")
        if pitch.count != state.count:
            raise InconsistentAtBat(
                atbat.at_bat_id, f"pitch {pitch.seq} recorded at {pitch.count}, replay gives {state.count}"
            )
        state = advance_count(state.count, pitch.result)
    if not state.is_terminal:
        raise InconsistentAtBat(atbat.at_bat_id, f"pitches end at {state.count} without a decision")
    if state.outcome is not atbat.outcome:
        raise InconsistentAtBat(atbat.at_bat_id, f"replay ends in {state.outcome.value}, record says {atbat.outcome.value}")
    return state


def srlib_transitions(atbat: AtBatRecord) -> list[Transition]:
    """Count-to-count transitions; every pitch contributes one."""
    out = []
    for pitch in atbat.pitches:
        source = AtBatState.nonterminal(pitch.count)
        successor = advance_count(pitch.count, pitch.result)
        strikeout = successor.outcome is TerminalOutcome.O and pitch.result.kind is ResultKind.STRIKE
        out.append(Transition(source, pitch.action, successor, strikeout))
    return out


def apply_missing_type_rule(atbat: AtBatRecord, mapping: Optional[Mapping[str, PitchClass]] = None) -> list[Transition]:
    """CRLIB transitions with untyped pitches skipped over.

    A typed pitch is a source state (its count x its class). Its successor is
    the state of the next typed pitch, whose recorded count already includes
    any untyped pitches in between, or the at-bat's terminal outcome when the
    pitch itself ended the at-bat. A typed pitch followed only by untyped
    pitches to the end of the at-bat contributes nothing, and untyped pitches
    are never sources.
    """
    classes = [classify_pitch(p.raw_type, mapping) for p in atbat.pitches]
    typed = [k for k, c in enumerate(classes) if c is not None]
    out = []
    last = len(atbat.pitches) - 1
    for n, k in enumerate(typed):
        pitch = atbat.pitches[k]
        source = AtBatState.nonterminal(pitch.count, classes[k])
        if k == last:
            successor = advance_count(pitch.count, pitch.result)
            strikeout = successor.outcome is TerminalOutcome.O and pitch.result.kind is ResultKind.STRIKE
            out.append(Transition(source, pitch.action, successor, strikeout))
        elif n + 1 < len(typed):
            nxt = atbat.pitches[typed[n + 1]]
            successor = AtBatState.nonterminal(nxt.count, classes[typed[n + 1]])
            out.append(Transition(source, pitch.action, successor))
    return out


# -- (de)serialisation ---------------------------------------------------------

def _result_from_json(value: str, outcome: TerminalOutcome) -> PitchResult:
    kind = ResultKind(value)
    if kind is ResultKind.IN_PLAY:
        return PitchResult(ResultKind.IN_PLAY, outcome)
    return PitchResult(kind)


def _require(obj: Mapping, key: str, types, line_no: int):
    if key not in obj:
        raise MalformedLine(line_no, f"missing field {key!r}")
    value = obj[key]
    # bool is an int subclass; JSON true/false is never a valid number here
    if not isinstance(value, types) or isinstance(value, bool):
        raise MalformedLine(line_no, f"field {key!r} has the wrong type")
    return value


class _UnmodeledOutcome(Exception):
    pass


def atbat_from_json(obj: Mapping, line_no: int = 0) -> AtBatRecord:
    """Build an at-bat from a decoded line; raises MalformedLine on schema errors."""
    if not isinstance(obj, dict):
        raise MalformedLine(line_no, "line is not a JSON object")
    if obj.get("v") != FORMAT_VERSION:
        raise MalformedLine(line_no, f"unsupported format version {obj.get('v')!r}")
    at_bat_id = _require(obj, "at_bat_id", str, line_no)
    pitcher_id = _require(obj, "pitcher_id", str, line_no)
    batter_id = _require(obj, "batter_id", str, line_no)
    season = _require(obj, "season", int, line_no)
    outcome_raw = _require(obj, "outcome", str, line_no)
    raw_pitches = _require(obj, "pitches", list, line_no)
    try:
        outcome = TerminalOutcome(outcome_raw)
    except ValueError:
        raise _UnmodeledOutcome(outcome_raw) from None
    pitches = []
    for raw in raw_pitches:
        if not isinstance(raw, dict):
            raise MalformedLine(line_no, "pitch entry is not an object")
        seq = _require(raw, "seq", int, line_no)
        balls = _require(raw, "balls", int, line_no)
        strikes = _require(raw, "strikes", int, line_no)
        if not (0 <= balls <= 3 and 0 <= strikes <= 2):
            raise MalformedLine(line_no, f"pitch {seq} has illegal count {balls}-{strikes}")
        if "type" not in raw:
            raise MalformedLine(line_no, "missing field 'type'")
        ptype = raw["type"]
        if ptype is not None and not isinstance(ptype, str):
            raise MalformedLine(line_no, "field 'type' has the wrong type")
        action_raw = _require(raw, "action", str, line_no)
        if action_raw not in _ACTION_NAMES:
            raise MalformedLine(line_no, f"unknown action {action_raw!r}")
        result_raw = _require(raw, "result", str, line_no)
        try:
            result = _result_from_json(result_raw, outcome)
        except ValueError as exc:
            if result_raw == "in_play":
                raise InconsistentAtBat(at_bat_id, f"pitch {seq} put in play in an at-bat ending {outcome.value}") from None
            raise MalformedLine(line_no, f"unknown result {result_raw!r}") from exc
        traj = raw.get("traj")
        if traj is not None:
            try:
                traj = TrajectoryParams.from_dict(traj)
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedLine(line_no, f"pitch {seq} has a bad trajectory: {exc}") from None
        pitches.append(PitchRecord(seq, balls, strikes, ptype, _ACTION_NAMES[action_raw], result, traj))
    return AtBatRecord(at_bat_id, pitcher_id, batter_id, season, pitches, outcome)


def atbat_to_json(atbat: AtBatRecord) -> dict:
    return {
        "v": FORMAT_VERSION,
        "at_bat_id": atbat.at_bat_id,
        "pitcher_id": atbat.pitcher_id,
        "batter_id": atbat.batter_id,
        "season": atbat.season,
        "outcome": atbat.outcome.value,
        "pitches": [
            {
                "seq": p.seq,
                "balls": p.balls,
                "strikes": p.strikes,
                "type": p.raw_type,
                "action": _ACTION_LABELS[p.action],
                "result": p.result.kind.value,
                "traj": None if p.trajectory is None else p.trajectory.to_dict(),
            }
            for p in atbat.pitches
        ],
    }


def dumps_atbat(atbat: AtBatRecord) -> str:
    return json.dumps(atbat_to_json(atbat), separators=(",", ":"), ensure_ascii=False)


def write_season(atbats: Iterable[AtBatRecord], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ab in atbats:
            fh.write(dumps_atbat(ab))
            fh.write("\n")


@dataclass
class SeasonData:
    at_bats: list
    rejects: list = field(default_factory=list)
    n_lines: int = 0

    @property
    def n_pitches(self) -> int:
        return sum(ab.n_pitches for ab in self.at_bats)

    def summary(self) -> dict:
        reasons: dict = {}
        for r in self.rejects:
            reasons[r.reason] = reasons.get(r.reason, 0) + 1
        return {
            "at_bats": len(self.at_bats),
            "pitches": self.n_pitches,
            "rejects": len(self.rejects),
            "reject_reasons": dict(sorted(reasons.items())),
            "pitchers": len({ab.pitcher_id for ab in self.at_bats}),
            "batters": len({ab.batter_id for ab in self.at_bats}),
        }


def read_season(path: Union[str, Path], *, strict: bool = False) -> SeasonData:
    """Parse a season file, collecting rejected at-bats with reason codes.

    Malformed lines always raise :class:`MalformedLine`. Inconsistent or
    unmodeled at-bats raise :class:`InconsistentAtBat` when ``strict``.
    """
    data = SeasonData([])
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            data.n_lines += 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from None
            ab_id = obj.get("at_bat_id") if isinstance(obj, dict) else None
            try:
                atbat = atbat_from_json(obj, line_no)
                replay(atbat)
            except _UnmodeledOutcome as exc:
                reject = Reject(line_no, ab_id, "unmodeled_outcome", str(exc))
            except InconsistentAtBat as exc:
                if strict:
                    raise
                reject = Reject(line_no, ab_id, "replay_mismatch", exc.reason)
            else:
                data.at_bats.append(atbat)
                continue
            if strict:
                raise InconsistentAtBat(ab_id or f"line {line_no}", f"{reject.reason}: {reject.detail}")
            logger.info("rejected at-bat %s on line %d: %s", ab_id, line_no, reject.reason)
            data.rejects.append(reject)
    return data


def parse_season(path: Union[str, Path], *, strict: bool = False, rejects: Optional[list] = None) -> list[AtBatRecord]:
    """Well-formed at-bats of a season file; rejected ones are appended to ``rejects``."""
    data = read_season(path, strict=strict)
    if rejects is not None:
        rejects.extend(data.rejects)
    return data.at_bats


def group_by_pitcher(atbats: Iterable[AtBatRecord]) -> dict[str, list[AtBatRecord]]:
    out: dict = {}
    for ab in atbats:
        out.setdefault(ab.pitcher_id, []).append(ab)
    return dict(sorted(out.items()))
