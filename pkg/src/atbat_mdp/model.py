"""Transition model over the at-bat state space."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .mdp import TabularMDP, check_stochastic
from .states import (
    ACTIONS,
    PitchClass,
    ModelKind,
    enumerate_states,
    n_nonterminal,
    n_states,
    reward_table,
)

MODEL_FORMAT_VERSION = 1


@dataclass
class TransitionModel:
    """Per (nonterminal state, action) distribution over successor states.

    Attributes
    ----------
    probs : ndarray, shape (n_nonterminal, 2, n_states)
        Successor distribution; rows of null pairs are all zero.
    support_counts : ndarray of int, shape (n_nonterminal, 2)
        Number of observed transitions behind each row.
    available : ndarray of bool, shape (n_nonterminal, 2)
        Non-null rows. Defaults to ``support_counts > 0``; analytic models
        set it explicitly.
    strikeout_share : ndarray, shape (n_nonterminal, 2)
        Fraction of each row's mass on O that came from strikeouts.
    pitch_class_counts : ndarray of int, shape (4,)
        Typed pitches seen per class; weights the CRLIB root value.
    """

    model_kind: ModelKind
    probs: np.ndarray
    support_counts: np.ndarray
    available: Optional[np.ndarray] = None
    strikeout_share: Optional[np.ndarray] = None
    pitch_class_counts: np.ndarray = field(default_factory=lambda: np.zeros(len(PitchClass), dtype=int))

    def __post_init__(self) -> None:
        self.model_kind = ModelKind.parse(self.model_kind)
        shape = (n_nonterminal(self.model_kind), len(ACTIONS))
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != shape + (n_states(self.model_kind),):
            raise ValueError(f"probs has shape {self.probs.shape}, expected {shape + (n_states(self.model_kind),)}")
        self.support_counts = np.asarray(self.support_counts, dtype=int).reshape(shape)
        if self.available is None:
            self.available = self.support_counts > 0
        self.available = np.asarray(self.available, dtype=bool).reshape(shape)
        self.probs[~self.available] = 0.0
        if self.strikeout_share is None:
            self.strikeout_share = np.zeros(shape)
        self.strikeout_share = np.asarray(self.strikeout_share, dtype=float).reshape(shape)
        self.pitch_class_counts = np.asarray(self.pitch_class_counts, dtype=int).reshape(len(PitchClass))
        self._tabular = None

    @classmethod
    def empty(cls, model_kind: Union[ModelKind, str]) -> "TransitionModel":
        kind = ModelKind.parse(model_kind)
        shape = (n_nonterminal(kind), len(ACTIONS))
        return cls(kind, np.zeros(shape + (n_states(kind),)), np.zeros(shape, dtype=int))

    @property
    def n_nonterminal(self) -> int:
        return self.probs.shape[0]

    @property
    def n_states(self) -> int:
        return self.probs.shape[2]

    def row(self, state: int, action: int) -> Optional[np.ndarray]:
        """Successor distribution, or None for a null pair."""
        if not self.available[state, action]:
            return None
        return self.probs[state, action]

    def as_tabular(self) -> TabularMDP:
        if self._tabular is None:
            self._tabular = TabularMDP(self.probs, reward_table(self.model_kind)[None, :, :], self.available)
        return self._tabular

    def validate(self) -> None:
        check_stochastic(self.as_tabular())

    def to_dict(self) -> dict:
        rows = []
        for i, a in zip(*np.nonzero(self.available)):
            rows.append({
                "state": int(i),
                "action": int(a),
                "count": int(self.support_counts[i, a]),
                "probs": [float(p) for p in self.probs[i, a]],
                "strikeout_share": float(self.strikeout_share[i, a]),
            })
        return {
            "v": MODEL_FORMAT_VERSION,
            "model_kind": self.model_kind.value,
            "n_states": self.n_states,
            "pitch_class_counts": [int(k) for k in self.pitch_class_counts],
            "rows": rows,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TransitionModel":
        kind = ModelKind.parse(data["model_kind"])
        model = cls.empty(kind)
        available = np.zeros_like(model.available)
        for row in data["rows"]:
            i, a = row["state"], row["action"]
            model.probs[i, a] = row["probs"]
            model.support_counts[i, a] = row["count"]
            model.strikeout_share[i, a] = row.get("strikeout_share", 0.0)
            available[i, a] = True
        model.available = available
        model.pitch_class_counts = np.asarray(data.get("pitch_class_counts", [0] * len(PitchClass)), dtype=int)
        return model

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TransitionModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_csv(self) -> str:
        """Non-null rows as CSV, one column per successor state."""
        labels = [str(s) for s in enumerate_states(self.model_kind)]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["state", "action", "count"] + labels)
        for i, a in zip(*np.nonzero(self.available)):
            writer.writerow([labels[i], int(a), int(self.support_counts[i, a])] + [repr(float(p)) for p in self.probs[i, a]])
        return buf.getvalue()
