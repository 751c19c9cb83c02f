"""Finite episodic MDP solvers.

Value Iteration and Policy Evaluation use in-place (Gauss-Seidel) sweeps over
the nonterminal states in index order and stop once the largest change in a
sweep drops below ``epsilon``. Terminal states always have value 0.

Two model containers are accepted everywhere:

* :class:`TabularMDP`, a generic array model with arbitrary rewards, used for
  fixtures such as GridWorld and random test MDPs;
* :class:`atbat_mdp.model.TransitionModel`, the at-bat model whose rewards come
  from :func:`atbat_mdp.states.reward_table`.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .exceptions import EmptyTestData, NoActionableState, NonStochasticModel, TooManyStates
from .states import N_COUNTS, ModelKind, PitchClass

logger = logging.getLogger(__name__)

NULL_ACTION = -1
ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 2.22e-16
    max_iterations: int = 1_000_000
    discount: float = 1.0

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.discount <= 1:
            raise ValueError("discount must lie in (0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class TabularMDP:
    """Array-backed episodic MDP.

    States ``0..n_nonterminal-1`` are nonterminal, the remaining ``n_states -
    n_nonterminal`` are absorbing terminals with value 0.

    Attributes
    ----------
    transitions : ndarray, shape (n_nonterminal, n_actions, n_states)
    rewards : ndarray, broadcastable to ``transitions``
        Reward for each (state, action, successor) triple.
    available : ndarray of bool, shape (n_nonterminal, n_actions)
        False marks a null (unobserved) state-action pair.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    available: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.transitions = np.asarray(self.transitions, dtype=float)
        if self.transitions.ndim != 3:
            raise ValueError("transitions must have shape (n_nonterminal, n_actions, n_states)")
        n_nt, n_a, n = self.transitions.shape
        if n < n_nt:
            raise ValueError("there must be at least as many states as nonterminal states")
        self.rewards = np.broadcast_to(np.asarray(self.rewards, dtype=float), self.transitions.shape)
        if self.available is None:
            self.available = np.ones((n_nt, n_a), dtype=bool)
        else:
            self.available = np.asarray(self.available, dtype=bool)
            if self.available.shape != (n_nt, n_a):
                raise ValueError("available must have shape (n_nonterminal, n_actions)")

    @property
    def n_nonterminal(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def n_states(self) -> int:
        return self.transitions.shape[2]

    def expected_rewards(self) -> np.ndarray:
        """Immediate expected reward per (state, action); zero on null pairs."""
        r = np.einsum("iaj,iaj->ia", self.transitions, self.rewards)
        return np.where(self.available, r, 0.0)

    def as_tabular(self) -> "TabularMDP":
        return self


@dataclass
class Policy:
    """Deterministic policy over nonterminal states; ``-1`` marks a null entry."""

    actions: np.ndarray
    model_kind: Optional[ModelKind] = None

    def __post_init__(self) -> None:
        self.actions = np.asarray(self.actions, dtype=int)
        if self.model_kind is not None:
            self.model_kind = ModelKind.parse(self.model_kind)

    def __len__(self) -> int:
        return len(self.actions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Policy):
            return NotImplemented
        return self.model_kind == other.model_kind and np.array_equal(self.actions, other.actions)

    def action(self, state: int) -> Optional[int]:
        a = int(self.actions[state])
        return None if a == NULL_ACTION else a

    def to_layout(self) -> list:
        """Binary-vector layout: 12 entries for SRLIB, 4 rows of 12 for CRLIB."""
        flat = [None if a == NULL_ACTION else int(a) for a in self.actions]
        if self.model_kind is ModelKind.CRLIB:
            return [flat[k * N_COUNTS:(k + 1) * N_COUNTS] for k in range(len(PitchClass))]
        return flat

    @classmethod
    def from_layout(cls, layout: Sequence, model_kind: Union[ModelKind, str, None] = None) -> "Policy":
        flat = []
        for entry in layout:
            if isinstance(entry, (list, tuple)):
                flat.extend(entry)
            else:
                flat.append(entry)
        actions = [NULL_ACTION if a is None else int(a) for a in flat]
        if model_kind is None:
            model_kind = ModelKind.CRLIB if len(actions) == N_COUNTS * len(PitchClass) else ModelKind.SRLIB
        return cls(np.array(actions, dtype=int), model_kind)

    def to_dict(self) -> dict:
        kind = None if self.model_kind is None else self.model_kind.value
        return {"model_kind": kind, "policy": self.to_layout()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Policy":
        return cls.from_layout(data["policy"], data.get("model_kind"))


@dataclass
class ValueVector:
    values: np.ndarray
    converged: bool
    iterations: int
    diagnostics: list = field(default_factory=list)

    def __getitem__(self, state: int) -> float:
        return float(self.values[state])

    def to_dict(self) -> dict:
        return {
            "values": [float(v) for v in self.values],
            "converged": self.converged,
            "iterations": self.iterations,
            "diagnostics": list(self.diagnostics),
        }


ModelLike = Union[TabularMDP, "TransitionModel"]  # noqa: F821


def _kind_of(model) -> Optional[ModelKind]:
    return getattr(model, "model_kind", None)


def check_stochastic(mdp: TabularMDP) -> None:
    probs = mdp.transitions[mdp.available]
    if probs.size == 0:
        return
    if np.any(probs < 0) or not np.all(np.isfinite(probs)):
        raise NonStochasticModel("transition rows must be finite and nonnegative")
    sums = probs.sum(axis=-1)
    bad = np.abs(sums - 1.0) > ROW_SUM_TOL
    if np.any(bad):
        rows = np.argwhere(mdp.available)[bad]
        i, a = rows[0]
        raise NonStochasticModel(f"row (state {i}, action {a}) sums to {sums[bad][0]!r}")


def _prepare(model: ModelLike) -> TabularMDP:
    mdp = model.as_tabular()
    check_stochastic(mdp)
    if not mdp.available.any():
        raise NoActionableState("every nonterminal state-action pair is null")
    return mdp


def value_iteration(model: ModelLike, cfg: SolverConfig = SolverConfig()) -> tuple[Policy, ValueVector]:
    """Optimal deterministic policy and its values.

    Ties between actions go to the lower action index (Stand). States with no
    available action keep value 0 and a null policy entry.
    """
    mdp = _prepare(model)
    n_nt = mdp.n_nonterminal
    P = mdp.transitions
    r = mdp.expected_rewards()
    gamma = cfg.discount
    J = np.zeros(mdp.n_states)
    choices = [np.flatnonzero(mdp.available[i]) for i in range(n_nt)]
    live = [i for i in range(n_nt) if len(choices[i])]

    converged = False
    sweeps = 0
    while sweeps < cfg.max_iterations:
        sweeps += 1
        delta = 0.0
        for i in live:
            v = J[i]
            best = -np.inf
            for a in choices[i]:
                q = r[i, a] + gamma * float(P[i, a] @ J)
                if q > best:
                    best = q
            J[i] = best
            delta = max(delta, abs(v - best))
        if delta < cfg.epsilon:
            converged = True
            break
    if not converged:
        logger.warning("value iteration stopped after %d sweeps without converging", sweeps)

    actions = np.full(n_nt, NULL_ACTION, dtype=int)
    for i in live:
        qs = [r[i, a] + gamma * float(P[i, a] @ J) for a in choices[i]]
        actions[i] = choices[i][int(np.argmax(qs))]
    return Policy(actions, _kind_of(model)), ValueVector(J, converged, sweeps)


def policy_evaluation(model: ModelLike, pi: Policy, cfg: SolverConfig = SolverConfig()) -> ValueVector:
    """Expected reward of every state under ``pi``.

    A policy action whose model row is null is treated as absorption with
    value 0; the state is listed in ``diagnostics``.
    """
    kind = _kind_of(model)
    if kind is not None and pi.model_kind is not None and kind is not pi.model_kind:
        raise ValueError(f"policy is {pi.model_kind.value} but model is {kind.value}")
    mdp = _prepare(model)
    n_nt = mdp.n_nonterminal
    if len(pi) != n_nt:
        raise ValueError(f"policy has {len(pi)} entries, model has {n_nt} nonterminal states")
    P = mdp.transitions
    r = mdp.expected_rewards()
    gamma = cfg.discount

    diagnostics = []
    live = []
    for i in range(n_nt):
        a = pi.action(i)
        if a is None:
            continue
        if not mdp.available[i, a]:
            diagnostics.append(f"state {i}: action {a} has no transition data; valued at 0")
            continue
        live.append((i, a))
    for msg in diagnostics:
        logger.info(msg)

    J = np.zeros(mdp.n_states)
    converged = False
    sweeps = 0
    while sweeps < cfg.max_iterations:
        sweeps += 1
        delta = 0.0
        for i, a in live:
            v = J[i]
            J[i] = r[i, a] + gamma * float(P[i, a] @ J)
            delta = max(delta, abs(v - J[i]))
        if delta < cfg.epsilon:
            converged = True
            break
    if not converged:
        logger.warning("policy evaluation stopped after %d sweeps without converging", sweeps)
    return ValueVector(J, converged, sweeps, diagnostics)


def exact_policy_values(model: ModelLike, pi: Policy, discount: float = 1.0) -> np.ndarray:
    """Values of ``pi`` from a direct linear solve of its Bellman system.

    Null policy entries and null rows contribute value 0, matching
    :func:`policy_evaluation`.
    """
    mdp = model.as_tabular()
    n_nt = mdp.n_nonterminal
    r = mdp.expected_rewards()
    A = np.eye(n_nt)
    b = np.zeros(n_nt)
    for i in range(n_nt):
        a = pi.action(i)
        if a is None or not mdp.available[i, a]:
            continue
        A[i] -= discount * mdp.transitions[i, a, :n_nt]
        b[i] = r[i, a]
    values = np.zeros(mdp.n_states)
    values[:n_nt] = np.linalg.solve(A, b)
    return values


def enumerate_policies_oracle(
    model: ModelLike, discount: float = 1.0, root: int = 0, max_states: int = 12
) -> list[tuple[Policy, float]]:
    """Every deterministic policy with its exact root value (test oracle)."""
    mdp = model.as_tabular()
    choices = [tuple(np.flatnonzero(mdp.available[i])) for i in range(mdp.n_nonterminal)]
    live = [i for i, c in enumerate(choices) if c]
    if len(live) > max_states:
        raise TooManyStates(f"{len(live)} actionable states exceeds the limit of {max_states}")
    kind = _kind_of(model)
    out = []
    for combo in itertools.product(*(choices[i] for i in live)):
        actions = np.full(mdp.n_nonterminal, NULL_ACTION, dtype=int)
        actions[live] = combo
        pi = Policy(actions, kind)
        out.append((pi, float(exact_policy_values(mdp, pi, discount)[root])))
    return out


def crlib_root_value(J: Union[ValueVector, np.ndarray], pitch_counts: Union[Mapping, Sequence[int]]) -> float:
    """Pitch-count-weighted average of the four ``{0,0} x class`` values."""
    values = J.values if isinstance(J, ValueVector) else np.asarray(J)
    if isinstance(pitch_counts, Mapping):
        weights = [int(pitch_counts.get(cls, 0)) for cls in PitchClass]
    else:
        weights = [int(k) for k in pitch_counts]
    total = sum(weights)
    if total <= 0:
        raise EmptyTestData("no pitches to weight the root value by")
    acc = 0.0
    for cls, k in zip(PitchClass, weights):
        if k:
            acc += k * float(values[int(cls) * N_COUNTS])
    return acc / total


def root_value(J: Union[ValueVector, np.ndarray], model_kind, pitch_counts=None) -> float:
    """Expected reward of the whole at-bat: ``J({0,0})``, class-weighted under CRLIB."""
    if ModelKind.parse(model_kind) is ModelKind.CRLIB:
        return crlib_root_value(J, pitch_counts)
    values = J.values if isinstance(J, ValueVector) else np.asarray(J)
    return float(values[0])
