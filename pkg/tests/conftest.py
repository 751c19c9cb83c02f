import numpy as np
import pytest

from atbat_mdp.ingest import AtBatRecord, PitchRecord, TrajectoryParams
from atbat_mdp.mdp import Policy, TabularMDP
from atbat_mdp.model import TransitionModel
from atbat_mdp.states import (
    BattingAction, Count, PitchClass, PitchResult, TerminalOutcome, nonterminal_index, terminal_index,
)
from atbat_mdp.synthgen import default_templates

GRID = 5
A_POS, A_PRIME, B_POS, B_PRIME = (0, 1), (4, 1), (0, 3), (2, 3)
MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))


def gridworld_mdp() -> TabularMDP:
    """5x5 grid with the equiprobable random policy folded into one action.

    The task is continuing, so the single terminal column is never reached;
    it is solved with discount 0.9.
    """
    n = GRID * GRID
    P = np.zeros((n, 1, n + 1))
    R = np.zeros((n, 1, n + 1))
    expected = np.zeros(n)
    for r in range(GRID):
        for c in range(GRID):
            s = r * GRID + c
            for dr, dc in MOVES:
                if (r, c) == A_POS:
                    nxt, rew = A_PRIME, 10.0
                elif (r, c) == B_POS:
                    nxt, rew = B_PRIME, 5.0
                else:
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < GRID and 0 <= cc < GRID:
                        nxt, rew = (rr, cc), 0.0
                    else:
                        nxt, rew = (r, c), -1.0
                P[s, 0, nxt[0] * GRID + nxt[1]] += 0.25
                expected[s] += 0.25 * rew
    # rewards depend only on the state here, so attach them to every successor
    R[:, 0, :] = expected[:, None]
    return TabularMDP(P, R)


def gridworld_oracle(gamma: float = 0.9) -> np.ndarray:
    mdp = gridworld_mdp()
    n = mdp.n_nonterminal
    P = mdp.transitions[:, 0, :n]
    r = mdp.expected_rewards()[:, 0]
    return np.linalg.solve(np.eye(n) - gamma * P, r)


def random_episodic_mdp(rng: np.random.Generator, n_nt: int = 6, n_terminal: int = 2, n_actions: int = 2,
                        absorb: float = 0.1) -> TabularMDP:
    n = n_nt + n_terminal
    P = rng.random((n_nt, n_actions, n))
    P /= P.sum(axis=-1, keepdims=True)
    # guarantee at least ``absorb`` mass on terminals in every row
    term = P[..., n_nt:].sum(axis=-1)
    short = term < absorb
    if short.any():
        P[..., :n_nt] *= np.where(short, (1 - absorb) / (1 - term), 1.0)[..., None]
        P[..., n_nt:] *= np.where(short, absorb / term, 1.0)[..., None]
    R = rng.uniform(-1, 5, size=(n_nt, n_actions, n))
    return TabularMDP(P, R)


def pitch(seq, balls, strikes, result, action="swing", ptype="FF", traj=None):
    act = BattingAction.SWING if action == "swing" else BattingAction.STAND
    return PitchRecord(seq, balls, strikes, ptype, act, result, traj)


def atbat(pitches, outcome, ab_id="ab1", pitcher="P", batter="B", season=2009):
    return AtBatRecord(ab_id, pitcher, batter, season, list(pitches), TerminalOutcome(outcome))


def walk_atbat(**kwargs):
    return atbat([pitch(k + 1, k, 0, PitchResult.ball(), "stand") for k in range(4)], "W", **kwargs)


def close_templates(delta: float = 0.05) -> dict:
    """Four classes sharing one flight path, offset by ``delta`` feet at release."""
    base = default_templates()[PitchClass.FASTBALL]
    return {
        cls: TrajectoryParams(
            tuple(np.add(base.start_position, [delta * k, 0.0, delta * (k % 2)]).tolist()),
            base.initial_velocity, base.acceleration, base.flight_time,
        )
        for k, cls in enumerate(PitchClass)
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


TRAJ = TrajectoryParams((-1.5, 50.0, 6.0), (5.0, -135.0, -6.0), (-8.0, 28.0, -14.0), 0.4)


class ConstantClassifier:
    """Always predicts one class; isolates the sampling logic from the SVM."""

    def __init__(self, cls=PitchClass.FASTBALL):
        self.cls = int(cls)

    def predict(self, X):
        return np.full(len(X), self.cls)


def swing_policy():
    return Policy(np.ones(48, dtype=int), "crlib")


def model_with(rows, share=0.0):
    """CRLIB model; ``rows`` maps (count, action) to {outcome or Count: prob} for every class."""
    m = TransitionModel.empty("crlib")
    for (count, action), row in rows.items():
        for cls in PitchClass:
            i = nonterminal_index(count, cls, "crlib")
            for succ, p in row.items():
                j = (nonterminal_index(succ, cls, "crlib") if isinstance(succ, Count)
                     else terminal_index(TerminalOutcome(succ), "crlib"))
                m.probs[i, action, j] = p
            m.available[i, action] = True
            m.support_counts[i, action] = 100
            m.strikeout_share[i, action] = share
    m.pitch_class_counts[:] = 1
    return m


def swings(n, outcome="S"):
    pitches = [pitch(k + 1, 0, k, PitchResult.foul() if k < n - 1 else PitchResult.in_play(outcome), traj=TRAJ)
               for k in range(n)]
    return atbat(pitches, outcome)


def write_season(path, atbats):
    from atbat_mdp.ingest import dumps_atbat

    path.write_text("".join(dumps_atbat(ab) + "\n" for ab in atbats), encoding="utf-8")
    return path


def exploit_scenario(tmp_path):
    """Two pitchers: swinging always wins against A, standing against the dominant B."""
    from atbat_mdp.synthgen import gapped_spec, generate_season

    a = gapped_spec("A", 1, favoured=[1] * 12)
    b = gapped_spec("B", 2, favoured=[0] * 12)
    train = (generate_season(a, 300, 0.5, seed=1, season=2008, with_trajectories=False)
             + generate_season(b, 900, 0.5, seed=2, season=2008, with_trajectories=False))
    test = (generate_season(a, 300, 0.5, seed=3, season=2009, with_trajectories=False)
            + generate_season(b, 300, 0.5, seed=4, season=2009, with_trajectories=False))
    return write_season(tmp_path / "train.jsonl", train), write_season(tmp_path / "test.jsonl", test)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion check")
    config._acceptance_lines = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    verdict = "PASS" if report.passed else "FAIL"
    item.config._acceptance_lines.append((number, f"criterion {number:2d} {verdict}  {title} ({report.duration:.2f} s)"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(getattr(config, "_acceptance_lines", []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in lines:
            terminalreporter.write_line(line)
