import math

import numpy as np
import pytest

from atbat_mdp.estimation import (
    build_general_pool,
    build_general_pools,
    compute_quota,
    estimate_transitions,
    general_policies,
    general_pool_values,
    general_strategy_performance,
    pool_seeds,
)
from atbat_mdp.exceptions import EmptyInput, PoolError
from atbat_mdp.model import TransitionModel
from atbat_mdp.states import Count, PitchResult, TerminalOutcome, nonterminal_index, terminal_index
from atbat_mdp.synthgen import generate_season, implied_transition_model, random_spec

from conftest import atbat, pitch


def first_pitches(season, n):
    out, total = [], 0
    for ab in season:
        if total >= n:
            break
        out.append(ab)
        total += ab.n_pitches
    assert total >= n
    return out


def test_empty_input_gives_all_null_model():
    m = estimate_transitions([], "srlib")
    assert not m.available.any()


def test_single_observation():
    m = estimate_transitions([atbat([pitch(1, 0, 0, PitchResult.in_play("S"))], "S")], "srlib")
    assert m.available.sum() == 1
    assert m.probs[0, 1, terminal_index(TerminalOutcome.S, "srlib")] == 1.0
    assert m.support_counts[0, 1] == 1
    np.testing.assert_array_equal(m.pitch_class_counts, [1, 0, 0, 0])


def test_strikeout_share():
    so = atbat([pitch(k + 1, 0, k, PitchResult.strike()) for k in range(3)], "O", ab_id="so")
    weak = atbat([pitch(1, 0, 0, PitchResult.strike()), pitch(2, 0, 1, PitchResult.strike()),
                  pitch(3, 0, 2, PitchResult.in_play("O"))], "O", ab_id="weak")
    m = estimate_transitions([so, weak], "srlib")
    i = nonterminal_index(Count(0, 2), None, "srlib")
    assert m.probs[i, 1, terminal_index(TerminalOutcome.O, "srlib")] == 1.0
    assert m.strikeout_share[i, 1] == 0.5


def test_estimates_within_three_sigma():
    spec = random_spec("R", 5)
    season = first_pitches(generate_season(spec, 6000, 0.5, seed=21), 15000)
    for kind in ("srlib", "crlib"):
        est = estimate_transitions(season, kind)
        truth = implied_transition_model(spec, kind)
        mask = est.support_counts >= 100
        p = truth.probs[mask]
        n = est.support_counts[mask][:, None]
        outside = np.abs(est.probs[mask] - p) > 3 * np.sqrt(p * (1 - p) / n)
        assert mask.sum() > 0
        assert outside.mean() < 0.01


def test_model_round_trip(tmp_path):
    m = estimate_transitions(generate_season(random_spec("R", 1), 200, 0.5, seed=1), "crlib")
    path = tmp_path / "m.json"
    m.save(path)
    back = TransitionModel.load(path)
    np.testing.assert_array_equal(back.probs, m.probs)
    np.testing.assert_array_equal(back.available, m.available)
    np.testing.assert_array_equal(back.pitch_class_counts, m.pitch_class_counts)
    assert m.to_csv().splitlines()[0].startswith("state,action,count,")


@pytest.mark.parametrize("args,expected", [
    ((3319, 80879, 3235.16), 133),
    ((0, 80879, 3235.16), 0),
    ((80879, 80879, 3235.16), 3236),
])
def test_compute_quota(args, expected):
    assert compute_quota(*args) == expected
    assert compute_quota(*args, exact=True) == expected


def test_compute_quota_share_rounding():
    # the share is rounded to five places before scaling
    share = round(3319 / 80879, 5)
    assert share == pytest.approx(0.04104)
    assert math.ceil(share * 3235.16) == 133
    with pytest.raises(ValueError):
        compute_quota(5, 4, 10.0)


def _population(n_pitchers, n_atbats, seed=0):
    return {
        f"P{k:02d}": generate_season(random_spec(f"P{k:02d}", seed), n_atbats, 0.5, seed=seed, with_trajectories=False)
        for k in range(n_pitchers)
    }


def test_single_pitcher_pool():
    pop = _population(1, 120)
    pool = build_general_pool(pop, seed=3)
    quota = pool.quotas["P00"].quota
    taken = [ab.n_pitches for ab in pool.at_bats]
    assert sum(taken) >= quota and sum(taken[:-1]) < quota
    assert len({ab.at_bat_id for ab in pool.at_bats}) == len(pool.at_bats)


def test_equal_pitchers_contribute_equally():
    pop = {pid: abs_ for pid, abs_ in _population(25, 60, seed=4).items()}
    pool = build_general_pool(pop, seed=8)
    target = pool.target_pool_size
    longest = max(ab.n_pitches for abs_ in pop.values() for ab in abs_)
    for pid, n in pool.per_pitcher_pitch_counts.items():
        assert pool.quotas[pid].quota <= n < pool.quotas[pid].quota + longest
    assert pool.n_pitches == pytest.approx(target, rel=0.5)


def test_pools_are_deterministic():
    pop = _population(3, 80)
    a = build_general_pools(pop, 11, 4)
    b = build_general_pools(pop, 11, 4)
    assert [[x.at_bat_id for x in p.at_bats] for p in a] == [[x.at_bat_id for x in p.at_bats] for p in b]
    assert pool_seeds(11, 4) == [p.seed for p in a]
    assert len(set(pool_seeds(11, 10))) == 10


def test_empty_population():
    with pytest.raises(EmptyInput):
        build_general_pool({"A": []}, 1)


def test_general_performance_is_mean_of_pool_values():
    pop = _population(3, 150)
    pools = build_general_pools(pop, 5, 10)
    test_model = estimate_transitions(pop["P01"], "srlib")
    values = general_pool_values(pools, test_model)
    assert general_strategy_performance(pools, test_model) == pytest.approx(sum(values) / 10, abs=1e-12)
    pols = general_policies(pools, "srlib")
    assert general_pool_values(pols, test_model) == values


def test_identical_pools_give_single_value():
    pop = _population(2, 100)
    pool = build_general_pool(pop, 1)
    test_model = estimate_transitions(pop["P00"], "srlib")
    single = general_pool_values([pool], test_model)[0]
    assert general_strategy_performance([pool] * 10, test_model) == pytest.approx(single, abs=1e-15)


def test_indifferent_test_model():
    # every row goes straight to O, so every policy is worth 0
    m = TransitionModel.empty("srlib")
    m.probs[:, :, terminal_index(TerminalOutcome.O, "srlib")] = 1.0
    m.available[:] = True
    pools = build_general_pools(_population(2, 60), 2, 3)
    assert general_strategy_performance(pools, m) == 0.0


def test_pool_error_carries_index():
    m = TransitionModel.empty("srlib")
    m.probs[0, 0, 0] = 0.5
    m.available[0, 0] = True
    pools = build_general_pools(_population(2, 40), 2, 2)
    with pytest.raises(PoolError) as err:
        general_pool_values(pools, m)
    assert err.value.pool_index == 0
