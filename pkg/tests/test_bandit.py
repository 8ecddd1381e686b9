import numpy as np
import pytest
from conftest import play
from hypothesis import given
from hypothesis import strategies as st

from reflectbench.agents.base import ChatMessage
from reflectbench.agents.baselines import WslsAgent
from reflectbench.tasks import bandit
from reflectbench.tasks.bandit import ARMS


def test_reward_probability_reversal():
    assert bandit.reward_probability(0, 0, 20, 1.0, 20) == 1.0
    assert bandit.reward_probability(0, 0, 21, 1.0, 20) == 0.0


def test_rich_arm_reward_rate(rng):
    draws = rng.random(10**6) < bandit.reward_probability(1, 1, 1, 0.8, 20)
    assert draws.mean() == pytest.approx(0.8, abs=0.002)


def test_choice_probability_window():
    assert bandit.estimate_choice_probability([1] * 8).tolist() == [1.0] * 8
    series = bandit.estimate_choice_probability([1] * 5 + [0] * 5)
    np.testing.assert_allclose(series[4:], [1.0, 0.8, 0.6, 0.4, 0.2, 0.0])


@given(st.lists(st.integers(0, 1), min_size=1, max_size=60))
def test_choice_probability_is_trailing_mean(choices):
    series = bandit.estimate_choice_probability(choices)
    for t in range(len(choices)):
        window = choices[max(0, t - 4): t + 1]
        assert series[t] == pytest.approx(sum(window) / len(window))


def test_prlt_closed_forms():
    p, rev = 0.8, 20
    true = bandit.true_probability_series(p, 40, rev)
    assert bandit.score_prlt(true, p, rev) == 100.0
    assert bandit.score_prlt(np.ones(40), p, rev) == pytest.approx(37.5)
    switcher = bandit.estimate_choice_probability([1] * 20 + [0] * 20)
    # transient after the reversal: window means .8 .6 .4 .2 instead of 0
    mae = (36 * 0.2 + 0.6 + 0.4 + 0.2 + 0.0) / 40
    assert bandit.score_prlt(switcher, p, rev) == pytest.approx(100 * (1 - mae / 0.8))
    assert bandit.score_prlt(switcher, p, rev) == pytest.approx(73.75)


def test_constant_rich_arm_agent(make):
    env = make("prlt", seed=3)
    s = play(env, lambda e: ARMS[e.rich])
    assert s.score == pytest.approx(37.5)


def test_wsls_series_tracks_then_decays():
    # WSLS is a two-state chain whose stationary rich-arm share equals p
    rng = np.random.default_rng(8)
    n, trials, p = 10**5, 40, 0.8
    c = rng.integers(2, size=n)
    coded = np.empty((n, trials), dtype=int)
    for t in range(trials):
        coded[:, t] = c
        prob = np.where(c == (1 if t < 20 else 0), p, 1 - p)
        c = np.where(rng.random(n) < prob, c, 1 - c)
    mean = bandit.estimate_choice_probability(coded).mean(axis=0)
    assert mean[10:20] == pytest.approx(0.8, abs=0.02)
    assert mean[30:] == pytest.approx(0.2, abs=0.02)


def test_uniform_at_p1_scores_near_half_estimate(rng):
    coded = rng.integers(2, size=(2000, 40))
    scores = bandit.score_prlt(bandit.estimate_choice_probability(coded), 1.0, 20)
    half = bandit.score_prlt(np.full(40, 0.5), 1.0, 20)
    assert half == pytest.approx(50.0)
    assert abs(scores.mean() - half) < 3


def test_mbt_rewarding_arm():
    assert bandit.mbt_rewarding_arm(0, 1, 2) == 0
    assert bandit.mbt_rewarding_arm(0, 3, 2) == 1


@pytest.mark.parametrize("difficulty", ["easy", "hard"])
def test_mbt_oracle_and_wsls(make, difficulty):
    env = make("mbt", difficulty)
    s = play(env, lambda e: e.oracle_action())
    assert s.score == 100.0 and s.metrics["total_reward"] == env.n_records

    env = make("mbt", difficulty, seed=11)
    agent = WslsAgent("mbt", ARMS)
    agent.reset(np.random.default_rng(0))
    fb = ""
    while not env.done:
        fb = env.step(agent.respond([ChatMessage("user", fb or "go")]))
    assert env.score().score == 0.0


def test_mbt_uniform_mean(make):
    rng = np.random.default_rng(21)
    scores = []
    for k in range(10**4):
        env = make("mbt", seed=k)
        for a in rng.integers(2, size=env.n_records):
            env.mbt_step(int(a))
        scores.append(bandit.score_mbt(env.rewards, env.n)[0])
    assert np.mean(scores) == pytest.approx(50, abs=0.7)


def test_mbt_grid_reproducible(make):
    grids = [play(make("mbt", seed=4), lambda e: ARMS[0]).profile["reward_grid"]
             for _ in range(2)]
    assert grids[0] == grids[1]


def test_mbt_block_validation():
    with pytest.raises(ValueError):
        bandit.score_mbt([1, 0, 1], 2)


@given(st.lists(st.integers(0, 1), min_size=40, max_size=40), st.integers(0, 2**32))
def test_prlt_score_symmetric_under_arm_relabelling(arms, seed):
    from reflectbench.config import preset
    from reflectbench.tasks import make_env

    scores = []
    for flip in (0, 1):
        env = make_env(preset("prlt"), seed)
        env.rich ^= flip
        for a in arms:
            env.prlt_step(a ^ flip)
        scores.append(env.score().score)
    assert scores[0] == scores[1]


@given(st.lists(st.integers(0, 1), min_size=40, max_size=40))
def test_mbt_grid_rows_have_n_cells(arms):
    from reflectbench.config import preset
    from reflectbench.tasks import make_env

    env = make_env(preset("mbt"), 0)
    for a in arms:
        env.mbt_step(a)
    _, grid = bandit.score_mbt(env.rewards, env.n)
    assert len(grid) == 20 and all(len(row) == 2 for row in grid)
