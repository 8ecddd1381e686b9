import numpy as np
import pytest

from reflectbench.agents import make_baseline
from reflectbench.analysis.chance import (
    CHANCE_TASKS,
    MIN_SIMS,
    POLICIES,
    UnsupportedTask,
    estimate_chance,
    simulate_scores,
)
from reflectbench.config import preset
from reflectbench.rng import derive_seed
from reflectbench.session import run_session
from reflectbench.tasks import make_env

AGENT_FOR = {"uniform": "random", "random_dimension": "random_dimension",
             "wsls": "wsls", "oracle": "oracle", "all_no": "all_no"}
CASES = [(t, p) for t in CHANCE_TASKS for p in POLICIES[t]]


@pytest.mark.parametrize("task,policy", CASES)
def test_simulator_agrees_with_real_environment(task, policy):
    cfg = preset(task)
    n = 1500
    real = []
    for k in range(n):
        env = make_env(cfg, derive_seed(99, task, k))
        real.append(run_session(env, make_baseline(AGENT_FOR[policy], env), "direct")[1].score)
    real = np.array(real)
    sim = simulate_scores(cfg, policy, 20000, 5)
    se = np.sqrt(real.var() / n + sim.var() / sim.size)
    assert abs(real.mean() - sim.mean()) <= max(4 * se, 1e-9)


@pytest.mark.parametrize("difficulty", ["easy", "hard"])
@pytest.mark.parametrize("task", CHANCE_TASKS)
def test_oracle_beats_uniform(task, difficulty):
    cfg = preset(task, difficulty)
    oracle = estimate_chance(cfg, "oracle", 10**4, 1).mean
    uniform = estimate_chance(cfg, "uniform", 10**4, 1).mean
    assert oracle >= uniform


def test_nback_uniform_is_binomial():
    est = estimate_chance(preset("nback"), "uniform", 10**6, 2)
    assert est.mean == pytest.approx(50.0, abs=0.05)
    assert estimate_chance(preset("nback"), "all_no", 10**4, 2).mean == pytest.approx(700 / 12)


def test_wpt_uniform_near_half_estimate():
    assert estimate_chance(preset("wpt"), "uniform", 10**5, 3).mean == pytest.approx(55.56, abs=0.1)


def test_wcst_policies():
    cfg = preset("wcst")
    assert estimate_chance(cfg, "uniform", 10**4, 0).mean == pytest.approx(25.0, abs=0.5)
    assert estimate_chance(cfg, "random_dimension", 10**5, 0).mean == pytest.approx(33.3, abs=0.5)


def test_prlt_deterministic_spread_at_p1():
    cfg = preset("prlt", p=1.0)
    est = estimate_chance(cfg, "uniform", 10**4, 0)
    from reflectbench.tasks.bandit import score_prlt

    assert score_prlt(np.full(40, 0.5), 1.0, 20) == 50.0
    assert est.mean == pytest.approx(50.0, abs=1.0)


def test_parallel_equals_sequential():
    cfg = preset("prlt")
    a = estimate_chance(cfg, "uniform", 3000, 4, workers=1, chunk=1000)
    b = estimate_chance(cfg, "uniform", 3000, 4, workers=2, chunk=1000)
    assert a == b


def test_seeded_estimates_are_reproducible():
    cfg = preset("dcigt")
    assert estimate_chance(cfg, "uniform", 2000, 1) == estimate_chance(cfg, "uniform", 2000, 1)
    assert estimate_chance(cfg, "uniform", 2000, 1) != estimate_chance(cfg, "uniform", 2000, 2)


@pytest.mark.parametrize("task,policy", CASES)
def test_doubling_sims_is_stable(task, policy):
    cfg = preset(task)
    a = estimate_chance(cfg, policy, 10**4, 11)
    b = estimate_chance(cfg, policy, 2 * 10**4, 12)
    assert abs(a.mean - b.mean) <= 3 * max(a.stderr, 1e-12) + 1e-9


def test_unsupported_and_invalid():
    for task in ("oddball", "mbt"):
        with pytest.raises(UnsupportedTask):
            estimate_chance(preset(task), "uniform", 10**4)
    with pytest.raises(ValueError):
        estimate_chance(preset("wpt"), "uniform", MIN_SIMS - 1)
    with pytest.raises(ValueError):
        estimate_chance(preset("wpt"), "random_dimension", 10**4)
