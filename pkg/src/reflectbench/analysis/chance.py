"""Chance-level thresholds by Monte Carlo.

Sessions are simulated in vectorized batches: the per-task dynamics are
re-expressed over arrays, and every batch is scored by the same scoring
functions the environments use. Batches draw from their own derived seeds
and are reduced in index order, so the estimate does not depend on how
many workers ran them.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from reflectbench.config import TaskConfig
from reflectbench.rng import derive_seed, stream
from reflectbench.tasks import dcigt, nback, wcst, wpt
from reflectbench.tasks.bandit import (
    estimate_choice_probability,
    matching_choice,
    score_prlt,
)

CHANCE_TASKS = ("wpt", "wcst", "nback", "dcigt", "prlt")

POLICIES: dict[str, tuple[str, ...]] = {
    "wpt": ("uniform", "oracle"),
    "wcst": ("uniform", "random_dimension", "oracle"),
    "nback": ("uniform", "all_no", "oracle"),
    "dcigt": ("uniform", "wsls", "oracle"),
    "prlt": ("uniform", "wsls", "oracle"),
}

# Policies that count as "random" when deciding whether a score beats chance.
RANDOM_POLICIES: dict[str, tuple[str, ...]] = {
    "wpt": ("uniform",),
    "wcst": ("uniform", "random_dimension"),
    "nback": ("uniform",),
    "dcigt": ("uniform",),
    "prlt": ("uniform",),
}

MIN_SIMS = 1000
CHUNK = 100_000


class UnsupportedTask(ValueError):
    pass


@dataclass
class ChanceEstimate:
    task_id: str
    policy: str
    n_sims: int
    mean: float
    p95: float
    std: float
    seed: int
    difficulty: str = "easy"

    @property
    def stderr(self) -> float:
        return self.std / np.sqrt(self.n_sims)

    def to_dict(self) -> dict:
        return asdict(self)


# -- batch simulators: (config, n, rng) -> scores of shape (n,) ---------------

def _sim_wpt(cfg: TaskConfig, policy: str, n: int, rng: np.random.Generator) -> np.ndarray:
    p = float(cfg["p"])
    truth = wpt.true_matrices(p)
    trials = int(cfg["trials"])
    today = rng.integers(2, size=n)
    tallies = np.zeros(n * 8, dtype=np.int64)
    base = np.arange(n) * 8
    for _ in range(trials):
        sensor = rng.integers(2, size=n)
        if policy == "uniform":
            pred = rng.integers(2, size=n)
        else:
            pred = truth[sensor, today].argmax(axis=-1)
        tallies += np.bincount(base + sensor * 4 + today * 2 + pred, minlength=n * 8)
        stay = truth[sensor, today, today]
        today = np.where(rng.random(n) < stay, today, 1 - today)
    t = tallies.reshape(n, 2, 2, 2).astype(float)
    counts = t.sum(axis=-1, keepdims=True)
    est = np.where(counts > 0, t / np.maximum(counts, 1), 0.5)
    return wpt.score_wpt(est, truth)


def _wcst_tables(desk):
    targets = wcst.valid_targets(desk)
    answer = np.array([[desk.index(wcst.correct_card(t, desk, r)) for r in wcst.RULES]
                       for t in targets])
    return answer  # [target, rule] -> desk index


def _sim_wcst(cfg, policy, n, rng):
    x = int(cfg["x"])
    desk = wcst.PAPER_DESK if cfg.parameters.get("paper_desk") else wcst.DESK
    answer = _wcst_tables(desk)
    rules = np.array([wcst.RULES.index(wcst.rule_at(t, x)) for t in range(1, x + 1)])
    target = rng.integers(len(answer), size=(n, x))
    right = answer[target, rules]
    if policy == "uniform":
        choice = rng.integers(4, size=(n, x))
    elif policy == "random_dimension":
        dim = rng.integers(3, size=(n, x))
        choice = np.take_along_axis(answer[target], dim[..., None], axis=-1)[..., 0]
    else:
        choice = right
    return 100.0 * (choice == right).mean(axis=1)


def _sim_nback(cfg, policy, n, rng):
    p = cfg.parameters
    seq = nback.default_sequence(int(p["n"]), int(p["length"]), int(p["match_count"]),
                                 int(p.get("sequence_seed", 2024)))
    k = seq.n
    expected = np.array([{"Yes": 0, "No": 1, "Not Available": 2}[e] for e in seq.expected])
    length = len(expected)
    if policy == "uniform":
        answers = rng.integers(2, size=(n, length))
    elif policy == "all_no":
        answers = np.ones((n, length), dtype=int)
    else:
        answers = np.broadcast_to(expected, (n, length))
    hits = answers == expected
    if p.get("score_na_trials"):
        return 100.0 * hits.mean(axis=1)
    return 100.0 * hits[:, k:].sum(axis=1) / (length - k)


def _sim_dcigt(cfg, policy, n, rng):
    p_loss = np.array(cfg["p_loss"], dtype=float)
    trials = int(cfg["trials"])
    gains, losses = np.array(dcigt.GAINS), np.array(dcigt.LOSSES)
    ev = dcigt.expected_values(p_loss)
    order = np.argsort(-ev, kind="stable")
    stayed = np.zeros((n, trials), dtype=bool)
    revealed_loss = np.zeros((n, trials), dtype=bool)
    balance = np.full(n, dcigt.START_BALANCE, dtype=np.int64)
    prev = rng.integers(4, size=n)
    prev_lost = np.zeros(n, dtype=bool)
    rows = np.arange(n)
    for t in range(trials):
        if policy == "uniform":
            first = rng.integers(4, size=n)
        elif policy == "wsls":
            # keep the last deck unless it just cost money
            other = (prev + rng.integers(1, 4, size=n)) % 4
            first = prev if t == 0 else np.where(prev_lost, other, prev)
        else:
            first = np.full(n, order[0])
        lost1 = rng.random(n) < p_loss[first]
        if policy == "uniform":
            final = rng.integers(4, size=n)
        elif policy == "wsls":
            other = (first + rng.integers(1, 4, size=n)) % 4
            final = np.where(lost1, other, first)
        else:
            final = np.where(lost1, order[1], first)
        fresh = rng.random(n) < p_loss[final]
        stay = final == first
        lost = np.where(stay, lost1, fresh)
        balance += gains[final] - np.where(lost, losses[final], 0)
        stayed[rows, t] = stay
        revealed_loss[rows, t] = lost1
        prev, prev_lost = final, lost
    _, _, score = dcigt.dcigt_components(stayed, revealed_loss, balance, p_loss,
                                         float(cfg.parameters.get("short_weight", 0.5)))
    return score


def _sim_prlt(cfg, policy, n, rng):
    p = float(cfg["p"])
    trials = int(cfg["trials"])
    rev = trials // 2
    # coded space: 1 = the initially-rich arm
    if policy == "uniform":
        coded = rng.integers(2, size=(n, trials))
    elif policy == "oracle":
        hist: list[int] = []
        for t in range(1, trials + 1):
            hist.append(matching_choice(hist, p if t <= rev else 1.0 - p))
        coded = np.broadcast_to(np.array(hist), (n, trials))
    else:
        coded = np.empty((n, trials), dtype=int)
        c = rng.integers(2, size=n)
        for t in range(trials):
            coded[:, t] = c
            good = 1 if t + 1 <= rev else 0
            prob = np.where(c == good, p, 1.0 - p)
            reward = rng.random(n) < prob
            c = np.where(reward, c, 1 - c)
    return score_prlt(estimate_choice_probability(coded), p, rev)


_SIMULATORS = {
    "wpt": _sim_wpt,
    "wcst": _sim_wcst,
    "nback": _sim_nback,
    "dcigt": _sim_dcigt,
    "prlt": _sim_prlt,
}


def simulate_scores(config: TaskConfig, policy: str, n: int, seed: int) -> np.ndarray:
    """Scores of ``n`` simulated sessions under ``policy``."""
    task = config.task_id
    if task not in _SIMULATORS:
        raise UnsupportedTask(
            f"{task} has no chance level (only {', '.join(CHANCE_TASKS)} are parameterized "
            "and scored quantitatively)")
    if policy not in POLICIES[task]:
        raise ValueError(f"policy {policy!r} not defined for {task}; choose from {POLICIES[task]}")
    return np.asarray(_SIMULATORS[task](config, policy, n, stream(seed, "chance")), dtype=float)


def _chunk(args):
    config_dict, policy, n, seed = args
    return simulate_scores(TaskConfig.from_dict(config_dict), policy, n, seed)


def estimate_chance(config: TaskConfig, policy: str = "uniform", n_sims: int = 1_000_000,
                    seed: int = 0, workers: int = 1, chunk: int = CHUNK) -> ChanceEstimate:
    """Mean and empirical 95th percentile of ``policy``'s score distribution."""
    if config.task_id not in CHANCE_TASKS:
        raise UnsupportedTask(
            f"{config.task_id} has no chance level (only {', '.join(CHANCE_TASKS)})")
    if n_sims < MIN_SIMS:
        raise ValueError(f"n_sims must be at least {MIN_SIMS}")
    sizes = [min(chunk, n_sims - i) for i in range(0, n_sims, chunk)]
    jobs = [(config.to_dict(), policy, size, derive_seed(seed, config.task_id, policy, i))
            for i, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_chunk, jobs))
    else:
        parts = [_chunk(j) for j in jobs]
    scores = np.concatenate(parts)
    return ChanceEstimate(
        task_id=config.task_id,
        policy=policy,
        n_sims=n_sims,
        mean=float(scores.mean()),
        p95=float(np.percentile(scores, 95)),
        std=float(scores.std(ddof=1)),
        seed=seed,
        difficulty=config.difficulty,
    )
