"""Two-armed bandits: probabilistic reversal learning (PRLT) and the
meta-bandit with deterministic rewards reversing every n trials (MBT)."""

from __future__ import annotations

import numpy as np

from reflectbench.tasks.base import Environment, TaskScore

ARMS = ("left arm", "right arm")

PRLT_SYSTEM_PROMPT = (
    "You are playing a two-arm bandit game. Each time you need to choose between the right "
    "arm and the left arm. You will receive feedback (0 or 1) based on your choice. Your goal "
    "is to maximize the total reward. Keep performing the task until the end of the test."
)

MBT_SYSTEM_PROMPT = (
    "You are playing a two-arm bandit game. Each time, there is one rewarding arm, and you "
    "need to choose between the right arm and the left arm. You will receive feedback (0 or 1) "
    "based on your choice. Your goal is to maximize the total reward. Respond with your choice "
    "(right arm or left arm). Keep performing the task until the end of the test."
)

CHOICE_PROMPT = "Choose an arm: left arm or right arm."


def reward_probability(arm: int, rich: int, trial: int, p: float, reversal_at: int) -> float:
    """P(reward) for ``arm`` at 1-based ``trial``; arms swap after ``reversal_at``."""
    good = rich if trial <= reversal_at else 1 - rich
    return p if arm == good else 1.0 - p


def estimate_choice_probability(choices, window: int = 5) -> np.ndarray:
    """Trailing moving average of 0/1 choices, window min(window, t).

    Works on the last axis, so a batch of sessions can be passed at once.
    """
    c = np.asarray(choices, dtype=float)
    t = c.shape[-1]
    pad = np.zeros(c.shape[:-1] + (1,))
    csum = np.concatenate([pad, np.cumsum(c, axis=-1)], axis=-1)
    idx = np.arange(1, t + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[..., idx] - csum[..., lo]) / (idx - lo)


def true_probability_series(p: float, trials: int, reversal_at: int) -> np.ndarray:
    return np.where(np.arange(1, trials + 1) <= reversal_at, p, 1.0 - p)


def score_prlt(series, p: float, reversal_at: int):
    """100 * (1 - MAE / max(p, 1-p)) against the initially-rich arm's truth."""
    est = np.asarray(series, dtype=float)
    true = true_probability_series(p, est.shape[-1], reversal_at)
    mae = np.abs(est - true).mean(axis=-1)
    out = np.clip(100.0 * (1.0 - mae / max(p, 1.0 - p)), 0.0, 100.0)
    return float(out) if out.ndim == 0 else out


def matching_choice(history, target: float, window: int = 5) -> int:
    """Coded choice (1 = initially-rich arm) that brings the trailing
    window average closest to ``target``; ties go to the likelier arm."""
    past = list(history)[-(window - 1):] if window > 1 else []
    errs = [abs((sum(past) + c) / (len(past) + 1) - target) for c in (0, 1)]
    if abs(errs[0] - errs[1]) < 1e-12:
        return int(target >= 0.5)
    return int(errs[1] < errs[0])


def mbt_rewarding_arm(first: int, trial: int, n: int) -> int:
    return first ^ (((trial - 1) // n) % 2)


def score_mbt(rewards, n: int) -> tuple[float, list[list[int]]]:
    """Share of reversal trials (first trial of blocks 2..) that were rewarded.

    This anticipation score is our own quantification of MBT; the task is
    otherwise read qualitatively from the reward grid.
    """
    r = np.asarray(rewards, dtype=int)
    if r.size % n:
        raise ValueError(f"{r.size} rewards do not fill blocks of {n}")
    grid = r.reshape(-1, n)
    if grid.shape[0] < 2:
        raise ValueError("need at least two blocks")
    return 100.0 * grid[1:, 0].mean(), grid.tolist()


class PrltEnv(Environment):
    task_id = "prlt"
    system_prompt = PRLT_SYSTEM_PROMPT
    options = ARMS

    def __init__(self, config, seed):
        super().__init__(config, seed)
        self.p = float(config["p"])
        self.trials = int(config["trials"])
        self.reversal_at = self.trials // 2
        self.rich = int(self.rng.integers(2))
        self.choices: list[int] = []
        self.rewards: list[int] = []

    def observation(self):
        return CHOICE_PROMPT

    def prlt_step(self, arm: int) -> int:
        prob = reward_probability(arm, self.rich, len(self.choices) + 1, self.p, self.reversal_at)
        reward = int(self.rng.random() < prob)
        self.choices.append(arm)
        self.rewards.append(reward)
        return reward

    def _step(self, action, raw):
        return f"Reward: {self.prlt_step(ARMS.index(action))}"

    def oracle_action(self):
        # the score rewards matching the true probability, not maximizing reward
        t = len(self.choices) + 1
        target = self.p if t <= self.reversal_at else 1.0 - self.p
        coded = matching_choice([int(c == self.rich) for c in self.choices], target)
        return ARMS[self.rich if coded else 1 - self.rich]

    def score(self):
        coded = [int(c == self.rich) for c in self.choices]
        series = estimate_choice_probability(coded)
        return TaskScore(
            self.task_id,
            score_prlt(series, self.p, self.reversal_at),
            metrics={"total_reward": int(sum(self.rewards)),
                     "initially_rich_arm": ARMS[self.rich]},
            profile={"choice_probability": series.round(6).tolist(),
                     "rich_arm_choices": coded,
                     "rewards": list(self.rewards)},
        )

    def hidden_values(self):
        return [f"{self.p:g}", f"{1 - self.p:g}", "probabilit"]


class MbtEnv(Environment):
    task_id = "mbt"
    system_prompt = MBT_SYSTEM_PROMPT
    options = ARMS

    def __init__(self, config, seed):
        super().__init__(config, seed)
        self.n = int(config["n"])
        self.blocks = int(config["blocks"])
        self.first = int(self.rng.integers(2))
        self.choices: list[int] = []
        self.rewards: list[int] = []

    def observation(self):
        return CHOICE_PROMPT

    def mbt_step(self, arm: int) -> int:
        trial = len(self.choices) + 1
        reward = int(arm == mbt_rewarding_arm(self.first, trial, self.n))
        self.choices.append(arm)
        self.rewards.append(reward)
        return reward

    def _step(self, action, raw):
        return f"Reward: {self.mbt_step(ARMS.index(action))}"

    def oracle_action(self):
        return ARMS[mbt_rewarding_arm(self.first, len(self.choices) + 1, self.n)]

    def score(self):
        anticipation, grid = score_mbt(self.rewards, self.n)
        return TaskScore(
            self.task_id,
            anticipation,
            metrics={"total_reward": int(sum(self.rewards)), "quantification": "anticipation"},
            profile={"reward_grid": grid},
        )

    def hidden_values(self):
        return ["block", "revers"]
