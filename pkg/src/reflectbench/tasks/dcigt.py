"""Double-choice Iowa gambling task.

Each trial is two recorded steps. The first choice reveals a sampled
outcome; the second choice either keeps it (stay) or replaces it with a
fresh draw from the newly chosen deck (switch). Only the second choice's
outcome moves the balance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from reflectbench.tasks.base import Environment, TaskScore

DECKS = ("AAA", "BBB", "CCC", "DDD")
GAINS = (100, 100, 50, 50)
LOSSES = (260, 1250, 50, 200)
START_BALANCE = 2000

SWITCH_LABELS = ("insist_gain", "insist_risk", "unnecessary_switch", "loss_avoiding_switch")

SYSTEM_PROMPT = (
    "You are participating in an interesting game. There are four decks of cards in front "
    "of you, labeled 'AAA', 'BBB', 'CCC', and 'DDD'. You start with $2000 in your account. "
    "Your goal is to maximize your account assets by making a series of choices from these "
    "decks. For each trial: 1. Choose one deck ('AAA', 'BBB', 'CCC', or 'DDD'). 2. You will "
    "receive feedback on the outcome of your choice, including any gains and losses. "
    "3. After receiving the feedback, you have one opportunity to reconsider your initial "
    "decision; you can either stick with your original choice or make a new choice. 4. Your "
    "final choice would determine your actual gain or loss for the trial. Respond with your "
    "deck choice (AAA, BBB, CCC, or DDD) for each choice. keep making choices until "
    "instructed to stop."
)


@dataclass(frozen=True)
class DeckSpec:
    label: str
    gain: int
    loss: int
    p_loss: float

    @property
    def expected_value(self) -> float:
        return self.gain - self.loss * self.p_loss


def deck_specs(p_loss) -> tuple[DeckSpec, ...]:
    return tuple(DeckSpec(*args) for args in zip(DECKS, GAINS, LOSSES, map(float, p_loss)))


def expected_values(p_loss) -> np.ndarray:
    return np.array([d.expected_value for d in deck_specs(p_loss)])


def balance_anchors(p_loss, trials: int) -> tuple[float, float]:
    """Expected final balances of the worst and best constant stay policies."""
    ev = expected_values(p_loss)
    return START_BALANCE + trials * ev.min(), START_BALANCE + trials * ev.max()


def classify_switch(revealed_loss: bool, stayed: bool) -> str:
    if stayed:
        return "insist_risk" if revealed_loss else "insist_gain"
    return "loss_avoiding_switch" if revealed_loss else "unnecessary_switch"


def sample_outcome(deck: int, p_loss, rng: np.random.Generator) -> tuple[int, int]:
    loss = LOSSES[deck] if rng.random() < p_loss[deck] else 0
    return GAINS[deck], loss


def dcigt_trial(first: int, final: int, p_loss, rng: np.random.Generator) -> dict:
    """Play one trial with both choices fixed in advance."""
    revealed = sample_outcome(first, p_loss, rng)
    realized = revealed if final == first else sample_outcome(final, p_loss, rng)
    return {
        "first": first,
        "revealed": revealed,
        "final": final,
        "realized": realized,
        "net": realized[0] - realized[1],
    }


def dcigt_components(stayed, revealed_loss, final_balance, p_loss, short_weight: float = 0.5):
    """Short-term, long-term and composite scores.

    ``stayed`` and ``revealed_loss`` are boolean arrays over trials on the
    last axis; ``final_balance`` has the matching batch shape.
    """
    stayed = np.asarray(stayed, dtype=bool)
    revealed_loss = np.asarray(revealed_loss, dtype=bool)
    n = stayed.shape[-1]
    good = (stayed & ~revealed_loss) | (~stayed & revealed_loss)
    short = 100.0 * good.sum(axis=-1) / n
    worst, best = balance_anchors(p_loss, n)
    if best == worst:
        long = np.full_like(short, 50.0)
    else:
        long = np.clip(100.0 * (np.asarray(final_balance) - worst) / (best - worst), 0.0, 100.0)
    return short, long, short_weight * short + (1.0 - short_weight) * long


def score_dcigt(trials: list[dict], p_loss, short_weight: float = 0.5) -> TaskScore:
    counts = dict.fromkeys(SWITCH_LABELS, 0)
    for t in trials:
        counts[classify_switch(t["revealed"][1] > 0, t["final"] == t["first"])] += 1
    final_balance = START_BALANCE + sum(t["net"] for t in trials)
    short, long, score = dcigt_components(
        [t["final"] == t["first"] for t in trials],
        [t["revealed"][1] > 0 for t in trials],
        final_balance, p_loss, short_weight)
    worst, best = balance_anchors(p_loss, len(trials))
    return TaskScore(
        "dcigt",
        float(score),
        metrics={
            "short_term": float(short),
            "long_term": float(long),
            "final_balance": int(final_balance),
            "worst_anchor": float(worst),
            "best_anchor": float(best),
        },
        profile={
            "switch_counts": counts,
            "final_choices": [DECKS[t["final"]] for t in trials],
            "deck_trajectory": deck_trajectory([t["final"] for t in trials]),
        },
    )


def deck_trajectory(final_choices, window: int = 10) -> dict[str, list[float]]:
    """Sliding-window share of each deck among final choices.

    Stands in for the per-deck "coverage" curves; one value per full window.
    """
    idx = np.array([DECKS.index(c) if isinstance(c, str) else int(c) for c in final_choices])
    w = min(window, len(idx))
    if w == 0:
        return {d: [] for d in DECKS}
    onehot = np.eye(4)[idx]
    csum = np.vstack([np.zeros(4), np.cumsum(onehot, axis=0)])
    props = (csum[w:] - csum[:-w]) / w
    return {d: props[:, i].round(6).tolist() for i, d in enumerate(DECKS)}


class DcigtEnv(Environment):
    task_id = "dcigt"
    system_prompt = SYSTEM_PROMPT
    options = DECKS

    def __init__(self, config, seed):
        super().__init__(config, seed)
        self.p_loss = [float(v) for v in config["p_loss"]]
        self.balance = START_BALANCE
        self.trials: list[dict] = []
        self._first: int | None = None
        self._revealed: tuple[int, int] | None = None

    @property
    def trial(self) -> int:
        return self.step_index // 2 + 1

    def observation(self):
        if self.step_index % 2 == 0:
            return f"Trial {self.trial}: choose a deck (AAA, BBB, CCC, or DDD)."
        return ("You can stick with your original choice or make a new choice. "
                "What is your final choice?")

    def _step(self, action, raw):
        deck = DECKS.index(action)
        if self.step_index % 2 == 0:
            self._first = deck
            self._revealed = sample_outcome(deck, self.p_loss, self.rng)
            gain, loss = self._revealed
            return f"You chose {action}: you would gain ${gain} and lose ${loss}."
        realized = self._revealed if deck == self._first else sample_outcome(deck, self.p_loss, self.rng)
        net = realized[0] - realized[1]
        self.balance += net
        self.trials.append({
            "first": self._first,
            "revealed": self._revealed,
            "final": deck,
            "realized": realized,
            "net": net,
        })
        return (f"Final choice {action}: you gain ${realized[0]} and lose ${realized[1]}. "
                f"Your balance is ${self.balance}.")

    def oracle_action(self):
        order = np.argsort(-expected_values(self.p_loss), kind="stable")
        if self.step_index % 2 == 0:
            return DECKS[order[0]]
        if self._revealed[1] > 0:
            return DECKS[order[1]]
        return DECKS[self._first]

    def score(self):
        return score_dcigt(self.trials, self.p_loss,
                           float(self.config.parameters.get("short_weight", 0.5)))

    def hidden_values(self):
        return [f"{v:g}" for v in self.p_loss if 0 < v < 1] + ["probability"]
