"""Card sorting under a hidden rule that rotates shape, color, number twice."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from reflectbench.tasks.base import Environment, TaskScore

SHAPES = ("triangle", "cross", "circle", "star")
COLORS = ("red", "green", "yellow", "blue")
NUMBERS = (1, 2, 3, 4)
RULES = ("shape", "color", "number")
SCHEDULE = RULES * 2

FEEDBACK = ("Right", "Wrong")


@dataclass(frozen=True)
class Card:
    shape: str
    color: str
    number: int

    def __str__(self) -> str:
        return f"{self.shape} {self.color} {self.number}"

    def get(self, dim: str):
        return getattr(self, dim)

    @classmethod
    def parse(cls, text: str) -> Card:
        shape, color, number = text.split()
        return cls(shape, color, int(number))


DESK = (
    Card("triangle", "red", 1),
    Card("cross", "green", 2),
    Card("circle", "yellow", 3),
    Card("star", "blue", 4),
)
# The published desk repeats number 1, so number-matching is ambiguous for it.
PAPER_DESK = (
    Card("triangle", "red", 1),
    Card("cross", "green", 2),
    Card("circle", "yellow", 1),
    Card("star", "blue", 4),
)


def system_prompt(desk) -> str:
    names = [f"'{c}'" for c in desk]
    listed = ", ".join(names[:-1]) + f", and {names[-1]}"
    either = ", ".join(names[:-1]) + f", or {names[-1]}"
    return (
        "You are performing an interesting Task. In this task, you have four cards on your "
        f"desk, that is, {listed}. The three word/figure represent (1) the type of shape, "
        "i.e. triangle, cross, circle, or star, (2) the color of the shape, i.e. red, green, "
        "yellow, or blue, and (3) the number of the shape, i.e., 1, 2, 3, or 4, respectively. "
        "At each trial, you will be presented with a testing card. You should point out "
        "which card on your desk matches the testing card. I will not tell you the matching "
        "rule, but only provide feedback if your choice was right or wrong. Your primary goal "
        "is to strive to maximize your accuracy rate. Respond with your option "
        f"({either}). Keep performing the task until the end of the test."
    )


def valid_targets(desk) -> list[Card]:
    """Every card whose three dimensions each match exactly one desk card,
    three different desk cards in total."""
    out = []
    for shape, color, number in product(SHAPES, COLORS, NUMBERS):
        card = Card(shape, color, number)
        matched = []
        for dim in RULES:
            hits = [i for i, d in enumerate(desk) if d.get(dim) == card.get(dim)]
            if len(hits) != 1:
                break
            matched.append(hits[0])
        else:
            if len(set(matched)) == 3 and card not in desk:
                out.append(card)
    return out


def generate_target(desk, rng: np.random.Generator) -> Card:
    targets = valid_targets(desk)
    if not targets:
        raise ValueError("desk admits no unambiguous target")
    return targets[int(rng.integers(len(targets)))]


def correct_card(target: Card, desk, rule: str) -> Card:
    hits = [c for c in desk if c.get(rule) == target.get(rule)]
    if len(hits) != 1:
        raise ValueError(f"{target} has {len(hits)} matches by {rule}")
    return hits[0]


def judge_match(target: Card, choice: Card, rule: str) -> tuple[bool, str]:
    ok = choice.get(rule) == target.get(rule)
    return ok, FEEDBACK[0] if ok else FEEDBACK[1]


def rule_at(trial: int, x: int) -> str:
    """Active rule at 1-based ``trial``."""
    return SCHEDULE[(trial - 1) // (x // 6)]


def block_accuracy(correct, x: int) -> list[float]:
    c = np.asarray(correct, dtype=float).reshape(6, x // 6)
    return (100.0 * c.mean(axis=1)).tolist()


def score_wcst(correct, x: int) -> tuple[float, list[float]]:
    c = np.asarray(correct, dtype=float)
    if c.size != x:
        raise ValueError(f"expected {x} trials, got {c.size}")
    return 100.0 * c.sum() / x, block_accuracy(c, x)


class WcstEnv(Environment):
    task_id = "wcst"

    def __init__(self, config, seed):
        super().__init__(config, seed)
        self.x = int(config["x"])
        self.desk = PAPER_DESK if config.parameters.get("paper_desk") else DESK
        self.options = tuple(str(c) for c in self.desk)
        self.system_prompt = system_prompt(self.desk)
        self._targets = valid_targets(self.desk)
        self.target = self._draw()
        self.correct: list[bool] = []
        self.choices: list[str] = []

    def _draw(self) -> Card:
        return self._targets[int(self.rng.integers(len(self._targets)))]

    @property
    def rule(self) -> str:
        return rule_at(self.step_index + 1, self.x)

    def observation(self):
        return f"Testing card: {self.target}. Which card on your desk matches it?"

    def _step(self, action, raw):
        ok, feedback = judge_match(self.target, Card.parse(action), self.rule)
        self.correct.append(ok)
        self.choices.append(action)
        if self.step_index + 1 < self.n_records:
            self.target = self._draw()
        return feedback

    def oracle_action(self):
        return str(correct_card(self.target, self.desk, self.rule))

    def score(self):
        s, blocks = score_wcst(self.correct, self.x)
        return TaskScore(
            self.task_id,
            s,
            metrics={"correct": int(sum(self.correct))},
            profile={"block_accuracy": blocks, "block_rules": list(SCHEDULE)},
        )

    def hidden_values(self):
        return ["rule", "shape", "color", "number"]
