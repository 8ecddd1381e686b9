"""n-back over a letter stream.

Every session of a given (n, length, match_count, sequence_seed) sees the
same letters, so different agents are compared on identical stimuli.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from reflectbench.rng import stream
from reflectbench.tasks.base import Environment, TaskScore

ALPHABET = ("E", "F", "G", "H")
YES, NO, NA = "Yes", "No", "Not Available"


@dataclass
class NbackSequence:
    letters: list[str]
    n: int
    expected: list[str]

    @property
    def scoreable(self) -> int:
        return len(self.letters) - self.n


def expected_labels(letters, n: int) -> list[str]:
    return [
        NA if i < n else (YES if letters[i] == letters[i - n] else NO)
        for i in range(len(letters))
    ]


def generate_sequence(n: int, length: int, match_count: int,
                      rng: np.random.Generator) -> NbackSequence:
    if n < 1 or length <= n:
        raise ValueError(f"need length > n >= 1, got n={n}, length={length}")
    if not 0 <= match_count <= length - n:
        raise ValueError(f"match_count {match_count} infeasible for {length - n} scoreable positions")
    yes = set((n + rng.choice(length - n, size=match_count, replace=False)).tolist())
    letters = [ALPHABET[int(i)] for i in rng.integers(len(ALPHABET), size=n)]
    for i in range(n, length):
        if i in yes:
            letters.append(letters[i - n])
        else:
            others = [a for a in ALPHABET if a != letters[i - n]]
            letters.append(others[int(rng.integers(len(others)))])
    return NbackSequence(letters, n, expected_labels(letters, n))


def default_sequence(n: int = 2, length: int = 26, match_count: int = 10,
                     sequence_seed: int = 2024) -> NbackSequence:
    return generate_sequence(n, length, match_count, stream(sequence_seed, f"nback-{n}"))


def score_nback(answers, sequence: NbackSequence, score_na_trials: bool = False) -> dict:
    """Accuracy over positions after the first n (or over all positions)."""
    if len(answers) != len(sequence.letters):
        raise ValueError(f"expected {len(sequence.letters)} answers, got {len(answers)}")
    n = sequence.n
    hits = [a == e for a, e in zip(answers, sequence.expected)]
    if score_na_trials:
        score = 100.0 * sum(hits) / len(hits)
    else:
        score = 100.0 * sum(hits[n:]) / sequence.scoreable
    return {
        "score": score,
        "na_compliance": sum(hits[:n]) / n,
        "correct": int(sum(hits[n:])),
        "scoreable": sequence.scoreable,
    }


def system_prompt(n: int) -> str:
    return (
        "You are playing a game. I will give you a series of characters in sequence, "
        "showing only one at a time. Your task is to determine whether the current "
        f"character is the same as the character {n} steps before. If the current character "
        f"is the same as the character {n} steps before, answer Yes. If the current character "
        f"is different from the character {n} steps before, answer No. For the first {n} "
        "steps, since there aren't enough preceding characters for comparison, answer "
        "Not Available."
    )


class NbackEnv(Environment):
    task_id = "nback"
    options = (YES, NO, NA)

    def __init__(self, config, seed):
        super().__init__(config, seed)
        p = config.parameters
        self.n = int(p["n"])
        self.sequence = default_sequence(self.n, int(p["length"]), int(p["match_count"]),
                                         int(p.get("sequence_seed", 2024)))
        self.system_prompt = system_prompt(self.n)
        self.answers: list[str] = []

    def observation(self):
        return f"Current character: {self.sequence.letters[self.step_index]}"

    def _step(self, action, raw):
        self.answers.append(action)
        return ""

    def fallback_action(self, last_valid):
        return NO

    def oracle_action(self):
        return self.sequence.expected[self.step_index]

    def score(self):
        r = score_nback(self.answers, self.sequence,
                        bool(self.config.parameters.get("score_na_trials", False)))
        return TaskScore(
            self.task_id,
            r.pop("score"),
            metrics=r,
            profile={"answers": list(self.answers), "expected": list(self.sequence.expected)},
        )
