"""Scripted baseline agents.

They obey the same chat contract as a model: they read the conversation
text and reply with text. Only :class:`OracleAgent` looks past the
conversation, through the environment's ``oracle_action`` hook.
"""

from __future__ import annotations

import re

import numpy as np

from reflectbench.agents.base import ChatMessage

BASELINE_KINDS = ("random", "random_dimension", "wsls", "all_no", "constant", "oracle")


def _last_user(messages: list[ChatMessage]) -> str:
    for m in reversed(messages):
        if m.role == "user":
            return m.content
    return ""


class _Baseline:
    name = "baseline"

    def __init__(self, task_id: str, options: tuple[str, ...]):
        self.task_id = task_id
        self.options = tuple(options)
        self.rng = np.random.default_rng(0)

    def reset(self, rng: np.random.Generator) -> None:
        self.rng = rng

    def pick(self, options=None) -> str:
        opts = self.options if options is None else options
        return opts[int(self.rng.integers(len(opts)))]


class RandomAgent(_Baseline):
    """Uniform over the canonical options each turn."""

    name = "baseline:random"

    def respond(self, messages):
        if self.task_id == "oddball":
            return "Interesting material."
        if self.task_id == "nback":
            return self.pick(("Yes", "No"))
        return self.pick()


class RandomDimensionAgent(_Baseline):
    """WCST only: match the testing card on a uniformly drawn dimension."""

    name = "baseline:random_dimension"

    def __init__(self, task_id, options):
        if task_id != "wcst":
            raise ValueError("random_dimension is a WCST policy")
        super().__init__(task_id, options)
        self.desk = [o.split() for o in options]

    def respond(self, messages):
        m = re.search(r"Testing card: (\w+) (\w+) (\d)", _last_user(messages))
        if not m:
            return self.pick()
        dim = int(self.rng.integers(3))
        hits = [o for o, d in zip(self.options, self.desk) if d[dim] == m.group(dim + 1)]
        return hits[0] if len(hits) == 1 else self.pick(hits or None)


class ConstantAgent(_Baseline):
    def __init__(self, task_id, options, choice: str):
        super().__init__(task_id, options)
        self.choice = choice
        self.name = f"baseline:constant({choice})"

    def respond(self, messages):
        return self.choice


class WslsAgent(_Baseline):
    """Win-stay-lose-switch.

    Bandits: repeat the arm after reward 1, switch after 0. WCST: keep the
    card after "Right", move to the next desk card after "Wrong". DC-IGT:
    keep the deck unless a loss was revealed or realized, else pick
    another deck at random.
    """

    name = "baseline:wsls"

    def __init__(self, task_id, options):
        if task_id not in ("prlt", "mbt", "wcst", "dcigt"):
            raise ValueError(f"wsls is undefined for {task_id}")
        super().__init__(task_id, options)
        self.last: str | None = None

    def reset(self, rng):
        super().reset(rng)
        self.last = None

    def _other(self, choice: str) -> str:
        if self.task_id == "wcst":
            return self.options[(self.options.index(choice) + 1) % len(self.options)]
        return self.pick([o for o in self.options if o != choice])

    def respond(self, messages):
        text = _last_user(messages)
        if self.last is None:
            self.last = self.pick()
            return self.last
        if self.task_id in ("prlt", "mbt"):
            m = re.search(r"Reward: ([01])", text)
            lost = m is not None and m.group(1) == "0"
        elif self.task_id == "wcst":
            lost = text.startswith("Wrong")
        else:
            m = re.search(r"lose \$(\d+)", text)
            lost = m is not None and int(m.group(1)) > 0
        if lost:
            self.last = self._other(self.last)
        return self.last


class OracleAgent(_Baseline):
    name = "baseline:oracle"

    def __init__(self, env):
        super().__init__(env.task_id, env.options)
        self.env = env

    def respond(self, messages):
        return self.env.oracle_action()


def make_baseline(kind: str, env) -> _Baseline:
    """Build a baseline for ``env``. ``kind`` may be ``constant(<choice>)``."""
    task, opts = env.task_id, env.options
    if kind == "random":
        return RandomAgent(task, opts)
    if kind == "random_dimension":
        return RandomDimensionAgent(task, opts)
    if kind == "wsls":
        return WslsAgent(task, opts)
    if kind == "all_no":
        if task != "nback":
            raise ValueError("all_no is an n-back policy")
        return ConstantAgent(task, opts, "No")
    if kind == "oracle":
        return OracleAgent(env)
    m = re.fullmatch(r"constant\((.+)\)", kind)
    if m:
        return ConstantAgent(task, opts, m.group(1))
    raise ValueError(f"unknown baseline {kind!r}; expected one of {BASELINE_KINDS}")
