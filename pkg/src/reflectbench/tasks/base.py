from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from reflectbench.config import TaskConfig
from reflectbench.rng import stream


@dataclass
class TaskScore:
    task_id: str
    score: float
    metrics: dict[str, Any] = field(default_factory=dict)
    profile: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "score": self.score,
            "metrics": self.metrics,
            "profile": self.profile,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TaskScore:
        return cls(d["task_id"], d["score"], d.get("metrics", {}), d.get("profile", {}))


def clamp_score(x: float) -> float:
    return float(min(100.0, max(0.0, x)))


class Environment:
    """One session of a task, advanced one recorded step at a time.

    The session engine asks for :meth:`observation`, queries the agent,
    and passes the resolved action to :meth:`step`, which returns the
    feedback text. Hidden state stays on the instance.
    """

    task_id: str = ""
    system_prompt: str = ""
    options: tuple[str, ...] = ()
    # each step is sent as a fresh conversation (system + one user turn)
    independent_trials: bool = False

    def __init__(self, config: TaskConfig, seed: int):
        if config.task_id != self.task_id:
            raise ValueError(f"{type(self).__name__} cannot run a {config.task_id} config")
        self.config = config
        self.seed = int(seed)
        self.rng = stream(self.seed, "environment")
        self.step_index = 0

    @property
    def n_records(self) -> int:
        return self.config.records

    @property
    def done(self) -> bool:
        return self.step_index >= self.n_records

    def observation(self) -> str:
        raise NotImplementedError

    def step(self, action: str, raw: str = "") -> str:
        if self.done:
            raise RuntimeError("session already finished")
        if action not in self.options:
            raise ValueError(f"{action!r} is not one of {self.options}")
        feedback = self._step(action, raw)
        self.step_index += 1
        return feedback

    def _step(self, action: str, raw: str) -> str:
        raise NotImplementedError

    def parse(self, raw: str) -> str | None:
        from reflectbench.agents.parsing import parse_choice

        return parse_choice(self.task_id, raw, self.options)

    def retry_hint(self) -> str:
        return "Respond with exactly one of: " + ", ".join(self.options) + "."

    def fallback_action(self, last_valid: str | None) -> str:
        return last_valid if last_valid is not None else self.options[0]

    def score(self) -> TaskScore:
        raise NotImplementedError

    def hidden_values(self) -> list[str]:
        """Literal strings that would leak hidden state if shown to the agent."""
        return []

    def oracle_action(self) -> str:
        """Best action given hidden state. Test and baseline use only."""
        raise NotImplementedError
