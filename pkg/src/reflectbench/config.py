"""Task parameter sets and the easy/hard presets."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any

TASKS = ("wpt", "wcst", "oddball", "nback", "dcigt", "prlt", "mbt")

# Tasks that enter the overall mean; MBT is reported on its own.
SCORED_TASKS = ("wpt", "wcst", "oddball", "nback", "dcigt", "prlt")

DIFFICULTIES = ("easy", "hard", "custom")

_PRESETS: dict[str, dict[str, dict[str, Any]]] = {
    "wpt": {
        "easy": {"p": 0.9, "trials": 50},
        "hard": {"p": 0.8, "trials": 50},
    },
    "wcst": {
        "easy": {"x": 72, "paper_desk": False},
        "hard": {"x": 90, "paper_desk": False},
    },
    "oddball": {
        "easy": {"embedder": "hash", "corpus": None, "standard_sentence": None},
        "hard": {"embedder": "hash", "corpus": None, "standard_sentence": None},
    },
    "nback": {
        "easy": {"n": 2, "length": 26, "match_count": 10, "sequence_seed": 2024,
                 "score_na_trials": False},
        "hard": {"n": 4, "length": 26, "match_count": 10, "sequence_seed": 2024,
                 "score_na_trials": False},
    },
    "dcigt": {
        "easy": {"p_loss": [0.5, 0.1, 0.5, 0.1], "trials": 40,
                 "short_weight": 0.5},
        "hard": {"p_loss": [0.5, 0.2, 0.5, 0.2], "trials": 40,
                 "short_weight": 0.5},
    },
    "prlt": {
        "easy": {"p": 0.8, "trials": 40},
        "hard": {"p": 0.7, "trials": 40},
    },
    "mbt": {
        "easy": {"n": 2, "blocks": 20},
        "hard": {"n": 4, "blocks": 20},
    },
}

DEFAULT_SESSIONS = {task: 2 for task in TASKS}
DEFAULT_SESSIONS["oddball"] = 3


class ConfigError(ValueError):
    pass


@dataclass
class TaskConfig:
    task_id: str
    difficulty: str = "easy"
    parameters: dict[str, Any] = field(default_factory=dict)
    sessions: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.task_id not in TASKS:
            raise ConfigError(f"unknown task {self.task_id!r}")
        if self.difficulty not in DIFFICULTIES:
            raise ConfigError(f"unknown difficulty {self.difficulty!r}")
        validate_parameters(self.task_id, self.parameters)

    def __getitem__(self, key: str) -> Any:
        return self.parameters[key]

    @property
    def trials(self) -> int:
        """Number of task trials (DC-IGT trials hold two choices each)."""
        p = self.parameters
        if self.task_id == "wcst":
            return int(p["x"])
        if self.task_id == "nback":
            return int(p["length"])
        if self.task_id == "mbt":
            return int(p["n"]) * int(p["blocks"])
        if self.task_id == "oddball":
            from reflectbench.tasks.oddball import load_corpus

            return len(load_corpus(p.get("corpus")))
        return int(p["trials"])

    @property
    def records(self) -> int:
        return 2 * self.trials if self.task_id == "dcigt" else self.trials

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "difficulty": self.difficulty,
            "parameters": copy.deepcopy(self.parameters),
            "trials": self.trials,
            "sessions": self.sessions,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TaskConfig:
        return cls(
            task_id=d["task_id"],
            difficulty=d.get("difficulty", "custom"),
            parameters=copy.deepcopy(d.get("parameters", {})),
            sessions=int(d.get("sessions", 2)),
            seed=int(d.get("seed", 0)),
        )

    def with_overrides(self, overrides: dict[str, Any]) -> TaskConfig:
        """Copy with parameter overrides; any real change makes it ``custom``."""
        params = copy.deepcopy(self.parameters)
        changed = False
        for key, value in overrides.items():
            if key not in params:
                raise ConfigError(f"{self.task_id} has no parameter {key!r}")
            if params[key] != value:
                params[key] = value
                changed = True
        return TaskConfig(
            self.task_id,
            "custom" if changed else self.difficulty,
            params,
            self.sessions,
            self.seed,
        )


def preset(task_id: str, difficulty: str = "easy", *, seed: int = 0,
           sessions: int | None = None, **overrides: Any) -> TaskConfig:
    """Build the Table-1 preset for ``task_id``, optionally overridden."""
    if task_id not in _PRESETS:
        raise ConfigError(f"unknown task {task_id!r}")
    if difficulty not in ("easy", "hard"):
        raise ConfigError(f"no preset named {difficulty!r}")
    cfg = TaskConfig(
        task_id,
        difficulty,
        copy.deepcopy(_PRESETS[task_id][difficulty]),
        DEFAULT_SESSIONS[task_id] if sessions is None else sessions,
        seed,
    )
    return cfg.with_overrides(overrides) if overrides else cfg


def _prob(name: str, v: Any) -> None:
    if not isinstance(v, (int, float)) or not 0.0 <= float(v) <= 1.0:
        raise ConfigError(f"{name} must be a probability in [0, 1], got {v!r}")


def _positive_int(name: str, v: Any) -> None:
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ConfigError(f"{name} must be a positive integer, got {v!r}")


def validate_parameters(task_id: str, p: dict[str, Any]) -> None:
    if task_id in ("wpt", "prlt"):
        _prob("p", p.get("p"))
        _positive_int("trials", p.get("trials"))
        if task_id == "prlt" and p["trials"] < 2:
            raise ConfigError("prlt needs at least 2 trials")
    elif task_id == "wcst":
        _positive_int("x", p.get("x"))
        if p["x"] % 6:
            raise ConfigError(f"x must be divisible by 6, got {p['x']}")
    elif task_id == "nback":
        for key in ("n", "length"):
            _positive_int(key, p.get(key))
        mc = p.get("match_count")
        if not isinstance(mc, int) or mc < 0:
            raise ConfigError(f"match_count must be a non-negative integer, got {mc!r}")
    elif task_id == "dcigt":
        pl = p.get("p_loss")
        if not isinstance(pl, (list, tuple)) or len(pl) != 4:
            raise ConfigError("p_loss must list four probabilities")
        for v in pl:
            _prob("p_loss", v)
        _positive_int("trials", p.get("trials"))
        _prob("short_weight", p.get("short_weight", 0.5))
    elif task_id == "mbt":
        _positive_int("n", p.get("n"))
        _positive_int("blocks", p.get("blocks"))
