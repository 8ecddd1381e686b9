from __future__ import annotations

from reflectbench.config import TaskConfig
from reflectbench.tasks.bandit import MbtEnv, PrltEnv
from reflectbench.tasks.base import Environment, TaskScore
from reflectbench.tasks.dcigt import DcigtEnv
from reflectbench.tasks.nback import NbackEnv
from reflectbench.tasks.oddball import OddballEnv
from reflectbench.tasks.wcst import WcstEnv
from reflectbench.tasks.wpt import WptEnv

ENVIRONMENTS: dict[str, type[Environment]] = {
    "wpt": WptEnv,
    "wcst": WcstEnv,
    "oddball": OddballEnv,
    "nback": NbackEnv,
    "dcigt": DcigtEnv,
    "prlt": PrltEnv,
    "mbt": MbtEnv,
}


def make_env(config: TaskConfig, seed: int, **kwargs) -> Environment:
    return ENVIRONMENTS[config.task_id](config, seed, **kwargs)


__all__ = ["ENVIRONMENTS", "Environment", "TaskScore", "make_env"]
