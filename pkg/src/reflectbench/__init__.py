"""Parameterized cognitive-test environments for evaluating chat agents."""

from reflectbench.config import TASKS, TaskConfig, preset
from reflectbench.session import TaskScore, Transcript, TrialRecord, replay, run_session
from reflectbench.tasks import make_env

__all__ = [
    "TASKS",
    "TaskConfig",
    "TaskScore",
    "Transcript",
    "TrialRecord",
    "make_env",
    "preset",
    "replay",
    "run_session",
]

__version__ = "0.1.0"
