import numpy as np
import pytest

from reflectbench.agents.base import ChatMessage
from reflectbench.config import preset
from reflectbench.tasks import make_env


class ScriptedAgent:
    """Replies with ``policy(env)`` or with a fixed list of strings."""

    def __init__(self, policy=None, replies=None, env=None, name="scripted"):
        self.policy = policy
        self.replies = list(replies or [])
        self.env = env
        self.name = name
        self.seen: list[list[ChatMessage]] = []

    def reset(self, rng):
        self.rng = rng

    def respond(self, messages):
        self.seen.append(list(messages))
        if self.policy is not None:
            return self.policy(self.env)
        return self.replies.pop(0)


def play(env, choose):
    """Run ``env`` to the end with ``choose(env) -> action`` and return the score."""
    while not env.done:
        env.step(choose(env))
    return env.score()


@pytest.fixture
def make():
    def _make(task, difficulty="easy", seed=0, **overrides):
        return make_env(preset(task, difficulty, **overrides), seed)
    return _make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
