from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"bad role {self.role!r}")
        if self.role != "assistant" and not self.content:
            raise ValueError(f"{self.role} message must have content")

    def to_wire(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}


class AgentTransportError(RuntimeError):
    """The agent could not be reached within its retry budget."""

    def __init__(self, message: str, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


class Agent(Protocol):
    """Chat contract: see the conversation so far, return the reply text."""

    name: str

    def reset(self, rng: np.random.Generator) -> None: ...

    def respond(self, messages: list[ChatMessage]) -> str: ...
