from __future__ import annotations

import sys
from typing import TextIO

from reflectbench.agents.base import AgentTransportError, ChatMessage


class HumanAgent:
    """Plays from a terminal: prints each new message, reads one reply line."""

    name = "human"

    def __init__(self, stdin: TextIO | None = None, stdout: TextIO | None = None):
        self.stdin = stdin or sys.stdin
        self.stdout = stdout or sys.stdout
        self._shown: list[ChatMessage] = []

    def reset(self, rng) -> None:
        self._shown = []

    def respond(self, messages: list[ChatMessage]) -> str:
        # conversations restart for independent-trial tasks; show only what is new
        n = len(self._shown)
        fresh = messages[n:] if messages[:n] == self._shown else messages[1:]
        for m in fresh:
            if m.role == "system":
                self.stdout.write(f"[instructions]\n{m.content}\n\n")
            elif m.role == "user":
                self.stdout.write(f"{m.content}\n> ")
        self.stdout.flush()
        line = self.stdin.readline()
        if not line:
            raise AgentTransportError("input closed")
        reply = line.rstrip("\n")
        self._shown = list(messages) + [ChatMessage("assistant", reply)]
        return reply
