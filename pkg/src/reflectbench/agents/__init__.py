from reflectbench.agents.base import Agent, AgentTransportError, ChatMessage
from reflectbench.agents.baselines import BASELINE_KINDS, make_baseline
from reflectbench.agents.human import HumanAgent
from reflectbench.agents.parsing import parse_choice
from reflectbench.agents.remote import (
    HttpJsonClient,
    MalformedResponse,
    RateLimiter,
    RemoteAgent,
    RemoteEndpoint,
    complete_chat,
)
from reflectbench.agents.strategy import STRATEGIES, apply_strategy

__all__ = [
    "BASELINE_KINDS",
    "STRATEGIES",
    "Agent",
    "AgentTransportError",
    "ChatMessage",
    "HttpJsonClient",
    "HumanAgent",
    "MalformedResponse",
    "RateLimiter",
    "RemoteAgent",
    "RemoteEndpoint",
    "apply_strategy",
    "complete_chat",
    "make_baseline",
    "parse_choice",
]
