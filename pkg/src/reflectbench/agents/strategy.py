from __future__ import annotations

STRATEGIES = ("free", "direct", "cot")

SUFFIXES = {
    "free": "",
    "direct": "respond only with your choice directly without outputting any other "
    "information or analysis.",
    "cot": "let's think step by step.",
}


def apply_strategy(user_prompt: str, strategy: str) -> str:
    if not user_prompt:
        raise ValueError("empty user prompt")
    try:
        suffix = SUFFIXES[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}") from None
    return f"{user_prompt} {suffix}" if suffix else user_prompt
