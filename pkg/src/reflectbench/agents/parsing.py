"""Pull a canonical action token out of a free-text reply.

Replies under the free and chain-of-thought strategies bury the answer in
prose, so the parser scans for every canonical token and keeps the one that
occurs last.
"""

from __future__ import annotations

import re
from functools import lru_cache

# Extra surface forms accepted per task, mapped to canonical tokens.
ALIASES: dict[str, dict[str, str]] = {
    "prlt": {"left": "left arm", "right": "right arm"},
    "mbt": {"left": "left arm", "right": "right arm"},
    "nback": {"n/a": "Not Available", "not applicable": "Not Available"},
}

CANONICAL: dict[str, tuple[str, ...]] = {
    "wpt": ("sunny", "rainy"),
    "nback": ("Yes", "No", "Not Available"),
    "dcigt": ("AAA", "BBB", "CCC", "DDD"),
    "prlt": ("left arm", "right arm"),
    "mbt": ("left arm", "right arm"),
}


def _phrase(text: str) -> str:
    words = [re.escape(w) for w in text.split()]
    return r"(?<![\w/])" + r"[\s'\"]+".join(words) + r"(?![\w/])"


@lru_cache(maxsize=64)
def _compile(task_id: str, options: tuple[str, ...]) -> tuple[re.Pattern, dict[str, str]]:
    surface = {o.lower(): o for o in options}
    for alias, target in ALIASES.get(task_id, {}).items():
        if target in options:
            surface.setdefault(alias, target)
    # longest first so "left arm" wins over "left" at the same position
    ordered = sorted(surface, key=len, reverse=True)
    pattern = re.compile("|".join(f"({_phrase(s)})" for s in ordered), re.IGNORECASE)
    lookup = {i + 1: surface[s] for i, s in enumerate(ordered)}
    return pattern, lookup


def parse_choice(task_id: str, raw: str, options: tuple[str, ...] | None = None) -> str | None:
    """Return the canonical token that occurs last in ``raw``, or None."""
    if task_id == "oddball":
        return "comment" if raw and raw.strip() else None
    if options is None:
        options = CANONICAL[task_id]
    if not raw:
        return None
    pattern, lookup = _compile(task_id, tuple(options))
    last = None
    for m in pattern.finditer(raw):
        last = lookup[m.lastindex]
    return last
