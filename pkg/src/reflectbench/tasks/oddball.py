"""Oddball: seven on-topic sentences plus one deviant; the agent comments
freely and is scored on how closely its most surprised sentence resembles
a canonical statement of surprise."""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol

import numpy as np

from reflectbench.tasks.base import Environment, TaskScore, clamp_score

log = logging.getLogger(__name__)

SYSTEM_PROMPT = (
    "You are playing a game and will be presented with a sequence of sentences about a "
    "specific topic. Just make some short comments on the material."
)

STANDARD_SENTENCE = (
    "Wait, that sentence seems completely out of place and unrelated to the rest of the topic."
)

ANNOTATION_SCALE = {
    0: "forced explanation or neglect of the deviant",
    1: "simple enumeration of topic and deviant",
    2: "points out that the deviant differs",
    3: "clearly states the deviant is nonsensical here",
}

_ABBREVIATIONS = {"mr", "mrs", "ms", "dr", "prof", "st", "vs", "etc", "e.g", "i.e", "approx",
                  "no", "fig", "jr", "sr", "inc", "ltd", "co"}
_BOUNDARY = re.compile(r"([.!?]+)([\"')\]]*)\s+")


def split_sentences(text: str) -> list[str]:
    """Split on terminal punctuation.

    A period does not end a sentence when it closes a known abbreviation or
    when the next word starts lowercase (ellipses mid-thought, "e.g. this").
    """
    text = text.strip()
    if not text:
        return []
    out, start = [], 0
    for m in _BOUNDARY.finditer(text):
        end = m.end(2)
        nxt = text[m.end():m.end() + 1]
        if "?" not in m.group(1) and "!" not in m.group(1):
            word = re.findall(r"[\w.]+$", text[start:m.start()])
            if word and word[0].lower().rstrip(".") in _ABBREVIATIONS:
                continue
            if nxt.islower():
                continue
        piece = text[start:end].strip()
        if piece:
            out.append(piece)
        start = m.end()
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out


class Embedder(Protocol):
    name: str

    def embed(self, texts: list[str]) -> np.ndarray: ...


class EmbeddingError(RuntimeError):
    pass


_STOPWORDS = frozenset(
    ["a", "an", "the", "and", "or", "but", "if", "of", "to", "in", "on", "at", "by", "for", "with", "about", "from", "as", "into", "is", "are", "was", "were", "be", "been", "being", "it", "its", "it's", "this", "that", "these", "those", "i", "i'm", "i've", "me", "my", "we", "you", "your", "he", "she", "they", "them", "their", "there", "here", "so", "very", "just", "not", "no", "yes", "do", "does", "did", "have", "has", "had", "can", "could", "would", "should", "will", "may", "might", "some", "any", "all", "what", "what's", "which", "who", "how", "though", "though", "anyway", "still", "too", "also", "than", "then", "s", "t"]
)


class HashEmbedder:
    """Deterministic bag-of-words vectors via signed feature hashing.

    Offline stand-in for a neural embedder: similarity is word overlap
    after dropping common function words.
    """

    name = "hash"

    def __init__(self, dim: int = 1024):
        self.dim = dim

    def tokens(self, text: str) -> list[str]:
        words = re.findall(r"[a-z0-9]+(?:'[a-z]+)?", text.lower().replace("’", "'"))
        return [w for w in words if w not in _STOPWORDS]

    def embed(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            for tok in self.tokens(text):
                h = int.from_bytes(hashlib.blake2b(tok.encode(), digest_size=8).digest(), "little")
                out[i, h % self.dim] += 1.0 if (h >> 63) else -1.0
        return out


class RemoteEmbedder:
    """Embeddings endpoint speaking the common ``/embeddings`` wire format."""

    def __init__(self, endpoint, **client_kwargs):
        from reflectbench.agents.remote import HttpJsonClient

        self.endpoint = endpoint
        self.client = HttpJsonClient(endpoint, **client_kwargs)
        self.name = f"remote:{endpoint.model}"

    def embed(self, texts: list[str]) -> np.ndarray:
        from reflectbench.agents.base import AgentTransportError

        try:
            body, _ = self.client.post("embeddings", {"model": self.endpoint.model, "input": texts})
            rows = sorted(body["data"], key=lambda d: d.get("index", 0))
            return np.array([r["embedding"] for r in rows], dtype=float)
        except (AgentTransportError, KeyError, TypeError, ValueError) as exc:
            raise EmbeddingError(str(exc)) from exc


def cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(a)
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b)
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = (a @ b) / (na * nb)
    return np.nan_to_num(sims, nan=0.0)


@dataclass
class SurpriseScore:
    sentences: list[str]
    similarities: list[float]
    max_similarity: float
    raw_score: float  # 100 * max similarity, may be negative
    human_label: int | None = None

    @property
    def score(self) -> float:
        return clamp_score(self.raw_score)

    def __post_init__(self):
        if self.human_label is not None and self.human_label not in ANNOTATION_SCALE:
            raise ValueError(f"label must be one of {sorted(ANNOTATION_SCALE)}")


def score_surprise(response: str, standard_sentence: str, embedder: Embedder,
                   human_label: int | None = None) -> SurpriseScore:
    sentences = split_sentences(response)
    if not sentences:
        return SurpriseScore([], [], 0.0, 0.0, human_label)
    vecs = embedder.embed(sentences + [standard_sentence])
    sims = cosine(vecs[:-1], vecs[-1])
    best = float(sims.max())
    return SurpriseScore(sentences, [float(s) for s in sims], best, 100.0 * best, human_label)


def validate_scoring(auto_scores, human_labels, aggregation: int = 10) -> float:
    """Pearson r between group means of consecutive ``aggregation`` items.

    A trailing incomplete group is dropped.
    """
    a = np.asarray(auto_scores, dtype=float)
    h = np.asarray(human_labels, dtype=float)
    if a.shape != h.shape:
        raise ValueError("auto scores and labels must pair up")
    groups = len(a) // aggregation
    if groups < 2:
        raise ValueError(f"need at least 2 aggregated points, have {groups}")
    am = a[: groups * aggregation].reshape(groups, aggregation).mean(axis=1)
    hm = h[: groups * aggregation].reshape(groups, aggregation).mean(axis=1)
    if am.std() == 0 or hm.std() == 0:
        raise ValueError("correlation undefined for constant input")
    return float(np.corrcoef(am, hm)[0, 1])


def permutation_threshold(auto_scores, human_labels, aggregation: int = 10,
                          n_perm: int = 1000, rng: np.random.Generator | None = None,
                          q: float = 95.0) -> float:
    """``q``-th percentile of |r| with the labels shuffled."""
    rng = rng or np.random.default_rng(0)
    h = np.asarray(human_labels)
    rs = [abs(validate_scoring(auto_scores, rng.permutation(h), aggregation))
          for _ in range(n_perm)]
    return float(np.percentile(rs, q))


# -- corpus -----------------------------------------------------------------

@dataclass
class OddballItem:
    id: str
    topic: str
    sentences: list[str]
    deviant_index: int  # 0-based
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.sentences) != 8:
            raise ValueError(f"item {self.id}: need 8 sentences, got {len(self.sentences)}")
        if not 0 <= self.deviant_index < 8:
            raise ValueError(f"item {self.id}: deviant_index out of range")

    @property
    def deviant(self) -> str:
        return self.sentences[self.deviant_index]

    @property
    def topic_sentences(self) -> list[str]:
        return [s for i, s in enumerate(self.sentences) if i != self.deviant_index]

    def with_deviant_at(self, index: int) -> OddballItem:
        rest = self.topic_sentences
        return OddballItem(self.id, self.topic, rest[:index] + [self.deviant] + rest[index:],
                           index, dict(self.meta))

    @property
    def text(self) -> str:
        return " ".join(self.sentences)


def load_corpus(path: str | Path | None = None) -> list[OddballItem]:
    if path is None:
        raw = resources.files("reflectbench.tasks").joinpath("data/oddball_corpus.json").read_text()
    else:
        raw = Path(path).read_text()
    return [OddballItem(d["id"], d.get("topic", ""), list(d["sentences"]),
                        int(d["deviant_index"]), d.get("meta", {})) for d in json.loads(raw)]


def annotated_examples() -> list[dict]:
    raw = resources.files("reflectbench.tasks").joinpath("data/oddball_annotated.json").read_text()
    return json.loads(raw)["responses"]


def ordering_violations(scores_by_label: dict[int, float]) -> list[tuple[int, int]]:
    """Label pairs (lo, hi) whose automated scores are not strictly increasing."""
    labels = sorted(scores_by_label)
    return [(lo, hi) for i, lo in enumerate(labels) for hi in labels[i + 1:]
            if not scores_by_label[lo] < scores_by_label[hi]]


def score_annotated(embedder: Embedder, standard_sentence: str = STANDARD_SENTENCE
                    ) -> dict[int, float]:
    return {ex["label"]: score_surprise(ex["text"], standard_sentence, embedder).score
            for ex in annotated_examples()}


def make_embedder(kind: str) -> Embedder:
    if kind == "hash":
        return HashEmbedder()
    if kind.startswith("remote:"):
        import os

        from reflectbench.agents.remote import RemoteEndpoint

        model = kind.split(":", 1)[1] or "text-embedding-3-large"
        base = os.environ.get("REFLECTION_EMBED_URL", "https://api.openai.com/v1")
        return RemoteEmbedder(RemoteEndpoint(base, model))
    raise ValueError(f"unknown embedder {kind!r}")


class OddballEnv(Environment):
    task_id = "oddball"
    system_prompt = SYSTEM_PROMPT
    options = ("comment",)
    independent_trials = True

    def __init__(self, config, seed, embedder: Embedder | None = None):
        super().__init__(config, seed)
        p = config.parameters
        self.standard = p.get("standard_sentence") or STANDARD_SENTENCE
        self.embedder = embedder or make_embedder(p.get("embedder") or "hash")
        # deviant lands uniformly on positions 2..7 (1-based)
        self.items = [it.with_deviant_at(int(self.rng.integers(1, 7)))
                      for it in load_corpus(p.get("corpus"))]
        self.responses: list[str] = []

    def observation(self):
        return self.items[self.step_index].text

    def _step(self, action, raw):
        self.responses.append(raw if action == "comment" else "")
        return ""

    def retry_hint(self):
        return "Please make some short comments on the material."

    def fallback_action(self, last_valid):
        return "comment"

    def oracle_action(self):
        # voicing the standard surprise verbatim is the best-scoring reply
        return self.standard

    def score(self):
        per_item, unscored = [], []
        for item, resp in zip(self.items, self.responses):
            try:
                s = score_surprise(resp, self.standard, self.embedder).score
            except EmbeddingError as exc:
                log.warning("item %s unscored: %s", item.id, exc)
                unscored.append(item.id)
                s = None
            per_item.append(s)
        scored = [s for s in per_item if s is not None]
        mean = float(np.mean(scored)) if scored else 0.0
        return TaskScore(
            self.task_id,
            mean,
            metrics={"embedder": self.embedder.name, "unscored": unscored,
                     "scored_items": len(scored)},
            profile={"item_scores": dict(zip([it.id for it in self.items], per_item)),
                     "deviant_positions": {it.id: it.deviant_index + 1 for it in self.items}},
        )
