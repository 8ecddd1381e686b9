"""The trial loop: prompt, query, parse, step, record.

A finished :class:`Transcript` is self-contained: it carries the seed and
config snapshot, so :func:`replay` can rebuild the environment, push the
recorded actions through it, and recompute the score without an agent.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from reflectbench.agents.base import AgentTransportError, ChatMessage
from reflectbench.agents.strategy import STRATEGIES, apply_strategy
from reflectbench.config import TaskConfig
from reflectbench.rng import stream
from reflectbench.tasks import make_env
from reflectbench.tasks.base import Environment, TaskScore

log = logging.getLogger(__name__)


class SessionAborted(RuntimeError):
    def __init__(self, transcript: Transcript, cause: Exception):
        super().__init__(f"session {transcript.session_id} aborted: {cause}")
        self.transcript = transcript


class TranscriptValidationError(ValueError):
    def __init__(self, index: int | None, message: str):
        where = "header" if index is None else f"record {index}"
        super().__init__(f"{where}: {message}")
        self.index = index


@dataclass
class TrialRecord:
    index: int
    prompt: str
    raw_response: str
    parsed_action: str | None
    action: str  # what the environment received: parsed_action or the fallback
    feedback: str
    valid: bool
    retries_used: int = 0
    rejected_responses: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TrialRecord:
        return cls(
            index=d["index"],
            prompt=d["prompt"],
            raw_response=d["raw_response"],
            parsed_action=d.get("parsed_action"),
            action=d["action"],
            feedback=d.get("feedback", ""),
            valid=d["valid"],
            retries_used=d.get("retries_used", 0),
            rejected_responses=list(d.get("rejected_responses", [])),
        )


@dataclass
class Transcript:
    session_id: str
    task_id: str
    strategy: str
    seed: int
    config_snapshot: TaskConfig
    records: list[TrialRecord] = field(default_factory=list)
    agent: str = ""
    status: str = "complete"
    error: str | None = None
    max_retries: int = 1
    score: TaskScore | None = None

    @property
    def filename(self) -> str:
        return f"{self.task_id}_{self.strategy}_{self.session_id}.jsonl"

    def header(self) -> dict[str, Any]:
        return {
            "type": "header",
            "session_id": self.session_id,
            "task_id": self.task_id,
            "strategy": self.strategy,
            "seed": self.seed,
            "agent": self.agent,
            "status": self.status,
            "error": self.error,
            "max_retries": self.max_retries,
            "config_snapshot": self.config_snapshot.to_dict(),
            "score": None if self.score is None else self.score.to_dict(),
        }

    def to_jsonl(self) -> str:
        lines = [_dumps(self.header())]
        lines += [_dumps({"type": "trial", **r.to_dict()}) for r in self.records]
        return "\n".join(lines) + "\n"

    def save(self, out_dir: str | Path) -> Path:
        path = Path(out_dir) / self.filename
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_jsonl(), encoding="utf-8")
        return path

    @classmethod
    def from_jsonl(cls, text: str) -> Transcript:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise TranscriptValidationError(None, "empty transcript")
        try:
            head = json.loads(lines[0])
            rows = [json.loads(ln) for ln in lines[1:]]
        except json.JSONDecodeError as exc:
            raise TranscriptValidationError(None, f"bad JSON: {exc}") from exc
        if head.get("type") != "header":
            raise TranscriptValidationError(None, "first line is not a header")
        records = []
        for i, row in enumerate(rows, start=1):
            try:
                records.append(TrialRecord.from_dict(row))
            except (KeyError, TypeError) as exc:
                raise TranscriptValidationError(i, f"missing field {exc}") from exc
        score = head.get("score")
        return cls(
            session_id=head["session_id"],
            task_id=head["task_id"],
            strategy=head["strategy"],
            seed=int(head["seed"]),
            config_snapshot=TaskConfig.from_dict(head["config_snapshot"]),
            records=records,
            agent=head.get("agent", ""),
            status=head.get("status", "complete"),
            error=head.get("error"),
            max_retries=int(head.get("max_retries", 1)),
            score=None if score is None else TaskScore.from_dict(score),
        )

    @classmethod
    def load(cls, path: str | Path) -> Transcript:
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, default=_jsonable)


def normalize(obj):
    """JSON round-trip, so scores compare the way they are stored."""
    return json.loads(_dumps(obj))


def default_session_id(config: TaskConfig, seed: int) -> str:
    """Seed in hex plus a short digest of the config, so sessions that share
    a seed under different parameters get different file names."""
    digest = hashlib.sha256(_dumps(config.to_dict()).encode("utf-8")).hexdigest()[:8]
    return f"{seed:016x}-{digest}"


def compose_prompt(feedback: str, observation: str, strategy: str) -> str:
    text = "\n".join(part for part in (feedback, observation) if part)
    return apply_strategy(text, strategy)


def run_session(env: Environment, agent, strategy: str, seed: int | None = None, *,
                max_retries: int = 1, session_id: str | None = None,
                out_dir: str | Path | None = None) -> tuple[Transcript, TaskScore]:
    """Drive ``agent`` through every step of ``env``.

    On a transport failure the partial transcript is saved (when
    ``out_dir`` is given) and :class:`SessionAborted` is raised.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if seed is not None and int(seed) != env.seed:
        raise ValueError(f"seed {seed} does not match the environment's seed {env.seed}")
    if env.step_index:
        raise ValueError("environment has already been stepped")
    seed = env.seed
    agent.reset(stream(seed, "agent"))
    transcript = Transcript(
        session_id=session_id or default_session_id(env.config, seed),
        task_id=env.task_id,
        strategy=strategy,
        seed=seed,
        config_snapshot=env.config,
        agent=getattr(agent, "name", type(agent).__name__),
        max_retries=max_retries,
    )
    system = ChatMessage("system", env.system_prompt)
    history = [system]
    feedback = ""
    last_valid: str | None = None
    try:
        for index in range(1, env.n_records + 1):
            prompt = compose_prompt(feedback, env.observation(), strategy)
            messages = ([system] if env.independent_trials else history) + [
                ChatMessage("user", prompt)]
            reply = agent.respond(messages)
            parsed = env.parse(reply)
            rejected, retries = [], 0
            while parsed is None and retries < max_retries:
                rejected.append(reply)
                messages = messages + [ChatMessage("assistant", reply),
                                       ChatMessage("user", env.retry_hint())]
                reply = agent.respond(messages)
                parsed = env.parse(reply)
                retries += 1
            action = parsed if parsed is not None else env.fallback_action(last_valid)
            if parsed is None:
                log.info("record %d: no valid action, applying fallback %r", index, action)
            else:
                last_valid = parsed
            feedback = env.step(action, reply)
            history = messages + [ChatMessage("assistant", reply)]
            transcript.records.append(TrialRecord(
                index=index,
                prompt=prompt,
                raw_response=reply,
                parsed_action=parsed,
                action=action,
                feedback=feedback,
                valid=parsed is not None,
                retries_used=retries,
                rejected_responses=rejected,
            ))
    except AgentTransportError as exc:
        transcript.status = "aborted"
        transcript.error = str(exc)
        if out_dir is not None:
            transcript.save(out_dir)
        raise SessionAborted(transcript, exc) from exc
    score = env.score()
    transcript.score = TaskScore.from_dict(normalize(score.to_dict()))
    if out_dir is not None:
        transcript.save(out_dir)
    return transcript, transcript.score


def validate_structure(transcript: Transcript) -> None:
    cfg = transcript.config_snapshot
    if transcript.task_id != cfg.task_id:
        raise TranscriptValidationError(None, "task_id disagrees with config snapshot")
    if transcript.strategy not in STRATEGIES:
        raise TranscriptValidationError(None, f"unknown strategy {transcript.strategy!r}")
    for pos, rec in enumerate(transcript.records, start=1):
        if rec.index != pos:
            raise TranscriptValidationError(pos, f"index {rec.index} breaks the consecutive sequence")
        if rec.valid != (rec.parsed_action is not None):
            raise TranscriptValidationError(pos, "parsed_action present iff valid")
        if not 0 <= rec.retries_used <= transcript.max_retries:
            raise TranscriptValidationError(pos, f"retries_used {rec.retries_used} out of range")
    if transcript.status != "complete":
        raise TranscriptValidationError(None, f"session status is {transcript.status!r}")
    if len(transcript.records) != cfg.records:
        raise TranscriptValidationError(
            len(transcript.records) + 1 if len(transcript.records) < cfg.records else cfg.records + 1,
            f"expected {cfg.records} records, found {len(transcript.records)}")


def replay(transcript: Transcript, **env_kwargs) -> TaskScore:
    """Recompute the score from the recorded actions alone.

    Rebuilds the environment from seed and config, checks each stored
    prompt, fallback and feedback against it, and returns the fresh score.
    """
    validate_structure(transcript)
    env = make_env(transcript.config_snapshot, transcript.seed, **env_kwargs)
    feedback = ""
    last_valid = None
    for rec in transcript.records:
        expected = compose_prompt(feedback, env.observation(), transcript.strategy)
        if rec.prompt != expected:
            raise TranscriptValidationError(rec.index, "prompt does not match the environment")
        if rec.valid:
            if env.parse(rec.raw_response) != rec.parsed_action:
                raise TranscriptValidationError(rec.index, "parsed_action does not match raw_response")
            if rec.action != rec.parsed_action:
                raise TranscriptValidationError(rec.index, "action differs from parsed_action")
            last_valid = rec.parsed_action
        elif rec.action != env.fallback_action(last_valid):
            raise TranscriptValidationError(rec.index, "action is not the fallback action")
        try:
            feedback = env.step(rec.action, rec.raw_response)
        except ValueError as exc:
            raise TranscriptValidationError(rec.index, str(exc)) from exc
        if feedback != rec.feedback:
            raise TranscriptValidationError(rec.index, "feedback does not match the environment")
    return TaskScore.from_dict(normalize(env.score().to_dict()))
