"""Cross-task aggregation and on-disk reports.

A report is always rebuilt from the transcripts in a directory by replay,
so a report written at the end of a run and one regenerated later from
the same files are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from reflectbench.analysis.chance import (
    CHANCE_TASKS,
    POLICIES,
    RANDOM_POLICIES,
    ChanceEstimate,
    estimate_chance,
)
from reflectbench.config import SCORED_TASKS, TaskConfig
from reflectbench.session import (
    Transcript,
    TranscriptValidationError,
    normalize,
    replay,
)

log = logging.getLogger(__name__)

# Published chance rows (mean, 95% threshold) for the original benchmark, for
# comparison only; the random policies behind them are not described.
REFERENCE_CHANCE = {
    "easy": {"wpt": (51.84, 69.95), "wcst": (61.80, 66.67), "nback": (48.07, 59.62),
             "dcigt": (2.51, 16.48), "prlt": (56.47, 67.87)},
    "hard": {"wpt": (55.80, 75.94), "wcst": (55.28, 60.00), "nback": (46.17, 57.69),
             "dcigt": (11.48, 19.67), "prlt": (57.72, 66.64)},
}
REFERENCE_ODDBALL_R = 0.87


@dataclass
class SuiteReport:
    task_scores: dict[str, list[float]]
    task_means: dict[str, float]
    overall: float | None
    partial: bool
    absent: list[str]
    mbt: float | None = None
    chance: dict[str, list[dict]] = field(default_factory=dict)
    above_chance: dict[str, bool | None] = field(default_factory=dict)
    behavior: dict[str, list[dict]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_scores": self.task_scores,
            "task_means": self.task_means,
            "overall": self.overall,
            "overall_partial": self.partial,
            "absent_tasks": self.absent,
            "mbt_anticipation": self.mbt,
            "chance": self.chance,
            "above_chance": self.above_chance,
            "behavior": self.behavior,
        }


def chance_threshold(estimates: Iterable[ChanceEstimate | dict], task_id: str) -> float | None:
    """Highest p95 among the task's random policies."""
    p95s = []
    for e in estimates:
        d = e.to_dict() if isinstance(e, ChanceEstimate) else e
        if d["policy"] in RANDOM_POLICIES.get(task_id, ()):
            p95s.append(d["p95"])
    return max(p95s) if p95s else None


def aggregate(scores, chance: dict[str, list] | None = None,
              behavior: dict[str, list[dict]] | None = None) -> SuiteReport:
    """Per-task means and the overall mean of the six non-MBT tasks.

    ``scores`` maps task id to a list of session scores, or is an iterable
    of TaskScore objects. MBT never enters the overall mean.
    """
    if not isinstance(scores, dict):
        grouped: dict[str, list[float]] = {}
        for s in scores:
            grouped.setdefault(s.task_id, []).append(float(s.score))
        scores = grouped
    chance = chance or {}
    per_task = {t: [float(v) for v in scores[t]] for t in sorted(scores) if scores[t]}
    means = {t: float(np.mean(v)) for t, v in per_task.items()}
    included = [t for t in SCORED_TASKS if t in means]
    absent = [t for t in SCORED_TASKS if t not in means]
    overall = float(np.mean([means[t] for t in included])) if included else None
    above = {}
    for t in included:
        thr = chance_threshold(chance.get(t, []), t)
        above[t] = None if thr is None else bool(means[t] > thr)
    return SuiteReport(
        task_scores=per_task,
        task_means=means,
        overall=overall,
        partial=bool(absent),
        absent=absent,
        mbt=means.get("mbt"),
        chance={t: [c.to_dict() if isinstance(c, ChanceEstimate) else c for c in v]
                for t, v in sorted(chance.items())},
        above_chance=above,
        behavior=behavior or {},
    )


@dataclass
class ReplayedSession:
    path: str
    transcript: Transcript | None
    score: dict | None
    agrees: bool
    error: str | None = None


def collect(directory: str | Path) -> list[ReplayedSession]:
    files = sorted(Path(directory).glob("*.jsonl"))
    if not files:
        raise FileNotFoundError(f"no transcripts in {directory}")
    out = []
    for f in files:
        try:
            t = Transcript.load(f)
        except TranscriptValidationError as exc:
            log.warning("%s: %s", f.name, exc)
            out.append(ReplayedSession(f.name, None, None, False, str(exc)))
            continue
        stored = None if t.score is None else normalize(t.score.to_dict())
        try:
            fresh = normalize(replay(t).to_dict())
        except TranscriptValidationError as exc:
            log.warning("%s: %s", f.name, exc)
            out.append(ReplayedSession(f.name, t, None, False, str(exc)))
            continue
        out.append(ReplayedSession(f.name, t, fresh, fresh == stored))
    return out


def _section_key(t: Transcript) -> tuple[str, str, str]:
    return (t.config_snapshot.difficulty, t.strategy, t.agent)


def build_report(directory: str | Path, chance_sims: int = 10_000, chance_seed: int = 0) -> dict:
    """Replay every transcript and assemble one report section per
    (difficulty, strategy, agent) group."""
    sessions = collect(directory)
    groups: dict[tuple[str, str, str], list[ReplayedSession]] = {}
    for s in sessions:
        if s.transcript is not None:
            groups.setdefault(_section_key(s.transcript), []).append(s)
    sections = []
    for key in sorted(groups):
        difficulty, strategy, agent = key
        members = groups[key]
        scores: dict[str, list[float]] = {}
        behavior: dict[str, list[dict]] = {}
        configs: dict[str, TaskConfig] = {}
        for s in members:
            if s.score is None:
                continue
            task = s.transcript.task_id
            scores.setdefault(task, []).append(s.score["score"])
            behavior.setdefault(task, []).append(
                {"session_id": s.transcript.session_id, **s.score["profile"]})
            configs.setdefault(task, s.transcript.config_snapshot)
        chance = {}
        if chance_sims:
            for task, cfg in sorted(configs.items()):
                if task in CHANCE_TASKS:
                    chance[task] = [estimate_chance(cfg, pol, chance_sims, chance_seed)
                                    for pol in POLICIES[task] if pol in RANDOM_POLICIES[task]]
        rep = aggregate(scores, chance, behavior)
        sections.append({
            "difficulty": difficulty,
            "strategy": strategy,
            "agent": agent,
            "sessions": [
                {"file": s.path, "task_id": s.transcript.task_id,
                 "session_id": s.transcript.session_id, "seed": s.transcript.seed,
                 "status": s.transcript.status,
                 "score": None if s.score is None else s.score["score"],
                 "stored_score": None if s.transcript.score is None else s.transcript.score.score,
                 "replay_agrees": s.agrees, "error": s.error}
                for s in members
            ],
            **rep.to_dict(),
            "reference_chance": REFERENCE_CHANCE.get(difficulty, {}),
        })
    return {
        "sections": sections,
        "disagreements": [s.path for s in sessions if not s.agrees],
        "unreadable": {s.path: s.error for s in sessions if s.transcript is None},
        "notes": {
            "mbt": "MBT is excluded from the overall mean; anticipation is this harness's own "
                   "quantification of the meta-bandit.",
            "reference_chance": "published chance rows (mean, p95) for comparison only",
            "reference_oddball_r": REFERENCE_ODDBALL_R,
        },
    }


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["difficulty", "strategy", "agent", "task_id", "session_id", "seed", "status",
                "score", "stored_score", "replay_agrees"])
    for sec in report["sections"]:
        for s in sec["sessions"]:
            w.writerow([sec["difficulty"], sec["strategy"], sec["agent"], s["task_id"],
                        s["session_id"], s["seed"], s["status"],
                        "" if s["score"] is None else f"{s['score']:.6f}",
                        "" if s["stored_score"] is None else f"{s['stored_score']:.6f}",
                        s["replay_agrees"]])
    return buf.getvalue()


def write_report(report: dict, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jpath, cpath = out / "report.json", out / "report.csv"
    jpath.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    cpath.write_text(report_csv(report), encoding="utf-8")
    return jpath, cpath
