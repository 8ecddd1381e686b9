"""Command-line entry point: ``reflectbench run | chance | report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from reflectbench.agents import (
    STRATEGIES,
    AgentTransportError,
    HumanAgent,
    RateLimiter,
    RemoteAgent,
    RemoteEndpoint,
    make_baseline,
)
from reflectbench.analysis.chance import UnsupportedTask, estimate_chance
from reflectbench.analysis.report import build_report, write_report
from reflectbench.config import TASKS, ConfigError, TaskConfig, preset
from reflectbench.rng import derive_seed
from reflectbench.session import SessionAborted, run_session
from reflectbench.tasks import make_env

log = logging.getLogger("reflectbench")

EXIT_OK, EXIT_USAGE, EXIT_TRANSPORT, EXIT_VALIDATION = 0, 2, 3, 4

RUN_DEFAULTS: dict[str, Any] = {
    "tasks": "all",
    "agent": "baseline:random",
    "strategy": "free",
    "difficulty": "easy",
    "sessions": None,
    "seed": 0,
    "out": "results",
    "parallel": 1,
    "max_retries": 1,
    "endpoint": "https://api.openai.com/v1",
    "rpm": 60.0,
    "timeout": 60.0,
    "max_attempts": 3,
    "temperature": None,
    "chance_sims": 10_000,
    "parameters": {},
}


class UsageError(Exception):
    pass


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_params(items: list[str]) -> dict[str, dict[str, Any]]:
    """``task.key=value`` pairs into {task: {key: value}}."""
    out: dict[str, dict[str, Any]] = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        task, dot, name = key.partition(".")
        if not sep or not dot or task not in TASKS:
            raise UsageError(f"--param expects task.key=value, got {item!r}")
        out.setdefault(task, {})[name] = _value(value)
    return out


def resolve_tasks(spec) -> list[str]:
    names = spec if isinstance(spec, list) else str(spec).split(",")
    names = [n.strip().lower() for n in names if n.strip()]
    if names == ["all"]:
        return list(TASKS)
    bad = [n for n in names if n not in TASKS]
    if bad:
        raise UsageError(f"unknown task(s): {', '.join(bad)}")
    return names


def task_config(task: str, difficulty: str, overrides: dict[str, Any], seed: int,
                sessions: int | None) -> TaskConfig:
    try:
        return preset(task, difficulty, seed=seed, sessions=sessions, **overrides)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc


def merged_run_options(args: argparse.Namespace) -> dict[str, Any]:
    opts = dict(RUN_DEFAULTS)
    if args.config:
        try:
            opts.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    for key in RUN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None and key != "parameters":
            opts[key] = value
    params = {t: dict(v) for t, v in (opts.get("parameters") or {}).items()}
    for task, kv in parse_params(args.param).items():
        params.setdefault(task, {}).update(kv)
    opts["parameters"] = params
    return opts


def make_agent_factory(opts: dict[str, Any]):
    spec = opts["agent"]
    kind, _, arg = spec.partition(":")
    if kind == "baseline":
        def factory(env):
            try:
                return make_baseline(arg or "random", env)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
        return factory
    if kind == "human":
        return lambda env: HumanAgent()
    if kind == "remote":
        if not arg:
            raise UsageError("--agent remote:<model> needs a model name")
        extra = {} if opts["temperature"] is None else {"temperature": opts["temperature"]}
        endpoint = RemoteEndpoint(opts["endpoint"], arg, timeout=opts["timeout"],
                                  max_attempts=opts["max_attempts"],
                                  requests_per_minute=opts["rpm"], extra=extra)
        if not endpoint.headers().get("Authorization"):
            raise UsageError(f"remote agent needs ${endpoint.api_key_env}")
        limiter = RateLimiter(opts["rpm"])
        return lambda env: RemoteAgent(endpoint, limiter=limiter)
    raise UsageError(f"bad --agent {spec!r}; use baseline:<kind>, remote:<model> or human")


def cmd_run(args: argparse.Namespace) -> int:
    opts = merged_run_options(args)
    if opts["strategy"] not in STRATEGIES:
        raise UsageError(f"unknown strategy {opts['strategy']!r}")
    if opts["difficulty"] not in ("easy", "hard"):
        raise UsageError("--difficulty must be easy or hard (use --param for custom values)")
    tasks = resolve_tasks(opts["tasks"])
    factory = make_agent_factory(opts)
    human = opts["agent"].startswith("human")
    master = int(opts["seed"])
    out = Path(opts["out"])
    tdir = out / "transcripts"

    jobs = []
    for task in tasks:
        cfg = task_config(task, opts["difficulty"], opts["parameters"].get(task, {}), master,
                          1 if human else opts["sessions"])
        for i in range(cfg.sessions):
            jobs.append((cfg, derive_seed(master, task, cfg.difficulty, i)))

    def one(job):
        cfg, seed = job
        env = make_env(cfg, seed)
        agent = factory(env)
        try:
            t, s = run_session(env, agent, opts["strategy"], max_retries=opts["max_retries"],
                               out_dir=tdir)
        except SessionAborted as exc:
            log.error("%s", exc)
            return job, None
        log.info("%s session %s: %.2f", cfg.task_id, t.session_id, s.score)
        return job, s

    workers = 1 if human else max(1, int(opts["parallel"]))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]
    aborted = sum(1 for _, s in results if s is None)

    report = build_report(tdir, chance_sims=int(opts["chance_sims"]))
    jpath, _ = write_report(report, out)
    print(f"{len(results) - aborted} sessions complete, {aborted} aborted; report: {jpath}")
    for sec in report["sections"]:
        means = ", ".join(f"{t}={m:.2f}" for t, m in sec["task_means"].items())
        overall = "n/a" if sec["overall"] is None else f"{sec['overall']:.2f}"
        print(f"[{sec['difficulty']}/{sec['strategy']}] overall={overall} ({means})")
    if aborted:
        return EXIT_TRANSPORT
    return EXIT_VALIDATION if report["disagreements"] else EXIT_OK


def cmd_chance(args: argparse.Namespace) -> int:
    task = args.task.lower()
    if task not in TASKS:
        raise UsageError(f"unknown task {task!r}")
    overrides = parse_params(args.param).get(task, {})
    cfg = task_config(task, args.difficulty, overrides, args.seed, None)
    try:
        est = estimate_chance(cfg, args.policy, args.sims, args.seed, workers=args.workers)
    except UnsupportedTask as exc:
        raise UsageError(str(exc)) from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"chance_{task}_{cfg.difficulty}_{args.policy}_{args.seed}.json"
    path.write_text(json.dumps({**est.to_dict(), "config": cfg.to_dict()}, indent=2,
                               sort_keys=True) + "\n")
    print(f"{task} [{cfg.difficulty}] policy={args.policy} sims={args.sims} seed={args.seed}: "
          f"mean={est.mean:.4f} p95={est.p95:.4f}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    src = Path(args.directory)
    if (src / "transcripts").is_dir():
        src = src / "transcripts"
    try:
        report = build_report(src, chance_sims=args.chance_sims, chance_seed=args.chance_seed)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from exc
    jpath, _ = write_report(report, args.out or Path(args.directory))
    print(f"report: {jpath}")
    for name in report["disagreements"]:
        print(f"DISAGREES WITH REPLAY: {name}")
    return EXIT_VALIDATION if report["disagreements"] else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reflectbench", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run sessions and write transcripts plus a report")
    run.add_argument("--tasks", help="comma-separated task ids or 'all'")
    run.add_argument("--agent", help="baseline:<kind> | remote:<model> | human")
    run.add_argument("--strategy", choices=STRATEGIES)
    run.add_argument("--difficulty", choices=("easy", "hard"))
    run.add_argument("--param", action="append", default=[], metavar="TASK.KEY=VALUE")
    run.add_argument("--sessions", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--config", help="JSON file with run options")
    run.add_argument("--parallel", type=int)
    run.add_argument("--max-retries", dest="max_retries", type=int)
    run.add_argument("--endpoint")
    run.add_argument("--rpm", type=float)
    run.add_argument("--timeout", type=float)
    run.add_argument("--max-attempts", dest="max_attempts", type=int)
    run.add_argument("--temperature", type=float)
    run.add_argument("--chance-sims", dest="chance_sims", type=int)
    run.set_defaults(func=cmd_run)

    ch = sub.add_parser("chance", help="Monte Carlo chance level for one task")
    ch.add_argument("--task", required=True)
    ch.add_argument("--policy", default="uniform")
    ch.add_argument("--sims", type=int, default=1_000_000)
    ch.add_argument("--seed", type=int, default=0)
    ch.add_argument("--difficulty", choices=("easy", "hard"), default="easy")
    ch.add_argument("--param", action="append", default=[], metavar="TASK.KEY=VALUE")
    ch.add_argument("--workers", type=int, default=1)
    ch.add_argument("--out", default="results")
    ch.set_defaults(func=cmd_chance)

    rp = sub.add_parser("report", help="rebuild a report from transcripts by replay")
    rp.add_argument("directory")
    rp.add_argument("--out")
    rp.add_argument("--chance-sims", dest="chance_sims", type=int, default=10_000)
    rp.add_argument("--chance-seed", dest="chance_seed", type=int, default=0)
    rp.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AgentTransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
