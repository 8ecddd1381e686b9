import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from reflectbench.agents import make_baseline
from reflectbench.analysis.report import (
    aggregate,
    build_report,
    chance_threshold,
    collect,
)
from reflectbench.config import SCORED_TASKS, preset
from reflectbench.session import run_session
from reflectbench.tasks import make_env
from reflectbench.tasks.base import TaskScore

GPT4O_COT = {"wpt": 43.92, "wcst": 68.75, "nback": 95.19, "dcigt": 61.80, "prlt": 70.66,
             "oddball": 33.43}


def test_all_hundred():
    assert aggregate({t: [100.0] for t in SCORED_TASKS}).overall == 100.0


def test_published_row_recomputed():
    rep = aggregate({t: [v] for t, v in GPT4O_COT.items()})
    assert rep.overall == pytest.approx(sum(GPT4O_COT.values()) / 6)
    assert rep.overall == pytest.approx(62.29, abs=0.005)


def test_mbt_excluded_but_reported():
    scores = {t: [50.0] for t in SCORED_TASKS} | {"mbt": [0.0]}
    rep = aggregate(scores)
    assert rep.overall == 50.0 and rep.mbt == 0.0 and "mbt" in rep.task_means


def test_missing_task_marks_partial():
    rep = aggregate({"wpt": [60.0], "prlt": [80.0]})
    assert rep.partial and rep.overall == 70.0
    assert set(rep.absent) == set(SCORED_TASKS) - {"wpt", "prlt"}


@given(st.dictionaries(st.sampled_from(SCORED_TASKS + ("mbt",)),
                       st.lists(st.floats(0, 100), min_size=1, max_size=4), min_size=1),
       st.randoms())
def test_permutation_invariance(scores, rnd):
    flat = [TaskScore(t, v) for t, vs in scores.items() for v in vs]
    shuffled = flat[:]
    rnd.shuffle(shuffled)
    a, b = aggregate(flat), aggregate(shuffled)
    assert a.task_means.keys() == b.task_means.keys()
    for t in a.task_means:
        assert a.task_means[t] == pytest.approx(b.task_means[t])
    assert (a.overall is None) == (b.overall is None)
    if a.overall is not None:
        assert a.overall == pytest.approx(b.overall)


def test_chance_threshold_uses_random_policies_only():
    ests = [{"policy": "uniform", "p95": 30.0}, {"policy": "random_dimension", "p95": 43.0},
            {"policy": "oracle", "p95": 100.0}]
    assert chance_threshold(ests, "wcst") == 43.0
    assert chance_threshold(ests, "wpt") == 30.0


def write_sessions(tmp_path, difficulty, seeds=(1, 2), task="prlt", kind="wsls"):
    for seed in seeds:
        env = make_env(preset(task, difficulty), seed)
        run_session(env, make_baseline(kind, env), "free", out_dir=tmp_path)


def test_sections_split_by_preset(tmp_path):
    write_sessions(tmp_path, "easy")
    write_sessions(tmp_path, "hard")
    rep = build_report(tmp_path, chance_sims=2000)
    assert [s["difficulty"] for s in rep["sections"]] == ["easy", "hard"]
    assert all(len(s["sessions"]) == 2 for s in rep["sections"])
    assert rep["disagreements"] == []
    easy = rep["sections"][0]
    assert [c["policy"] for c in easy["chance"]["prlt"]] == ["uniform"]
    assert easy["above_chance"]["prlt"] in (True, False)


def test_tampered_score_is_flagged(tmp_path):
    write_sessions(tmp_path, "easy", seeds=(1,))
    path = next(tmp_path.glob("*.jsonl"))
    lines = path.read_text().splitlines()
    head = json.loads(lines[0])
    head["score"]["score"] = 99.0
    lines[0] = json.dumps(head, sort_keys=True)
    path.write_text("\n".join(lines) + "\n")
    (s,) = collect(tmp_path)
    assert not s.agrees and s.score["score"] != 99.0
    assert build_report(tmp_path, chance_sims=0)["disagreements"] == [path.name]


def test_empty_directory(tmp_path):
    with pytest.raises(FileNotFoundError):
        build_report(tmp_path)
