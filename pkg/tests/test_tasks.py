import json

import pytest

from lmtk.tasks import (
    BENCHMARK,
    BENCHMARK_BY_NAME,
    Example,
    TaskError,
    TaskSpec,
    Templates,
    load_task_dir,
    load_task_root,
)


def _ex(text, gold, cands=("sim", "não")):
    return Example(input=text, gold=gold, candidates=tuple(cands))


def _spec(**over):
    base = dict(
        name="t",
        origin="native",
        task_kind="binary",
        instruction="Responda sim ou não.",
        shot_pool=(_ex("a?", "sim"), _ex("b?", "não")),
        test_set=(_ex("c?", "sim"),),
        preferred_metric="accuracy",
        random_score=50.0,
        high_score=100.0,
        balanced_shots=True,
        default_num_shots=2,
        answer_mode="rank",
    )
    base.update(over)
    return TaskSpec(**base)


# ---------------------------------------------------------------------------
# Example / TaskSpec


def test_gold_text_variants():
    assert Example("x", "rótulo").gold_text() == "rótulo"
    assert Example("x", 2.5).gold_text() == "2.5"
    assert Example("x", 3.0).gold_text() == "3"
    assert Example("x", ("primeira", "segunda")).gold_text() == "primeira"


def test_valid_spec_passes():
    _spec().validate()


def test_validate_rejections():
    cases = [
        dict(origin="dubbed"),
        dict(task_kind="ranking"),
        dict(preferred_metric="bleu"),
        dict(answer_mode="beam"),
        dict(random_score=100.0, high_score=100.0),
        dict(default_num_shots=-1),
        dict(preferred_metric="f1_binary"),  # needs positive_label
        dict(preferred_metric="f1_macro"),  # needs labels
        dict(max_gen_tokens=0),
    ]
    for over in cases:
        with pytest.raises(TaskError):
            _spec(**over).validate()


def test_rank_mode_requires_candidates():
    bad = Example("c?", "sim")  # no candidates
    with pytest.raises(TaskError, match="lacks candidates"):
        _spec(test_set=(bad,)).validate()


def test_qa_gold_must_be_answer_set():
    with pytest.raises(TaskError, match="answer set"):
        _spec(
            task_kind="extractive_qa",
            preferred_metric="token_f1",
            random_score=0.0,
            answer_mode="generate",
            shot_pool=(Example("q?", "não é tupla"),),
            test_set=(Example("w?", ("ok",)),),
        ).validate()


def test_pool_test_overlap_rejected():
    with pytest.raises(TaskError, match="overlap"):
        _spec(test_set=(_ex("a?", "sim"),)).validate()


# ---------------------------------------------------------------------------
# registry invariants


def test_benchmark_size_and_split():
    assert len(BENCHMARK) == 14
    origins = [m.origin for m in BENCHMARK]
    assert origins.count("native") == 7
    assert origins.count("translated") == 7


def test_benchmark_names_unique():
    names = [m.name for m in BENCHMARK]
    assert len(set(names)) == 14
    assert BENCHMARK_BY_NAME["faquad"].preferred_metric == "token_f1"


def test_benchmark_unbalanced_set():
    unbalanced = {m.name for m in BENCHMARK if not m.balanced_shots}
    assert unbalanced == {"bluex", "enem-challenge", "enem-2022", "faquad", "mkqa", "wsc"}


def test_benchmark_score_ranges():
    for m in BENCHMARK:
        assert m.random_score < m.high_score
        assert m.default_num_shots >= 1
        if m.answer_mode in ("rank", "rank_char_norm"):
            assert m.num_classes is not None and m.num_classes >= 2


def test_benchmark_metric_prerequisites():
    # chance level of a k-way rank task is 100/k except for macro-F1 tasks
    for m in BENCHMARK:
        if m.preferred_metric == "accuracy" and m.answer_mode == "rank":
            assert m.random_score == pytest.approx(100.0 / m.num_classes)


# ---------------------------------------------------------------------------
# directory loader


def _write_task(tmp_path, meta=None, shots=None, tests=None):
    d = tmp_path / "toy"
    d.mkdir(exist_ok=True)
    base_meta = {
        "name": "toy",
        "origin": "native",
        "task_kind": "binary",
        "instruction": "Responda.",
        "preferred_metric": "accuracy",
        "random_score": 50,
        "high_score": 100,
        "balanced_shots": True,
        "default_num_shots": 1,
        "answer_mode": "rank",
        "num_classes": 2,
    }
    if meta:
        base_meta.update(meta)
    (d / "task.json").write_text(json.dumps(base_meta), encoding="utf-8")
    shots = shots if shots is not None else [
        {"id": "s1", "input": "a?", "gold": "sim", "candidates": ["sim", "não"]},
    ]
    tests = tests if tests is not None else [
        {"id": "t1", "input": "b?", "gold": "não", "candidates": ["sim", "não"]},
    ]
    (d / "shots.jsonl").write_text(
        "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in shots), encoding="utf-8")
    (d / "test.jsonl").write_text(
        "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in tests), encoding="utf-8")
    return d


def test_load_task_dir(tmp_path):
    spec = load_task_dir(_write_task(tmp_path))
    assert spec.name == "toy"
    assert spec.shot_pool[0].example_id == "s1"
    assert spec.test_set[0].candidates == ("sim", "não")
    assert spec.templates == Templates()


def test_load_task_dir_custom_templates(tmp_path):
    d = _write_task(tmp_path, meta={"templates": {"shot": "P: {input}\nR: {label}"}})
    spec = load_task_dir(d)
    assert spec.templates.shot == "P: {input}\nR: {label}"
    assert spec.templates.separator == "\n\n"


def test_load_rejects_unknown_meta_key(tmp_path):
    d = _write_task(tmp_path, meta={"surprise": 1})
    with pytest.raises(TaskError, match="surprise"):
        load_task_dir(d)


def test_load_rejects_unknown_example_key(tmp_path):
    d = _write_task(tmp_path, shots=[
        {"input": "a?", "gold": "sim", "candidates": ["sim", "não"], "note": "x"},
    ])
    with pytest.raises(TaskError, match=r"shots\.jsonl:1.*note"):
        load_task_dir(d)


def test_load_rejects_missing_required_meta(tmp_path):
    d = _write_task(tmp_path)
    meta = json.loads((d / "task.json").read_text(encoding="utf-8"))
    del meta["instruction"]
    (d / "task.json").write_text(json.dumps(meta), encoding="utf-8")
    with pytest.raises(TaskError, match="instruction"):
        load_task_dir(d)


def test_load_parses_gold_types(tmp_path):
    d = _write_task(
        tmp_path,
        meta={"task_kind": "extractive_qa", "preferred_metric": "token_f1",
              "random_score": 0, "answer_mode": "generate"},
        shots=[{"input": "a?", "gold": ["x", "y"]}],
        tests=[{"input": "b?", "gold": ["z"]}],
    )
    spec = load_task_dir(d)
    assert spec.shot_pool[0].gold == ("x", "y")


def test_load_rejects_boolean_gold(tmp_path):
    d = _write_task(tmp_path, shots=[
        {"input": "a?", "gold": True, "candidates": ["sim", "não"]},
    ])
    with pytest.raises(TaskError, match="gold"):
        load_task_dir(d)


def test_load_task_root_sorted(tmp_path):
    for name in ("zeta", "alfa"):
        d = tmp_path / name
        d.mkdir()
        src = _write_task(tmp_path)
        for f in ("task.json", "shots.jsonl", "test.jsonl"):
            content = (src / f).read_text(encoding="utf-8")
            (d / f).write_text(content.replace('"toy"', f'"{name}"'), encoding="utf-8")
    (tmp_path / "toy" / "task.json").unlink()  # leave a non-task dir behind
    specs = load_task_root(tmp_path)
    assert [s.name for s in specs] == ["alfa", "zeta"]


def test_load_task_root_empty(tmp_path):
    with pytest.raises(TaskError, match="no task directories"):
        load_task_root(tmp_path)
