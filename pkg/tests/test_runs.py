from __future__ import annotations

import json

import pytest

from crowdeval.corpus import DASH
from crowdeval.labels import LabelSummary, read_gold
from crowdeval.runs import (
    Run,
    RunError,
    compare,
    emit_submission,
    generate_baseline,
    load_run,
    load_run_file,
)


def dumps(doc):
    return json.dumps(doc, ensure_ascii=False)


def test_load_hard_run():
    run = load_run(dumps([
        {"id": "a", "value": "YES"},
        {"id": "b", "value": "NO"},
    ]), task=1, name="sys")
    assert run.kind == "hard"
    assert run.task == "task1"
    assert [p.hard for p in run.predictions] == ["YES", "NO"]
    assert all(p.soft is None for p in run.predictions)


def test_load_soft_run_preserves_values():
    run = load_run(dumps([
        {"id": "a", "value": {"YES": 0.75, "NO": 0.25}},
    ]), task=1)
    assert run.kind == "soft"
    assert run.predictions[0].soft == {"YES": 0.75, "NO": 0.25}


def test_load_run_integer_ids_coerced():
    run = load_run(dumps([{"id": 400001, "value": "YES"}]), task=1)
    assert run.predictions[0].id == "400001"


def test_dash_allowed_only_for_intent_task():
    run = load_run(dumps([{"id": "a", "value": "-"}]), task=2)
    assert run.predictions[0].hard == DASH
    with pytest.raises(RunError, match="unknown label"):
        load_run(dumps([{"id": "a", "value": "-"}]), task=1)


def test_load_run_rejects_wrong_sums():
    with pytest.raises(RunError, match="sum to 0.9"):
        load_run(dumps([{"id": "a", "value": {"YES": 0.6, "NO": 0.3}}]), task=1)
    with pytest.raises(RunError, match="sum to 1.2"):
        load_run(dumps([{"id": "a", "value": {"YES": 0.9, "NO": 0.3}}]), task=1)


def test_load_run_tolerates_tiny_sum_error():
    run = load_run(dumps([{"id": "a", "value": {"YES": 0.5000000001, "NO": 0.5}}]),
                   task=1)
    assert run.kind == "soft"


def test_load_run_rejects_unknown_and_missing_categories():
    with pytest.raises(RunError, match="unknown label 'MAYBE'"):
        load_run(dumps([{"id": "a", "value": {"YES": 0.5, "NO": 0.5, "MAYBE": 0.0}}]),
                 task=1)
    with pytest.raises(RunError, match="missing probability for 'NO'"):
        load_run(dumps([{"id": "a", "value": {"YES": 1.0}}]), task=1)


def test_load_run_rejects_bad_weights():
    with pytest.raises(RunError, match="invalid probability"):
        load_run(dumps([{"id": "a", "value": {"YES": -0.1, "NO": 1.1}}]), task=1)
    with pytest.raises(RunError, match="invalid probability"):
        load_run(dumps([{"id": "a", "value": {"YES": True, "NO": 0.0}}]), task=1)


def test_load_run_rejects_duplicates_and_mixing():
    with pytest.raises(RunError, match="duplicate id"):
        load_run(dumps([
            {"id": "a", "value": "YES"}, {"id": "a", "value": "NO"},
        ]), task=1)
    with pytest.raises(RunError, match="soft value in a hard run"):
        load_run(dumps([
            {"id": "a", "value": "YES"},
            {"id": "b", "value": {"YES": 1.0, "NO": 0.0}},
        ]), task=1)


def test_load_run_rejects_malformed_entries():
    with pytest.raises(RunError, match="exactly 'id' and 'value'"):
        load_run(dumps([{"id": "a", "value": "YES", "note": "hi"}]), task=1)
    with pytest.raises(RunError, match="exactly 'id' and 'value'"):
        load_run(dumps([{"id": "a"}]), task=1)
    with pytest.raises(RunError, match="array"):
        load_run(dumps({"a": "YES"}), task=1)
    with pytest.raises(RunError, match="malformed JSON"):
        load_run("[{,]", task=1)
    with pytest.raises(RunError, match="'id'"):
        load_run(dumps([{"id": "", "value": "YES"}]), task=1)
    with pytest.raises(RunError, match="label or a probability map"):
        load_run(dumps([{"id": "a", "value": 3}]), task=1)


def test_emit_round_trips_and_is_deterministic(data_dir):
    for name, task in (("run_t1_hard.json", 1), ("run_t1_soft.json", 1),
                       ("run_t2_hard.json", 2)):
        raw = (data_dir / name).read_bytes()
        run = load_run(raw, task, name="x")
        assert emit_submission(run) == raw  # golden files are in emission form
        again = load_run(emit_submission(run), task, name="x")
        assert again.predictions == run.predictions
        assert again.kind == run.kind


def test_emit_writes_dash_sentinel():
    run = load_run(dumps([{"id": "a", "value": "-"}]), task=2)
    assert b'"value": "-"' in emit_submission(run)


def test_load_run_file_uses_stem_as_name(data_dir):
    run = load_run_file(data_dir / "run_t1_hard.json", 1)
    assert run.name == "run_t1_hard"
    assert run.source.endswith("run_t1_hard.json")


def gold_fixture():
    return [
        LabelSummary(id="1", soft={"YES": 2 / 3, "NO": 1 / 3}, hard="YES", n_counted=6),
        LabelSummary(id="2", soft={"NO": 1.0}, hard="NO", n_counted=6),
        LabelSummary(id="3", soft={"YES": 0.5, "NO": 0.5}, hard=None, n_counted=6),
        LabelSummary(id="4", soft={"NO": 5 / 6, "YES": 1 / 6}, hard="NO", n_counted=6),
    ]


def test_generate_baseline_gold_copies_labels():
    run = generate_baseline("gold", gold_fixture(), 1)
    assert run.kind == "soft"
    assert run.name == "gold"
    by_id = {p.id: p for p in run.predictions}
    assert by_id["1"].hard == "YES"
    assert by_id["1"].soft == {"YES": 2 / 3, "NO": 1 / 3}
    assert by_id["3"].hard is None  # tie item stays hard-less
    assert by_id["3"].soft == {"YES": 0.5, "NO": 0.5}


def test_generate_baseline_majority_and_minority():
    gold = gold_fixture()
    major = generate_baseline("majority-class", gold, 1)
    minor = generate_baseline("minority-class", gold, 1)
    assert {p.hard for p in major.predictions} == {"NO"}
    assert {p.hard for p in minor.predictions} == {"YES"}
    assert major.predictions[0].soft == {"YES": 0.0, "NO": 1.0}
    assert len(major.predictions) == 4  # covers the tie item too
    assert major.name == "majority-class"


def test_generate_baseline_tie_prefers_earlier_category():
    gold = [
        LabelSummary(id="1", soft={}, hard="YES", n_counted=6),
        LabelSummary(id="2", soft={}, hard="NO", n_counted=6),
    ]
    assert generate_baseline("majority-class", gold, 1).predictions[0].hard == "YES"
    assert generate_baseline("minority-class", gold, 1).predictions[0].hard == "YES"


def test_generate_baseline_task2_dash_mass_counts_as_no():
    gold = [
        LabelSummary(id="1", soft={"NO": 1.0}, hard=DASH, n_counted=6),
        LabelSummary(id="2", soft={"NO": 1.0}, hard=DASH, n_counted=6),
        LabelSummary(id="3", soft={"DIRECT": 1.0}, hard="DIRECT", n_counted=6),
    ]
    major = generate_baseline("majority-class", gold, 2)
    assert {p.hard for p in major.predictions} == {"NO"}


def test_generate_baseline_errors():
    with pytest.raises(RunError, match="unknown baseline"):
        generate_baseline("oracle", gold_fixture(), 1)
    with pytest.raises(RunError, match="empty gold"):
        generate_baseline("gold", [], 1)
    tie_only = [LabelSummary(id="1", soft={"YES": 0.5, "NO": 0.5}, hard=None,
                             n_counted=6)]
    with pytest.raises(RunError, match="no hard labels"):
        generate_baseline("majority-class", tie_only, 1)


def test_compare_baselines_first_and_gold_dominates(data_dir):
    gold = read_gold((data_dir / "gold_task1.json").read_bytes())
    run = load_run_file(data_dir / "run_t1_hard.json", 1)
    reports = compare([run], gold, task=1)
    assert [r.name for r in reports] == \
        ["gold", "majority-class", "minority-class", "run_t1_hard"]
    gold_report = reports[0]
    assert gold_report.icm_hard_norm == 1.0
    assert gold_report.icm_soft_norm == 1.0
    assert gold_report.f1 == 1.0
    for other in reports[1:]:
        assert other.icm_hard_norm <= gold_report.icm_hard_norm
        assert other.f1 <= gold_report.f1
    assert all(r.scope == "ALL" for r in reports)


def test_compare_lang_scoping(data_dir):
    gold = read_gold((data_dir / "gold_task1.json").read_bytes())
    reports = compare([], gold, task=1, lang="EN")
    assert all(r.scope == "EN" for r in reports)
    en_items = [s for s in gold if s.lang == "EN"]
    assert reports[0].n_scored["ICM-Soft"] == len([s for s in en_items if s.soft])


def test_compare_rejects_task_mismatch(data_dir):
    gold = read_gold((data_dir / "gold_task1.json").read_bytes())
    t2 = load_run_file(data_dir / "run_t2_hard.json", 2)
    with pytest.raises(RunError, match="task"):
        compare([t2], gold, task=1)


def test_compare_needs_task_or_runs():
    with pytest.raises(RunError, match="compare"):
        compare([], gold_fixture())
    assert len(compare([], gold_fixture(), task=1)) == 3  # just the baselines
