from __future__ import annotations

import json
import shutil
import subprocess
import sys

import pytest

from builders import corpus_json, make_instance
from crowdeval.cli import main
from crowdeval.corpus import load_corpus
from crowdeval.fewshot import PromptSpec, build_prompt, sample_exemplars
from crowdeval.labels import summarize_corpus, vocabulary_for, write_gold
from crowdeval.runs import load_run_file


@pytest.fixture()
def paths(data_dir):
    return {
        "corpus": str(data_dir / "corpus.json"),
        "gold1": str(data_dir / "gold_task1.json"),
        "gold2": str(data_dir / "gold_task2.json"),
        "run1": str(data_dir / "run_t1_hard.json"),
        "soft1": str(data_dir / "run_t1_soft.json"),
        "responses": str(data_dir / "responses_task1.jsonl"),
    }


# --- validate ----------------------------------------------------------------------

def test_validate_prints_split_counts(paths, capsys):
    assert main(["validate", paths["corpus"]]) == 0
    out = capsys.readouterr()
    assert out.out.splitlines() == [
        "instances\t12",
        "TRAIN/EN\t4",
        "TRAIN/ES\t4",
        "DEV/EN\t1",
        "DEV/ES\t1",
        "TEST/EN\t1",
        "TEST/ES\t1",
        "warnings\t0",
        "quarantined\t0",
    ]
    assert out.err == ""


def test_validate_lenient_reports_quarantine_and_warnings(tmp_path, capsys):
    broken = make_instance("2")
    broken["labels_task1"] = ["YES"] * 3
    flagged = make_instance("3", lang="es")
    flagged["split"] = "TRAIN_EN"
    doc = corpus_json([make_instance("1"), broken, flagged])
    path = tmp_path / "c.json"
    path.write_text(doc)

    assert main(["validate", str(path)]) == 1  # strict is the default
    assert "error:" in capsys.readouterr().err

    assert main(["validate", str(path), "--mode", "lenient"]) == 0
    out = capsys.readouterr()
    assert "instances\t2" in out.out
    assert "warnings\t2" in out.out
    assert "quarantined\t1" in out.out
    assert out.err.count("warning:") == 2


def test_validate_missing_file_is_io_error(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "nope.json")]) == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_or_flag_is_usage_error(capsys):
    assert main(["frobnicate"]) == 1
    assert main([]) == 1
    assert main(["validate", "x.json", "--mode", "psychic"]) == 1
    capsys.readouterr()


# --- gold --------------------------------------------------------------------------

def test_gold_matches_library_output(paths, tmp_path, capsys):
    out_path = tmp_path / "gold.json"
    assert main(["gold", paths["corpus"], "--task", "1", "-o", str(out_path)]) == 0
    expected = write_gold(summarize_corpus(load_corpus(paths["corpus"]), "1"))
    assert out_path.read_text("utf-8") == expected

    assert main(["gold", paths["corpus"], "--task", "task2"]) == 0
    stdout = capsys.readouterr().out
    expected2 = write_gold(summarize_corpus(load_corpus(paths["corpus"]), "task2"))
    assert stdout == expected2


def test_gold_requires_task(paths, capsys):
    assert main(["gold", paths["corpus"]]) == 1
    assert "--task" in capsys.readouterr().err


# --- baseline ----------------------------------------------------------------------

def test_baseline_kinds_and_inference(paths, tmp_path, capsys):
    gold_ids = set(json.loads(open(paths["gold1"]).read()))
    for kind in ("gold", "majority-class", "minority-class"):
        out_path = tmp_path / f"{kind}.json"
        assert main(["baseline", paths["gold1"], "--kind", kind,
                     "-o", str(out_path)]) == 0
        doc = json.loads(out_path.read_text())
        assert {e["id"] for e in doc} == gold_ids
    # task2 gold is inferred from its own labels (it contains intent categories)
    assert main(["baseline", paths["gold2"], "--kind", "majority-class"]) == 0
    doc = json.loads(capsys.readouterr().out)
    categories = {"NO", "DIRECT", "REPORTED", "JUDGEMENTAL"}
    for entry in doc:
        assert set(entry["value"]) == categories  # dense one-hot soft map
        assert sorted(entry["value"].values()) == [0.0, 0.0, 0.0, 1.0]


def test_baseline_requires_kind(paths, capsys):
    assert main(["baseline", paths["gold1"]]) == 1
    assert "--kind" in capsys.readouterr().err


# --- score -------------------------------------------------------------------------

def gold_self_score_lines(paths, capsys, extra=()):
    assert main(["baseline", paths["gold1"], "--kind", "gold",
                 "-o", "/tmp/_gold_run.json"]) == 0
    capsys.readouterr()
    assert main(["score", paths["gold1"], "/tmp/_gold_run.json", *extra]) == 0
    return capsys.readouterr().out


def test_score_gold_run_is_the_fixed_point(paths, capsys, tmp_path):
    run_path = tmp_path / "gold_run.json"
    assert main(["baseline", paths["gold1"], "--kind", "gold", "-o", str(run_path)]) == 0
    capsys.readouterr()
    assert main(["score", paths["gold1"], str(run_path)]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0].split() == [
        "Run", "ICM-Soft", "ICM-Soft", "Norm", "Cross", "Entropy",
        "ICM-Hard", "ICM-Hard", "Norm", "F1",
    ]
    row = lines[1].split()
    assert row[0] == "gold_run"
    # normalized contrast scores and F1 sit exactly at their ceilings
    assert row[2] == "1.00" and row[5] == "1.00" and row[6] == "1.00"


def test_score_stdout_is_byte_stable(paths, capsys):
    first = gold_self_score_lines(paths, capsys)
    second = gold_self_score_lines(paths, capsys)
    assert first == second


def test_score_lang_scope_changes_numbers(paths, capsys):
    assert main(["score", paths["gold1"], paths["run1"], "--format", "tsv"]) == 0
    overall = capsys.readouterr().out
    assert main(["score", paths["gold1"], paths["run1"], "--format", "tsv",
                 "--lang", "EN"]) == 0
    en_only = capsys.readouterr().out
    assert overall != en_only
    assert overall.splitlines()[0] == en_only.splitlines()[0]  # same header


def test_score_tsv_has_six_decimals(paths, capsys, tmp_path):
    run_path = tmp_path / "gold_run.json"
    assert main(["baseline", paths["gold1"], "--kind", "gold", "-o", str(run_path)]) == 0
    assert main(["score", paths["gold1"], str(run_path), "--format", "tsv"]) == 0
    out = capsys.readouterr().out
    header, row = out.splitlines()
    assert header.split("\t") == ["Run", "ICM-Soft", "ICM-Soft Norm", "Cross Entropy",
                                  "ICM-Hard", "ICM-Hard Norm", "F1"]
    cells = row.split("\t")
    assert cells[2] == "1.000000"
    assert cells[-1] == "1.000000"


def test_score_soft_run_renders_all_columns(paths, capsys):
    assert main(["score", paths["gold1"], paths["soft1"]]) == 0
    out = capsys.readouterr().out
    assert "-" not in out.splitlines()[1].split()  # soft run: nothing uncomputable


def test_score_hard_run_leaves_soft_columns_blank(paths, capsys):
    assert main(["score", paths["gold1"], paths["run1"], "--format", "tsv"]) == 0
    row = capsys.readouterr().out.splitlines()[1].split("\t")
    assert row[1] == "-" and row[2] == "-" and row[3] == "-"
    assert row[4] != "-" and row[6] != "-"


def test_score_corrupt_run_is_invalid_input(paths, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('[{"id": "100001"}]')
    assert main(["score", paths["gold1"], str(bad)]) == 1
    assert "error:" in capsys.readouterr().err


def test_score_missing_gold_is_io_error(tmp_path, paths, capsys):
    assert main(["score", str(tmp_path / "gone.json"), paths["run1"]]) == 2
    capsys.readouterr()


# --- report ------------------------------------------------------------------------

def test_report_sections_and_baseline_rows(paths, capsys):
    assert main(["report", paths["gold1"], paths["run1"]]) == 0
    out = capsys.readouterr().out
    head_positions = [out.index("# Overall"), out.index("# EN"), out.index("# ES")]
    assert head_positions == sorted(head_positions)
    for block in out.split("# ")[1:]:
        rows = [line.split()[0] for line in block.splitlines()[2:] if line]
        assert rows == ["gold", "majority-class", "minority-class", "run_t1_hard"]


def test_report_tsv_carries_scope_column(paths, capsys):
    assert main(["report", paths["gold1"], paths["run1"], "--format", "tsv"]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0].split("\t")[:2] == ["Run", "Scope"]
    scopes = [line.split("\t")[1] for line in lines[1:]]
    assert scopes == ["ALL"] * 4 + ["EN"] * 4 + ["ES"] * 4


def test_report_without_runs_lists_baselines(paths, capsys):
    assert main(["report", paths["gold2"]]) == 0
    out = capsys.readouterr().out
    assert "majority-class" in out and "minority-class" in out


# --- prompt ------------------------------------------------------------------------

def test_prompt_matches_library(paths, capsys):
    assert main(["prompt", paths["corpus"], "--target-id", "100006",
                 "--task", "1", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    corpus = load_corpus(paths["corpus"])
    target = next(i for i in corpus if i.id == "100006")
    spec = PromptSpec(
        task="task1",
        exemplars=sample_exemplars(corpus, "1", 3, exclude_id="100006"),
        target_id="100006",
        target_text=target.text,
        target_lang=target.lang,
        seed=3,
    )
    assert out == build_prompt(spec) + "\n"


def test_prompt_unknown_target(paths, capsys):
    assert main(["prompt", paths["corpus"], "--target-id", "424242",
                 "--task", "1"]) == 1
    assert "424242" in capsys.readouterr().err


# --- annotate ----------------------------------------------------------------------

def test_annotate_dry_run_end_to_end(paths, tmp_path, capsys):
    run_path = tmp_path / "llm_run.json"
    log_path = tmp_path / "annotations.jsonl"
    assert main(["annotate", paths["corpus"], "--task", "1",
                 "--dry-run", paths["responses"],
                 "-o", str(run_path), "--annotations-out", str(log_path)]) == 0
    err = capsys.readouterr().err
    assert "annotated 2 targets: 2 ok" in err

    doc = json.loads(run_path.read_text())
    assert {e["id"]: e["value"] for e in doc} == {"100006": "NO", "200006": "YES"}

    records = [json.loads(line) for line in log_path.read_text().splitlines()]
    assert {r["id"] for r in records} == {"100006", "200006"}
    assert all(r["status"] == "ok" and r["attempts"] == 1 for r in records)
    assert any("I would call this one YES." == r["raw_response"] for r in records)


def test_annotate_output_loads_as_a_run(paths, tmp_path, capsys):
    run_path = tmp_path / "llm_run.json"
    assert main(["annotate", paths["corpus"], "--task", "1",
                 "--dry-run", paths["responses"], "-o", str(run_path)]) == 0
    capsys.readouterr()
    corpus = load_corpus(paths["corpus"])
    run = load_run_file(run_path, vocabulary_for(1))
    assert {p.id for p in run.predictions} == {
        i.id for i in corpus if i.split == "TEST"
    }


def test_annotate_requires_endpoint_or_dry_run(paths, capsys):
    assert main(["annotate", paths["corpus"], "--task", "1"]) == 1
    assert "endpoint" in capsys.readouterr().err


def test_annotate_missing_responses_file_is_io_error(paths, tmp_path, capsys):
    assert main(["annotate", paths["corpus"], "--task", "1",
                 "--dry-run", str(tmp_path / "gone.jsonl")]) == 2
    capsys.readouterr()


def test_annotate_explicit_targets_file(paths, tmp_path, capsys):
    targets_doc = corpus_json([make_instance("100001", lang="en", split="TRAIN")])
    # reuse a TRAIN instance as an ad-hoc target list
    targets_path = tmp_path / "targets.json"
    targets_path.write_text(targets_doc)
    responses = tmp_path / "responses.jsonl"
    responses.write_text('{"id": "100001", "response": "YES"}\n')
    run_path = tmp_path / "run.json"
    assert main(["annotate", paths["corpus"], "--task", "1",
                 "--targets", str(targets_path), "--dry-run", str(responses),
                 "-o", str(run_path)]) == 0
    capsys.readouterr()
    doc = json.loads(run_path.read_text())
    assert doc == [{"id": "100001", "value": "YES"}]


# --- console script ----------------------------------------------------------------

def test_console_script_is_installed(paths):
    exe = shutil.which("crowdeval")
    assert exe, "console script 'crowdeval' not on PATH"
    proc = subprocess.run([exe, "validate", paths["corpus"]],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert "instances\t12" in proc.stdout


def test_module_entry_point(paths):
    proc = subprocess.run(
        [sys.executable, "-m", "crowdeval.cli", "score", paths["gold1"], paths["run1"]],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].startswith("Run")
