import json

import pytest

import fsforge
from fsforge.cli import run
from fsforge.render import render_summary
from fsforge.service import canonical_json, gate_to_dict
from fsforge.compliance import check_stage_gate
from fsforge.store import open_store

AS_OF = "2021-05-01T00:00:00Z"


@pytest.fixture()
def max_file(tmp_path, max_text):
    path = tmp_path / "max_catalog.fst"
    path.write_text(max_text, encoding="utf-8")
    return str(path)


def fact_add_args(store_dir, max_file, qid, value, role, ts):
    return ["fact", "add", "--store", store_dir, "--subject", "objdet",
            "--version", "1", "--template", max_file, "--question", qid,
            "--role", role, "--recorded-at", ts, "--value", json.dumps(value)]


def test_template_lint_ok(max_file, capsys):
    assert run(["template", "lint", max_file]) == 0
    out = capsys.readouterr()
    assert out.out == ""  # warnings, if any, go to stderr


def test_template_lint_reports_parse_errors(tmp_path, capsys):
    bad = tmp_path / "bad.fst"
    bad.write_text('template "t" v1\nsection "A"\n  question q1 "a?"\n'
                   '  question q1 "b?"\nend\n')
    assert run(["template", "lint", str(bad)]) == 1
    assert "duplicate question id" in capsys.readouterr().err


def test_template_derive(tmp_path, ethics_text, capsys):
    path = tmp_path / "ethics.fst"
    path.write_text(ethics_text)
    assert run(["template", "derive", str(path), "--audience", "developer"]) == 0
    out = capsys.readouterr().out
    assert "GDPR" not in out
    assert fsforge.parse_template(out).name == "ethics_board@developer"


def test_template_diff(tmp_path, max_text, max_file, capsys):
    new = tmp_path / "new.fst"
    new.write_text(max_text.replace("What is this model for?", "Why this model?"))
    assert run(["template", "diff", max_file, str(new)]) == 0
    diff = json.loads(capsys.readouterr().out)
    assert diff["reworded"] == [{"id": "q1", "old": "What is this model for?",
                                 "new": "Why this model?"}]


def test_fact_add_and_render_summary(tmp_path, max_file, capsys):
    store_dir = str(tmp_path / "store")
    assert run(fact_add_args(store_dir, max_file, "q1",
                             {"kind": "text", "text": "Finds objects."},
                             "business_owner", "2021-04-01T09:00:00Z")) == 0
    record_id = capsys.readouterr().out.strip()
    assert record_id.startswith("r")
    assert run(["sheet", "render", "--store", store_dir, "--subject", "objdet",
                "--version", "1", "--template", max_file, "--format", "summary",
                "--as-of", AS_OF]) == 0
    out = capsys.readouterr().out
    assert "Finds objects." in out
    assert "completeness 1/10" in out


def test_render_empty_store_footer(tmp_path, max_file, capsys):
    store_dir = str(tmp_path / "store")
    assert run(["sheet", "render", "--store", store_dir, "--subject", "objdet",
                "--version", "1", "--template", max_file, "--format", "summary",
                "--as-of", AS_OF]) == 0
    assert "completeness 0/10" in capsys.readouterr().out


def test_fact_add_validation_failure_exit_1(tmp_path, max_file, capsys):
    store_dir = str(tmp_path / "store")
    code = run(fact_add_args(store_dir, max_file, "q6",
                             {"kind": "flag", "flag": True},
                             "data_scientist", "2021-04-01T09:00:00Z"))
    assert code == 1
    assert "kind mismatch" in capsys.readouterr().err


def test_gate_check_failure_prints_blocking(tmp_path, max_file, capsys):
    store_dir = str(tmp_path / "store")
    assert run(["gate", "check", "--store", store_dir, "--subject", "objdet",
                "--version", "1", "--template", max_file,
                "--stage", "validation"]) == 1
    body = json.loads(capsys.readouterr().out)
    assert body["pass"] is False
    assert {b["question_id"] for b in body["blocking"]} == \
        {f"q{i}" for i in range(1, 11)}


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as excinfo:
        run(["sheet", "render", "--store"])
    assert excinfo.value.code == 2


def test_missing_file_exits_3(tmp_path, capsys):
    assert run(["template", "lint", str(tmp_path / "nope.fst")]) == 3


def test_eval_workflow(tmp_path, max_file, max_template, capsys):
    store_dir = str(tmp_path / "store")
    ids = [q.id for q in max_template.all_questions()]
    session_ids = []
    for _ in range(2):
        assert run(["eval", "new", "--store", store_dir, "--kind", "content_eval",
                    "--template", max_file, "--evaluator", "carmen",
                    "--role", "model_validator", "--subject", "objdet",
                    "--subject-version", "1"]) == 0
        session_ids.append(capsys.readouterr().out.strip())
    for sid in session_ids:
        assert run(["eval", "respond", "--store", store_dir, "--session", sid,
                    "--item", "4", "--flag", "extraneous", "--question", "q9",
                    "--note", "never used"]) == 0
        assert run(["eval", "rank", "--store", store_dir, "--session", sid,
                    "--template", max_file]
                   + [q for q in ids if q != "q9"] + ["q9"]) == 0
    capsys.readouterr()
    assert run(["eval", "suggest", "--store", store_dir,
                "--template", max_file]) == 0
    report = json.loads(capsys.readouterr().out)
    assert {(s["action"], s["target"]) for s in report["suggestions"]} == \
        {("remove", "q9")}
    assert run(["eval", "report", "--store", store_dir,
                "--template", max_file]) == 0
    assert "remove 'q9'" in capsys.readouterr().out


def test_cli_render_matches_library_bytes(tmp_path, max_file, max_template, capsys):
    """CLI output is byte-equal to the library call's serialization."""
    store_dir = str(tmp_path / "store")
    run(fact_add_args(store_dir, max_file, "q1",
                      {"kind": "text", "text": "Finds objects."},
                      "business_owner", "2021-04-01T09:00:00Z"))
    capsys.readouterr()
    run(["sheet", "render", "--store", store_dir, "--subject", "objdet",
         "--version", "1", "--template", max_file, "--format", "report",
         "--as-of", AS_OF])
    cli_out = capsys.readouterr().out
    store = open_store(store_dir)
    sheet = store.assemble_factsheet("objdet", "1", max_template, AS_OF)
    assert cli_out == fsforge.render_report(sheet, max_template).media

    run(["gate", "check", "--store", store_dir, "--subject", "objdet",
         "--version", "1", "--template", max_file, "--stage", "conception",
         "--as-of", AS_OF])
    cli_out = capsys.readouterr().out
    decision = check_stage_gate(sheet, max_template, "conception")
    assert cli_out == canonical_json(gate_to_dict(decision))


def test_determinism_same_inputs_same_bytes(tmp_path, max_file, capsys):
    store_dir = str(tmp_path / "store")
    run(fact_add_args(store_dir, max_file, "q1",
                      {"kind": "text", "text": "v"},
                      "business_owner", "2021-04-01T09:00:00Z"))
    capsys.readouterr()
    outputs = []
    for _ in range(2):
        run(["sheet", "render", "--store", store_dir, "--subject", "objdet",
             "--version", "1", "--template", max_file, "--format", "machine",
             "--as-of", AS_OF])
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]


def test_render_summary_footer_matches_library(tmp_path, max_file, max_template,
                                               capsys):
    store_dir = str(tmp_path / "store")
    run(["sheet", "render", "--store", store_dir, "--subject", "objdet",
         "--version", "1", "--template", max_file, "--format", "summary",
         "--as-of", AS_OF])
    cli_out = capsys.readouterr().out
    store = open_store(store_dir)
    sheet = store.assemble_factsheet("objdet", "1", max_template, AS_OF)
    assert cli_out == render_summary(sheet, max_template).media
