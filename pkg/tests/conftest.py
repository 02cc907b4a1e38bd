import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import fsforge


@pytest.fixture(scope="session")
def max_text():
    return fsforge.load_fixture("max_catalog.fst")


@pytest.fixture(scope="session")
def ethics_text():
    return fsforge.load_fixture("ethics_board.fst")


@pytest.fixture()
def max_template(max_text):
    return fsforge.parse_template(max_text)


@pytest.fixture()
def ethics_template(ethics_text):
    return fsforge.parse_template(ethics_text)


@pytest.fixture()
def store(tmp_path):
    return fsforge.open_store(tmp_path / "store")


def fill_sheet(store, template, subject="objdet", version="1",
               base_ts="2021-04-01T09:{:02d}:00Z", question_ids=None):
    """Answer questions with deterministic timestamps; returns the subject key."""
    from fsforge.store import AnswerValue

    answers = {
        "text": lambda q: AnswerValue("text", text=f"answer to {q.id}"),
        "longtext": lambda q: AnswerValue("longtext", text=f"long answer to {q.id}\nsecond line"),
        "number": lambda q: AnswerValue("number", number=12.5, unit=q.spec.unit),
        "metricset": lambda q: AnswerValue(
            "metricset", metrics={m: 0.9 - 0.1 * i for i, m in enumerate(q.spec.metrics)}),
        "enum": lambda q: AnswerValue("enum", choice=q.spec.choices[0]),
        "uri": lambda q: AnswerValue("uri", uri=f"https://example.org/{q.id}"),
        "flag": lambda q: AnswerValue("flag", flag=True),
    }
    for i, q in enumerate(template.all_questions()):
        if question_ids is not None and q.id not in question_ids:
            continue
        store.record_fact(
            subject_id=subject, subject_version=version, template=template,
            question_id=q.id, value=answers[q.spec.kind](q), role=q.role,
            author="tester", source=q.source, recorded_at=base_ts.format(i))
    return subject, version
