import json

import pytest
from fastapi.testclient import TestClient

import fsforge
from fsforge.compliance import check_stage_gate
from fsforge.render import RENDERERS
from fsforge.service import canonical_json, create_app, gate_to_dict
from fsforge.store import AnswerValue, open_store

AS_OF = "2021-05-01T00:00:00Z"


@pytest.fixture()
def client(tmp_path):
    return TestClient(create_app(tmp_path / "svc"))


@pytest.fixture()
def seeded(client, max_text):
    client.put("/templates/max_catalog/1", content=max_text)
    return client


def post_fact(client, qid, value, role, ts, **extra):
    return client.post("/subjects/objdet/1/facts", headers={"X-Role": role},
                       json={"template": "max_catalog@1", "question_id": qid,
                             "author": "tester", "value": value,
                             "recorded_at": ts, **extra})


class TestTemplates:
    def test_put_and_get_round_trip(self, seeded, max_text):
        r = seeded.get("/templates/max_catalog/1")
        assert r.status_code == 200
        assert fsforge.parse_template(r.text) == fsforge.parse_template(max_text)

    def test_put_duplicate_ids_gives_422_with_positions(self, client):
        bad = ('template "t" v1\nsection "A"\n  question q1 "a?"\n'
               '  question q1 "b?"\nend\n')
        r = client.put("/templates/t/1", content=bad)
        assert r.status_code == 422
        body = r.json()
        assert body["code"] == "template_syntax"
        assert body["diagnostics"][0]["line"] == 4
        assert body["diagnostics"][0]["column"] >= 1

    def test_dry_run_does_not_persist(self, client, max_text):
        r = client.put("/templates/max_catalog/1?dry_run=true", content=max_text)
        assert r.status_code == 200
        assert client.get("/templates/max_catalog/1").status_code == 404

    def test_ref_mismatch_rejected(self, client, max_text):
        r = client.put("/templates/other_name/1", content=max_text)
        assert r.status_code == 422
        assert r.json()["code"] == "template_ref_mismatch"

    def test_audience_view(self, client, ethics_text):
        client.put("/templates/ethics_board/1", content=ethics_text)
        r = client.get("/templates/ethics_board/1?audience=developer")
        assert "GDPR" not in r.text
        r = client.get("/templates/ethics_board/1?audience=regulator")
        assert "GDPR" in r.text

    def test_listing(self, seeded, ethics_text):
        seeded.put("/templates/ethics_board/1", content=ethics_text)
        r = seeded.get("/templates")
        assert r.json() == [{"name": "ethics_board", "version": 1},
                            {"name": "max_catalog", "version": 1}]


class TestFacts:
    def test_post_without_role_header(self, seeded):
        r = seeded.post("/subjects/objdet/1/facts",
                        json={"template": "max_catalog@1", "question_id": "q1",
                              "author": "x", "value": {"kind": "text", "text": "hi"}})
        assert r.status_code == 400
        assert r.json()["code"] == "role_required"

    def test_post_and_supersede(self, seeded):
        r = post_fact(seeded, "q1", {"kind": "text", "text": "v1"},
                      "business_owner", "2021-04-01T09:00:00Z")
        assert r.status_code == 201
        rid = r.json()["record_id"]
        r = post_fact(seeded, "q1", {"kind": "text", "text": "v2"},
                      "business_owner", "2021-04-02T09:00:00Z", supersedes=rid)
        assert r.status_code == 201
        r = seeded.get("/subjects/objdet/1/history/q1")
        rows = r.json()
        assert [row["seq"] for row in rows] == [1, 2]
        assert rows[0]["superseded_by"] == rows[1]["record_id"]

    def test_rejected_fact_is_422(self, seeded):
        r = post_fact(seeded, "q6", {"kind": "metricset", "metrics": {"latency": 1}},
                      "data_scientist", "2021-04-01T09:00:00Z")
        assert r.status_code == 422
        assert r.json()["code"] == "fact_rejected"

    def test_factsheet_on_empty_subject(self, seeded):
        r = seeded.get("/subjects/nobody/1/factsheet",
                       params={"template": "max_catalog@1", "format": "machine",
                               "as_of": AS_OF})
        assert r.status_code == 200
        doc = r.json()
        assert all(not q["answered"]
                   for sec in doc["sections"] for q in sec["questions"])

    def test_gate_endpoint(self, seeded):
        r = seeded.get("/subjects/objdet/1/gate/conception",
                       params={"template": "max_catalog@1"})
        body = r.json()
        assert body["pass"] is False
        assert {b["question_id"] for b in body["blocking"]} == {"q1", "q2"}


class TestEvaluations:
    def seed_session(self, client):
        r = client.post("/evaluations/sessions",
                        json={"kind": "content_eval", "template": "max_catalog@1",
                              "evaluator": "carmen", "evaluator_role": "model_validator",
                              "subject_id": "objdet", "subject_version": "1"})
        assert r.status_code == 201
        return r.json()["id"]

    def test_session_flow_to_report(self, seeded, max_template):
        ids = [q.id for q in max_template.all_questions()]
        for i in range(2):
            sid = self.seed_session(seeded)
            r = seeded.post(f"/evaluations/sessions/{sid}/responses",
                            json={"item_index": 4, "flags": ["extraneous"],
                                  "question_id": "q9"})
            assert r.status_code == 201
            order = [q for q in ids if q != "q9"] + ["q9"]
            r = seeded.post(f"/evaluations/sessions/{sid}/ranking",
                            json={"elements": order})
            assert r.status_code == 201
        r = seeded.get("/evaluations/report", params={"template": "max_catalog@1"})
        report = r.json()
        assert {(s["action"], s["target"]) for s in report["suggestions"]} == \
            {("remove", "q9")}
        assert report["session_count"] == 2

    def test_invalid_ranking_rejected(self, seeded):
        sid = self.seed_session(seeded)
        r = seeded.post(f"/evaluations/sessions/{sid}/ranking",
                        json={"elements": ["q1"]})
        assert r.status_code == 422
        assert r.json()["code"] == "evaluation_rejected"

    def test_interview_with_subject_rejected(self, seeded):
        r = seeded.post("/evaluations/sessions",
                        json={"kind": "consumer_interview", "template": "max_catalog@1",
                              "evaluator": "c", "subject_id": "objdet"})
        assert r.status_code == 422


class TestLibraryEquivalence:
    """The service adds no semantics: identical inputs through the library and
    the HTTP path must produce byte-identical outputs."""

    def test_scripted_scenario(self, tmp_path, max_text, max_template):
        client = TestClient(create_app(tmp_path / "svc"))
        lib_store = open_store(tmp_path / "lib")

        assert client.put("/templates/max_catalog/1", content=max_text).status_code == 201

        questions = list(max_template.all_questions())
        values = {
            "text": lambda q: {"kind": "text", "text": f"answer {q.id}"},
            "longtext": lambda q: {"kind": "longtext", "text": f"long {q.id}"},
            "metricset": lambda q: {"kind": "metricset",
                                    "metrics": {m: 0.5 for m in q.spec.metrics}},
        }
        seqs = []
        for i, q in enumerate(questions):
            value = values[q.spec.kind](q)
            ts = f"2021-04-01T09:{i:02d}:00Z"
            r = post_fact(client, q.id, value, q.role, ts)
            assert r.status_code == 201
            lib_store.record_fact(subject_id="objdet", subject_version="1",
                                  template=max_template, question_id=q.id,
                                  value=AnswerValue.from_dict(value), role=q.role,
                                  author="tester", recorded_at=ts)
            history = client.get(f"/subjects/objdet/1/history/{q.id}").json()
            seqs.extend(row["seq"] for row in history if row["recorded_at"] == ts)
        assert sorted(seqs) == list(range(1, 11))

        sheet = lib_store.assemble_factsheet("objdet", "1", max_template, AS_OF)
        for fmt, renderer in RENDERERS.items():
            r = client.get("/subjects/objdet/1/factsheet",
                           params={"template": "max_catalog@1", "format": fmt,
                                   "as_of": AS_OF})
            assert r.status_code == 200
            assert r.content.decode("utf-8") == renderer(sheet, max_template).media

        r = client.get("/subjects/objdet/1/gate/validation",
                       params={"template": "max_catalog@1", "as_of": AS_OF})
        decision = check_stage_gate(sheet, max_template, "validation")
        assert r.content.decode("utf-8") == canonical_json(gate_to_dict(decision))
        assert decision.passed
