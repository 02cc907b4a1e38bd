from random import Random

import pytest

from fsforge.methodology import (BANK_KINDS, MethodologyError, ProposedItem, Response,
                                 SessionStore, Thresholds, builtin_bank,
                                 evaluation_report, new_session, record_ranking,
                                 record_response, render_report_text)

EXPECTED_COUNTS = {
    "consumer_interview": 15,
    "producer_interview": 8,
    "template_checklist": 9,
    "fillin_checklist": 6,
    "content_eval": 12,
    "presentation_eval": 12,
}


class TestBanks:
    @pytest.mark.parametrize("kind,count", EXPECTED_COUNTS.items())
    def test_counts(self, kind, count):
        assert len(builtin_bank(kind).items) == count

    def test_known_items(self):
        consumer = builtin_bank("consumer_interview").items
        assert consumer[2] == ("What decisions will she be making based on the "
                               "information presented?")
        content = builtin_bank("content_eval").items
        assert content[0] == "What information is missing?"
        presentation = builtin_bank("presentation_eval").items
        assert presentation[0] == "Is this information presented in an unexpected way?"

    def test_immutable_and_stable(self):
        for kind in BANK_KINDS:
            assert builtin_bank(kind) == builtin_bank(kind)
            assert isinstance(builtin_bank(kind).items, tuple)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown bank kind"):
            builtin_bank("exit_interview")


def make_session(kind="content_eval", **kw):
    defaults = dict(template_ref="max_catalog@1", evaluator="carmen",
                    evaluator_role="model_validator")
    if kind in ("content_eval", "presentation_eval"):
        defaults.update(subject_id="objdet", subject_version="1")
    defaults.update(kw)
    return new_session(kind, **defaults)


class TestSessions:
    def test_content_eval_needs_subject(self):
        with pytest.raises(MethodologyError, match="concrete FactSheet"):
            new_session("content_eval", template_ref="t@1", evaluator="c",
                        evaluator_role="r")

    def test_interview_must_not_have_subject(self):
        with pytest.raises(MethodologyError, match="must not reference"):
            new_session("consumer_interview", template_ref="t@1", evaluator="c",
                        evaluator_role="r", subject_id="objdet")

    def test_fresh_ids(self):
        a, b = make_session(), make_session()
        assert a.id != b.id

    def test_response_replaces_earlier_for_same_item(self):
        session = make_session()
        record_response(session, Response(item_index=4, flags=("extraneous",),
                                          question_id="q9", note="first"))
        record_response(session, Response(item_index=4, flags=("extraneous",),
                                          question_id="q8", note="second"))
        assert len(session.responses) == 1
        assert session.responses[4].question_id == "q8"

    def test_missing_flag_requires_proposed_item(self):
        session = make_session()
        with pytest.raises(MethodologyError, match="proposed_item"):
            record_response(session, Response(item_index=0, flags=("missing",)))
        record_response(session, Response(
            item_index=0, flags=("missing",),
            proposed_item=ProposedItem("training data licensing",
                                       why="legal exposure", example="CC-BY only")))
        assert session.proposed_items()[0].label == "training data licensing"

    def test_item_index_bounds(self):
        session = make_session()
        with pytest.raises(MethodologyError, match="out of range"):
            record_response(session, Response(item_index=12))

    def test_persistence_round_trip(self, tmp_path):
        sessions = SessionStore(tmp_path)
        session = make_session()
        record_response(session, Response(item_index=6, flags=("confusing",),
                                          question_id="q4", note="too vague"))
        sessions.save(session)
        loaded = sessions.load(session.id)
        assert loaded == session


class TestRanking:
    def rank_all(self, template, session, order=None):
        ids = [q.id for q in template.all_questions()]
        record_ranking(session, order or ids, template)

    def test_full_permutation_accepted(self, max_template):
        session = make_session()
        self.rank_all(max_template, session)
        assert session.ranking is not None

    def test_omission_names_the_question(self, max_template):
        session = make_session()
        ids = [q.id for q in max_template.all_questions() if q.id != "q7"]
        with pytest.raises(MethodologyError, match="q7"):
            record_ranking(session, ids, max_template)

    def test_duplicate_rejected(self, max_template):
        session = make_session()
        ids = [q.id for q in max_template.all_questions()] + ["q1"]
        with pytest.raises(MethodologyError, match="duplicate"):
            record_ranking(session, ids, max_template)

    def test_proposed_label_may_be_ranked(self, max_template):
        session = make_session()
        record_response(session, Response(
            item_index=0, flags=("missing",),
            proposed_item=ProposedItem("training data licensing")))
        ids = [q.id for q in max_template.all_questions()]
        record_ranking(session, ids + ["training data licensing"], max_template)
        assert session.ranking[-1] == "training data licensing"

    def test_unknown_element_rejected(self, max_template):
        session = make_session()
        ids = [q.id for q in max_template.all_questions()]
        with pytest.raises(MethodologyError, match="unknown ranking element"):
            record_ranking(session, ids + ["mystery"], max_template)

    def test_later_ranking_replaces(self, max_template):
        session = make_session()
        ids = [q.id for q in max_template.all_questions()]
        self.rank_all(max_template, session, ids)
        self.rank_all(max_template, session, list(reversed(ids)))
        assert session.ranking == list(reversed(ids))


def scenario_sessions(max_template):
    """4 sessions: 3 flag q9 extraneous, q9 ranked at the bottom, and 2 of 4
    propose 'training data licensing'.  Hand-tally at theta=0.5: remove(q9)
    (3/4 >= 0.5 and bottom quartile) and add('training data licensing')
    (2/4 >= 0.5); nothing else crosses a threshold."""
    ids = [q.id for q in max_template.all_questions()]
    bottom_q9 = [q for q in ids if q != "q9"] + ["q9"]          # rank 10
    ninth_q9 = [q for q in ids if q not in ("q9", "q10")] + ["q9", "q10"]  # rank 9
    sessions = []
    for i in range(4):
        session = make_session()
        if i < 3:
            record_response(session, Response(item_index=4, flags=("extraneous",),
                                              question_id="q9"))
        if i < 2:
            record_response(session, Response(
                item_index=0, flags=("missing",),
                proposed_item=ProposedItem("Training   Data Licensing" if i == 0
                                           else "training data licensing")))
        record_ranking(session, bottom_q9 if i % 2 == 0 else ninth_q9, max_template)
        sessions.append(session)
    return sessions


class TestSuggestionEngine:
    def test_no_flags_no_rankings_no_suggestions(self, max_template):
        report = evaluation_report([make_session()], max_template)
        assert report.suggestions == []

    def test_hand_computed_scenario(self, max_template):
        report = evaluation_report(scenario_sessions(max_template), max_template)
        actions = {(s.action, s.target.casefold()) for s in report.suggestions}
        assert actions == {("remove", "q9"), ("add", "training data licensing")}
        remove = next(s for s in report.suggestions if s.action == "remove")
        assert len(remove.evidence) == 3
        q9 = next(s for s in report.stats if s.question_id == "q9")
        assert q9.mean_rank == 9.5 and q9.quartile == 4

    def test_report_independent_of_session_order(self, max_template):
        sessions = scenario_sessions(max_template)
        a = evaluation_report(sessions, max_template)
        b = evaluation_report(list(reversed(sessions)), max_template)
        assert a == b

    def test_threshold_monotonicity(self, max_template):
        sessions = scenario_sessions(max_template)
        rng = Random(9)
        base = evaluation_report(sessions, max_template)
        lo = {(s.action, s.target) for s in base.suggestions}
        for _ in range(20):
            th = Thresholds(remove=0.5 + rng.random() / 2,
                            reword=0.5 + rng.random() / 2,
                            add=0.5 + rng.random() / 2,
                            move=0.5 + rng.random() / 2)
            raised = evaluation_report(sessions, max_template, th)
            assert {(s.action, s.target) for s in raised.suggestions} <= lo

    def test_mean_rank_within_bounds(self, max_template):
        sessions = scenario_sessions(max_template)
        report = evaluation_report(sessions, max_template)
        n = len(list(max_template.all_questions()))
        for stat in report.stats:
            if stat.mean_rank is not None:
                assert 1 <= stat.mean_rank <= n

    def test_mixed_template_refs_rejected(self, max_template):
        odd = make_session(template_ref="ethics_board@1")
        with pytest.raises(MethodologyError, match="reference"):
            evaluation_report([make_session(), odd], max_template)

    def test_empty_session_list_rejected(self, max_template):
        with pytest.raises(MethodologyError, match="at least one"):
            evaluation_report([], max_template)

    def test_text_rendering_mentions_suggestions(self, max_template):
        report = evaluation_report(scenario_sessions(max_template), max_template)
        text = render_report_text(report)
        assert "remove 'q9'" in text
        assert "max_catalog@1" in text
