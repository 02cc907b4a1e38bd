"""Interview and evaluation machinery: built-in question banks, evaluation
sessions (flags, notes, proposed items, importance rankings) and the
aggregation that turns sessions into template-revision suggestions."""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .dsl import Template
from .store import format_timestamp, utcnow

FLAGS = ("missing", "extraneous", "confusing", "misplaced", "format_issue")

BANK_KINDS = ("consumer_interview", "producer_interview", "template_checklist",
              "fillin_checklist", "content_eval", "presentation_eval")

_CONSUMER_INTERVIEW = (
    "What does Carmen do now when she performs her role?",
    "What is Carmen going to be asking for when looking at a FactSheet?",
    "What decisions will she be making based on the information presented?",
    "How is the FactSheet going to help her do her job more effectively?",
    "What are the most important pieces of information that Carmen needs to know?",
    "What is Carmen's level of expertise in general data science?",
    "How is Carmen's expertise going to affect the information presented?",
    "Will there need to be additional definitions for terms that Carmen is unfamiliar with?",
    "What is Carmen's level of expertise with respect to the model algorithms being used?",
    "What explanations about the model's algorithm or results is Carmen going to need?",
    "What is Carmen's level of expertise in the problem domain?",
    "How is that going to affect the information presented?",
    "Will Carmen need help in mapping general knowledge of the problem domain to the "
    "particular inputs, outputs, or performance indicators associated with this model?",
    "Is Carmen aware of issues related to model risk, potential harm, and regulatory "
    "compliance?",
    "What information is needed assess these issues?",
)

_PRODUCER_INTERVIEW = (
    "What facts does Priya wish she could conveniently record about the models she "
    "develops?",
    "What did Priya do during the creation of this model that is otherwise unknown to "
    "others?",
    "Are there general facts about the data, the features, the model algorithm, or the "
    "training and testing Priya performs that are important to note? Why?",
    "What model-specific knowledge does she have that may not be obvious to others?",
    "What domain-specific knowledge does Priya have that may not be obvious to others?",
    "Does Priya know who will be consuming the facts she produces?",
    "Is Priya aware of issues related to model risk, potential harm, and regulatory "
    "compliance?",
    "What information will be needed by others to assess these issues?",
)

_TEMPLATE_CHECKLIST = (
    "What are the topics or categories of information needed?",
    "Do some of these categories have subcategories?",
    "What is a meaningful name for each category or subcategory?",
    "What kinds of information should be included in each category?",
    "How should each question in a category be worded so as to be both understandable "
    "and evocative for Priya?",
    "Where will the answer to a question come from? Will it be generated automatically "
    "by a tool or entered by a knowledgeable human?",
    "Are there any regulatory, legal, or business concerns that need to be considered "
    "when answering the questions in this template?",
    "Are there different presentation formats needed for this information (for example, "
    "a short tabular summary of just key facts, or a slide format for presentations to "
    "review boards)?",
    "In addition to the human-readable content, is there a need for machine-readable "
    "content that Priya might generate?",
)

_FILLIN_CHECKLIST = (
    "Knowing what Carmen knows, will she be able to understand the information that "
    "filled-in FactSheets will include?",
    "Are there details needed by Carmen that will be missing in these FactSheets?",
    "Is there specialized language that Carmen will be unfamiliar with?",
    "Will the information allow Carmen to make the decisions she needs to make?",
    "How are these FactSheets going to help Carmen do her job more effectively?",
    "What might we do to encourage Priya to answer questions in ways that provide what "
    "Carmen needs?",
)

_CONTENT_EVAL = (
    "What information is missing?",
    "Why is that missing information important to include?",
    "How would they like this information presented?",
    "Can they give an example?",
    "What information is extraneous?",
    "Why is that information extraneous?",
    "What information is confusing or hard to understand?",
    "Why is that information hard to understand?",
    "How can that information be made more understandable?",
    "Can they give an example?",
    "Was the organization of information sensible?",
    "If not, what would they change?",
)

_PRESENTATION_EVAL = (
    "Is this information presented in an unexpected way?",
    "How can the information be presented differently?",
    "Why is this alternative a better way to present this information?",
    "Can they draw or describe an example?",
    "If the information presentation includes interactive elements, are they useful?",
    "How can they be made more useful?",
    "Why is that more useful?",
    "If they could add or change the way that information is presented, how would they?",
    "Why is this addition or change an improvement?",
    "Is this, overall, the right format for presenting this information?",
    "What format would be more suitable?",
    "Why is that format more suitable?",
)

_BANKS = {
    "consumer_interview": _CONSUMER_INTERVIEW,
    "producer_interview": _PRODUCER_INTERVIEW,
    "template_checklist": _TEMPLATE_CHECKLIST,
    "fillin_checklist": _FILLIN_CHECKLIST,
    "content_eval": _CONTENT_EVAL,
    "presentation_eval": _PRESENTATION_EVAL,
}


@dataclass(frozen=True)
class QuestionBank:
    kind: str
    items: tuple[str, ...]


def builtin_bank(kind: str) -> QuestionBank:
    try:
        return QuestionBank(kind, _BANKS[kind])
    except KeyError:
        raise ValueError(f"unknown bank kind {kind!r}") from None


class MethodologyError(ValueError):
    pass


@dataclass
class ProposedItem:
    label: str
    why: str = ""
    example: str = ""

    @property
    def normalized_label(self) -> str:
        return " ".join(self.label.casefold().split())


@dataclass
class Response:
    item_index: int
    flags: tuple[str, ...] = ()
    note: str = ""
    question_id: str | None = None       # template question the flags target
    proposed_item: ProposedItem | None = None


@dataclass
class EvalSession:
    id: str
    kind: str
    template_ref: str
    evaluator: str
    evaluator_role: str
    subject_id: str | None = None
    subject_version: str | None = None
    created_at: str = ""
    responses: dict[int, Response] = field(default_factory=dict)
    ranking: list[str] | None = None

    @property
    def bank(self) -> QuestionBank:
        return builtin_bank(self.kind)

    def proposed_items(self) -> list[ProposedItem]:
        return [r.proposed_item for r in self.responses.values() if r.proposed_item]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "template_ref": self.template_ref,
            "evaluator": self.evaluator,
            "evaluator_role": self.evaluator_role,
            "subject_id": self.subject_id,
            "subject_version": self.subject_version,
            "created_at": self.created_at,
            "responses": [
                {
                    "item_index": r.item_index,
                    "flags": list(r.flags),
                    "note": r.note,
                    "question_id": r.question_id,
                    "proposed_item": (
                        {"label": r.proposed_item.label, "why": r.proposed_item.why,
                         "example": r.proposed_item.example}
                        if r.proposed_item else None),
                }
                for _, r in sorted(self.responses.items())
            ],
            "ranking": self.ranking,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalSession":
        session = cls(
            id=d["id"], kind=d["kind"], template_ref=d["template_ref"],
            evaluator=d["evaluator"], evaluator_role=d.get("evaluator_role", ""),
            subject_id=d.get("subject_id"), subject_version=d.get("subject_version"),
            created_at=d.get("created_at", ""), ranking=d.get("ranking"))
        for r in d.get("responses", []):
            proposed = r.get("proposed_item")
            session.responses[r["item_index"]] = Response(
                item_index=r["item_index"], flags=tuple(r.get("flags", [])),
                note=r.get("note", ""), question_id=r.get("question_id"),
                proposed_item=ProposedItem(**proposed) if proposed else None)
        return session


def new_session(kind: str, template_ref: str, evaluator: str, evaluator_role: str,
                subject_id: str | None = None,
                subject_version: str | None = None) -> EvalSession:
    if kind not in BANK_KINDS:
        raise MethodologyError(f"unknown session kind {kind!r}")
    concrete = kind in ("content_eval", "presentation_eval")
    if concrete and not subject_id:
        raise MethodologyError(f"{kind} sessions must reference a concrete FactSheet "
                               "(subject_id required)")
    if kind.endswith("_interview") and subject_id:
        raise MethodologyError(f"{kind} sessions must not reference a subject")
    return EvalSession(id=uuid.uuid4().hex[:12], kind=kind, template_ref=template_ref,
                       evaluator=evaluator, evaluator_role=evaluator_role,
                       subject_id=subject_id, subject_version=subject_version,
                       created_at=format_timestamp(utcnow()))


def record_response(session: EvalSession, response: Response) -> EvalSession:
    bank = session.bank
    if not 0 <= response.item_index < len(bank.items):
        raise MethodologyError(
            f"item_index {response.item_index} out of range for {session.kind} "
            f"(bank has {len(bank.items)} items)")
    unknown = [f for f in response.flags if f not in FLAGS]
    if unknown:
        raise MethodologyError(f"unknown flag {unknown[0]!r}")
    if "missing" in response.flags and response.proposed_item is None:
        raise MethodologyError("flag 'missing' requires a proposed_item")
    # one current answer per bank item; a later response replaces the earlier
    session.responses[response.item_index] = response
    return session


def record_ranking(session: EvalSession, elements: list[str],
                   template: Template) -> EvalSession:
    seen = set()
    for el in elements:
        if el in seen:
            raise MethodologyError(f"duplicate element {el!r} in ranking")
        seen.add(el)
    question_ids = {q.id for q in template.all_questions()}
    proposed = {p.normalized_label for p in session.proposed_items()}
    missing = sorted(question_ids - seen)
    if missing:
        raise MethodologyError(f"ranking omits question(s): {', '.join(missing)}")
    for el in elements:
        if el in question_ids:
            continue
        if " ".join(el.casefold().split()) not in proposed:
            raise MethodologyError(f"unknown ranking element {el!r}")
    session.ranking = list(elements)
    return session


# ---------------------------------------------------------------------------
# aggregation and suggestions

@dataclass
class QuestionStats:
    question_id: str
    flag_counts: dict[str, int]
    mean_rank: float | None
    quartile: int | None


@dataclass
class Suggestion:
    action: str                     # add | remove | reword | move
    target: str                     # question id, or proposed label for add
    evidence: list[str]             # session ids


@dataclass
class Thresholds:
    remove: float = 0.5
    reword: float = 0.5
    add: float = 0.5
    move: float = 0.5


@dataclass
class SuggestionReport:
    template_ref: str
    session_count: int
    stats: list[QuestionStats]
    suggestions: list[Suggestion]

    def to_dict(self) -> dict:
        return {
            "template_ref": self.template_ref,
            "session_count": self.session_count,
            "questions": [
                {"id": s.question_id, "flags": s.flag_counts,
                 "mean_rank": s.mean_rank, "quartile": s.quartile}
                for s in self.stats
            ],
            "suggestions": [
                {"action": s.action, "target": s.target, "evidence": s.evidence}
                for s in self.suggestions
            ],
        }


def evaluation_report(sessions: list[EvalSession], template: Template,
                      thresholds: Thresholds | None = None) -> SuggestionReport:
    if not sessions:
        raise MethodologyError("at least one session is required")
    refs = {s.template_ref for s in sessions}
    if len(refs) > 1 or template.ref not in refs:
        raise MethodologyError(
            f"sessions reference {sorted(refs)}, expected only {template.ref}")
    th = thresholds or Thresholds()
    sessions = sorted(sessions, key=lambda s: s.id)   # input-order independence
    total = len(sessions)
    question_ids = [q.id for q in template.all_questions()]
    n_ranked = len(question_ids)

    flagged: dict[str, dict[str, set[str]]] = {qid: {f: set() for f in FLAGS}
                                               for qid in question_ids}
    proposals: dict[str, tuple[str, set[str]]] = {}   # normalized -> (label, sessions)
    ranks: dict[str, list[int]] = {qid: [] for qid in question_ids}

    for session in sessions:
        for response in session.responses.values():
            if response.proposed_item:
                norm = response.proposed_item.normalized_label
                display = " ".join(response.proposed_item.label.split())
                label, ids = proposals.setdefault(norm, (display, set()))
                ids.add(session.id)
            qid = response.question_id
            if qid in flagged:
                for flag in response.flags:
                    flagged[qid][flag].add(session.id)
        if session.ranking:
            for pos, el in enumerate(session.ranking, start=1):
                if el in ranks:
                    ranks[el].append(pos)

    stats = []
    quartiles: dict[str, int | None] = {}
    for qid in question_ids:
        positions = ranks[qid]
        mean = sum(positions) / len(positions) if positions else None
        if mean is None:
            quartile = None
        else:
            quartile = min(4, int((mean - 1) // (n_ranked / 4)) + 1) if n_ranked else None
        quartiles[qid] = quartile
        stats.append(QuestionStats(
            question_id=qid,
            flag_counts={f: len(flagged[qid][f]) for f in FLAGS},
            mean_rank=mean, quartile=quartile))

    suggestions: list[Suggestion] = []
    for qid in question_ids:
        extraneous = flagged[qid]["extraneous"]
        if len(extraneous) / total >= th.remove and quartiles[qid] == 4:
            suggestions.append(Suggestion("remove", qid, sorted(extraneous)))
        confusing = flagged[qid]["confusing"]
        if len(confusing) / total >= th.reword:
            suggestions.append(Suggestion("reword", qid, sorted(confusing)))
        misplaced = flagged[qid]["misplaced"]
        if len(misplaced) / total >= th.move:
            suggestions.append(Suggestion("move", qid, sorted(misplaced)))
    for norm in sorted(proposals):
        label, ids = proposals[norm]
        if len(ids) / total >= th.add:
            suggestions.append(Suggestion("add", label, sorted(ids)))
    suggestions.sort(key=lambda s: (s.action, s.target))
    return SuggestionReport(template_ref=template.ref, session_count=total,
                            stats=stats, suggestions=suggestions)


def render_report_text(report: SuggestionReport) -> str:
    lines = [f"Evaluation report for {report.template_ref} "
             f"({report.session_count} session(s))", ""]
    for s in report.stats:
        flags = ", ".join(f"{k}={v}" for k, v in s.flag_counts.items() if v)
        mean = f"{s.mean_rank:g}" if s.mean_rank is not None else "-"
        quartile = f"Q{s.quartile}" if s.quartile else "-"
        lines.append(f"{s.question_id}: mean rank {mean} ({quartile})"
                     + (f"; flags: {flags}" if flags else ""))
    lines.append("")
    if report.suggestions:
        lines.append("Suggestions:")
        for sug in report.suggestions:
            lines.append(f"- {sug.action} {sug.target!r} "
                         f"(evidence: {', '.join(sug.evidence)})")
    else:
        lines.append("No suggestions at the current thresholds.")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# persistence: one JSON document per session under <root>/evaluations/

class SessionStore:
    def __init__(self, root: Path | str):
        self.root = Path(root) / "evaluations"
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.json"

    def save(self, session: EvalSession) -> None:
        path = self._path(session.id)
        path.write_text(json.dumps(session.to_dict(), indent=2, ensure_ascii=False) + "\n",
                        encoding="utf-8")

    def load(self, session_id: str) -> EvalSession:
        path = self._path(session_id)
        if not path.exists():
            raise MethodologyError(f"unknown session {session_id!r}")
        return EvalSession.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def all_for(self, template_ref: str) -> list[EvalSession]:
        sessions = []
        for path in sorted(self.root.glob("*.json")):
            session = EvalSession.from_dict(json.loads(path.read_text(encoding="utf-8")))
            if session.template_ref == template_ref:
                sessions.append(session)
        return sessions
