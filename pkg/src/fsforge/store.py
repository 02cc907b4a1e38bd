"""Append-only fact store: provenance-stamped records and point-in-time FactSheets.

One newline-delimited JSON log per (subject_id, subject_version), named
``<subject_id>__<subject_version>.factlog``.  Records are immutable; a later
record may supersede an earlier one for the same subject/question, but
nothing is ever rewritten in place.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .dsl import AnswerSpec, Question, Template

STAGES = ("conception", "development", "validation", "deployment", "monitoring")

# roles allowed to answer on behalf of the question's producing role
OVERRIDE_ROLES = ("model_validator", "business_owner")

ROLE_STAGE = {
    "business_owner": "conception",
    "data_scientist": "development",
    "model_validator": "validation",
    "ai_operations": "deployment",
}


def stage_index(stage: str) -> int:
    return STAGES.index(stage)


def role_stage(role: str) -> str:
    """Lifecycle stage at which a role produces its facts; other:* -> development."""
    return ROLE_STAGE.get(role, "development")


class FactStoreError(ValueError):
    pass


def parse_timestamp(text: str) -> datetime:
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise FactStoreError(f"unparseable timestamp {text!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def utcnow() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


# ---------------------------------------------------------------------------
# answers

@dataclass
class AnswerValue:
    kind: str
    text: str | None = None
    number: float | None = None
    unit: str | None = None
    metrics: dict[str, float] | None = None
    choice: str | None = None
    uri: str | None = None
    flag: bool | None = None

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind in ("text", "longtext"):
            d["text"] = self.text
        elif self.kind == "number":
            d["number"] = self.number
            if self.unit is not None:
                d["unit"] = self.unit
        elif self.kind == "metricset":
            d["metrics"] = dict(self.metrics or {})
        elif self.kind == "enum":
            d["choice"] = self.choice
        elif self.kind == "uri":
            d["uri"] = self.uri
        elif self.kind == "flag":
            d["flag"] = self.flag
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AnswerValue":
        kind = d.get("kind")
        if kind in ("text", "longtext"):
            return cls(kind, text=d["text"])
        if kind == "number":
            return cls(kind, number=float(d["number"]), unit=d.get("unit"))
        if kind == "metricset":
            return cls(kind, metrics={k: float(v) for k, v in d["metrics"].items()})
        if kind == "enum":
            return cls(kind, choice=d["choice"])
        if kind == "uri":
            return cls(kind, uri=d["uri"])
        if kind == "flag":
            return cls(kind, flag=bool(d["flag"]))
        raise FactStoreError(f"unknown answer kind {kind!r}")


def conformance_error(value: AnswerValue, spec: AnswerSpec) -> str | None:
    """None when `value` satisfies `spec`, else a human-readable reason."""
    if spec.kind != value.kind:
        return f"kind mismatch: question expects {spec.kind}, got {value.kind}"
    if value.kind in ("text", "longtext"):
        if not isinstance(value.text, str) or not value.text:
            return "text answer must be a non-empty string"
    elif value.kind == "number":
        if not isinstance(value.number, (int, float)):
            return "number answer must be numeric"
        if spec.unit != value.unit:
            return f"unit mismatch: expected {spec.unit!r}, got {value.unit!r}"
    elif value.kind == "metricset":
        if not value.metrics:
            return "metricset answer must carry at least one metric"
        extra = [k for k in value.metrics if k not in spec.metrics]
        if extra:
            return f"metric {extra[0]!r} not declared by the question"
    elif value.kind == "enum":
        if value.choice not in spec.choices:
            return f"choice {value.choice!r} not in declared choices"
    elif value.kind == "uri":
        if not isinstance(value.uri, str) or not value.uri:
            return "uri answer must be a non-empty string"
    elif value.kind == "flag":
        if not isinstance(value.flag, bool):
            return "flag answer must be a boolean"
    return None


# ---------------------------------------------------------------------------
# records

_RECORD_KEYS = ("seq", "record_id", "subject_id", "subject_version", "template_ref",
                "question_id", "stage", "role", "author", "recorded_at", "source",
                "value", "supersedes")


@dataclass
class FactRecord:
    seq: int
    record_id: str
    subject_id: str
    subject_version: str
    template_ref: str
    question_id: str
    stage: str
    role: str
    author: str
    recorded_at: str            # ISO-8601, second precision, UTC
    source: str
    value: AnswerValue
    supersedes: str | None = None

    @property
    def recorded_at_dt(self) -> datetime:
        return parse_timestamp(self.recorded_at)

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "record_id": self.record_id,
            "subject_id": self.subject_id,
            "subject_version": self.subject_version,
            "template_ref": self.template_ref,
            "question_id": self.question_id,
            "stage": self.stage,
            "role": self.role,
            "author": self.author,
            "recorded_at": self.recorded_at,
            "source": self.source,
            "value": self.value.to_dict(),
            "supersedes": self.supersedes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FactRecord":
        missing = [k for k in _RECORD_KEYS if k not in d]
        if missing:
            raise FactStoreError(f"record missing field {missing[0]!r}")
        return cls(
            seq=int(d["seq"]),
            record_id=d["record_id"],
            subject_id=d["subject_id"],
            subject_version=d["subject_version"],
            template_ref=d["template_ref"],
            question_id=d["question_id"],
            stage=d["stage"],
            role=d["role"],
            author=d["author"],
            recorded_at=d["recorded_at"],
            source=d["source"],
            value=AnswerValue.from_dict(d["value"]),
            supersedes=d["supersedes"],
        )


@dataclass
class Provenance:
    author: str
    role: str
    recorded_at: str
    source: str
    record_id: str


@dataclass
class Answer:
    value: AnswerValue
    provenance: Provenance


@dataclass
class FactSheet:
    subject_id: str
    subject_version: str
    template_ref: str
    as_of: datetime
    answers: dict[str, Answer] = field(default_factory=dict)
    orphaned: int = 0


@dataclass
class HistoryEntry:
    record: FactRecord
    superseded_by: str | None = None


@dataclass
class Corruption:
    path: str
    line: int
    message: str

    def __str__(self) -> str:
        return f"{self.path}:{self.line}: {self.message}"


# ---------------------------------------------------------------------------
# the store

def _log_name(subject_id: str, subject_version: str) -> str:
    return f"{subject_id}__{subject_version}.factlog"


def current_answers(records: list[FactRecord], template: Template,
                    as_of: datetime | None) -> tuple[dict[str, FactRecord], int]:
    """Pick the winning record per question: latest (recorded_at, seq) at or
    before `as_of`, not superseded by any record at or before `as_of`, and
    conforming to the template.  Returns (winners, orphaned count)."""
    if as_of is not None:
        records = [r for r in records if r.recorded_at_dt <= as_of]
    superseded = {r.supersedes for r in records if r.supersedes}
    questions = {q.id: q for q in template.all_questions()}
    winners: dict[str, FactRecord] = {}
    orphaned = 0
    for rec in records:
        q = questions.get(rec.question_id)
        if q is None:
            orphaned += 1
            continue
        if rec.record_id in superseded:
            continue
        if conformance_error(rec.value, q.spec) is not None:
            continue
        cur = winners.get(rec.question_id)
        if cur is None or (rec.recorded_at_dt, rec.seq) > (cur.recorded_at_dt, cur.seq):
            winners[rec.question_id] = rec
    return winners, orphaned


class Store:
    """Append-only fact store rooted at a directory.

    A corrupt log line does not prevent opening: the store comes up read-only
    with the offending lines listed in `corruption`.
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.corruption: list[Corruption] = []
        self._records: dict[tuple[str, str], list[FactRecord]] = {}
        self._replay()

    # -- replay -------------------------------------------------------------

    def _replay(self) -> None:
        self._records.clear()
        self.corruption = []
        for path in sorted(self.root.glob("*.factlog")):
            records: list[FactRecord] = []
            with open(path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        rec = FactRecord.from_dict(json.loads(line))
                        rec.recorded_at_dt  # validate timestamp eagerly
                    except (json.JSONDecodeError, FactStoreError, KeyError, TypeError) as exc:
                        self.corruption.append(Corruption(str(path), lineno, str(exc)))
                        continue
                    records.append(rec)
            if records:
                key = (records[0].subject_id, records[0].subject_version)
                self._records[key] = records

    @property
    def read_only(self) -> bool:
        return bool(self.corruption)

    @property
    def high_water_seq(self) -> int:
        return max((r.seq for recs in self._records.values() for r in recs), default=0)

    # -- writes -------------------------------------------------------------

    def record_fact(self, *, subject_id: str, subject_version: str, template: Template,
                    question_id: str, value: AnswerValue, role: str, author: str,
                    stage: str | None = None, recorded_at: str | None = None,
                    source: str = "human", supersedes: str | None = None) -> str:
        if self.read_only:
            raise FactStoreError(
                "store is read-only due to log corruption: " + str(self.corruption[0]))
        question = template.question(question_id)
        if question is None:
            raise FactStoreError(f"unknown question {question_id!r} in template {template.ref}")
        err = conformance_error(value, question.spec)
        if err:
            raise FactStoreError(f"answer to {question_id} does not conform: {err}")
        if role != question.role and role not in OVERRIDE_ROLES:
            raise FactStoreError(
                f"role {role!r} may not answer {question_id} (expected {question.role!r} "
                f"or an override role)")
        if source not in ("human", "auto"):
            raise FactStoreError(f"source must be human or auto, got {source!r}")
        if stage is None:
            stage = role_stage(question.role)
        if stage not in STAGES:
            raise FactStoreError(f"unknown lifecycle stage {stage!r}")
        if recorded_at is None:
            recorded_at = format_timestamp(utcnow())
        else:
            recorded_at = format_timestamp(parse_timestamp(recorded_at))

        with self._lock:
            key = (subject_id, subject_version)
            existing = self._records.get(key, [])
            if supersedes is not None:
                target = next((r for r in existing if r.record_id == supersedes), None)
                if target is None:
                    raise FactStoreError(f"supersedes target {supersedes!r} not found")
                if target.question_id != question_id:
                    raise FactStoreError(
                        f"supersedes target answers {target.question_id}, not {question_id}")
            seq = self.high_water_seq + 1
            digest = hashlib.sha256(json.dumps(
                [subject_id, subject_version, question_id, recorded_at, seq],
                separators=(",", ":")).encode()).hexdigest()
            rec = FactRecord(
                seq=seq, record_id=f"r{digest[:12]}",
                subject_id=subject_id, subject_version=subject_version,
                template_ref=template.ref, question_id=question_id,
                stage=stage, role=role, author=author, recorded_at=recorded_at,
                source=source, value=value, supersedes=supersedes)
            path = self.root / _log_name(subject_id, subject_version)
            line = json.dumps(rec.to_dict(), ensure_ascii=False, separators=(", ", ": "))
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._records.setdefault(key, []).append(rec)
            return rec.record_id

    # -- reads --------------------------------------------------------------

    def records(self, subject_id: str, subject_version: str) -> list[FactRecord]:
        return list(self._records.get((subject_id, subject_version), []))

    def assemble_factsheet(self, subject_id: str, subject_version: str,
                           template: Template,
                           as_of: datetime | str | None = None) -> FactSheet:
        if isinstance(as_of, str):
            as_of = parse_timestamp(as_of)
        effective = as_of if as_of is not None else utcnow()
        records = self.records(subject_id, subject_version)
        winners, orphaned = current_answers(records, template, as_of)
        sheet = FactSheet(subject_id=subject_id, subject_version=subject_version,
                          template_ref=template.ref, as_of=effective, orphaned=orphaned)
        for qid, rec in winners.items():
            sheet.answers[qid] = Answer(
                value=rec.value,
                provenance=Provenance(author=rec.author, role=rec.role,
                                      recorded_at=rec.recorded_at, source=rec.source,
                                      record_id=rec.record_id))
        return sheet

    def history(self, subject_id: str, subject_version: str,
                question_id: str) -> list[HistoryEntry]:
        records = [r for r in self.records(subject_id, subject_version)
                   if r.question_id == question_id]
        superseded_by = {r.supersedes: r.record_id for r in records if r.supersedes}
        return [HistoryEntry(r, superseded_by.get(r.record_id))
                for r in sorted(records, key=lambda r: r.seq)]

    def list_subjects(self) -> list[tuple[str, str, int, str]]:
        rows = []
        for (sid, ver), recs in self._records.items():
            rows.append((sid, ver, len(recs), max(r.recorded_at for r in recs)))
        return sorted(rows)


def open_store(location: str | Path) -> Store:
    return Store(Path(location))
