"""Deterministic FactSheet renderers: summary, report, slides, machine export.

All four renderers are pure functions of (FactSheet, Template); the rendered
`generated_at` echoes the sheet's as_of timestamp rather than the wall clock
so that output is byte-stable and suitable for golden-file comparison.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .compliance import completeness
from .dsl import AnswerSpec, Question, Template
from .store import Answer, AnswerValue, FactSheet, Provenance, format_timestamp, parse_timestamp

SLIDE_BULLET_LIMIT = 120
UNANSWERED = "—"  # em dash placeholder for a missing answer


@dataclass
class RenderedDocument:
    format: str               # summary | report | slides | machine
    media: str
    generated_at: str


def format_number(x: float) -> str:
    """Up to 6 significant digits, trailing zeros trimmed."""
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.6g}"


def _metric_items(value: AnswerValue, spec: AnswerSpec):
    """Present metrics in the question's declaration order."""
    metrics = value.metrics or {}
    for name in spec.metrics:
        if name in metrics:
            yield name, metrics[name]
    for name in metrics:               # metrics not declared (orphan-tolerant)
        if name not in spec.metrics:
            yield name, metrics[name]


def answer_inline(value: AnswerValue, spec: AnswerSpec) -> str:
    if value.kind in ("text", "longtext"):
        return " ".join((value.text or "").split())
    if value.kind == "number":
        text = format_number(value.number)
        return f"{text} {value.unit}" if value.unit else text
    if value.kind == "metricset":
        return "; ".join(f"{k}: {format_number(v)}" for k, v in _metric_items(value, spec))
    if value.kind == "enum":
        return value.choice or ""
    if value.kind == "uri":
        return value.uri or ""
    if value.kind == "flag":
        return "yes" if value.flag else "no"
    return ""


def _provenance_line(p: Provenance) -> str:
    return f"recorded by {p.role} ({p.author}) at {p.recorded_at} [{p.source}]"


# ---------------------------------------------------------------------------
# summary

def render_summary(sheet: FactSheet, template: Template) -> RenderedDocument:
    """Two-column table of key-flagged questions, plus a completeness footer."""
    rows = []
    for q in template.all_questions():
        if not q.key:
            continue
        answer = sheet.answers.get(q.id)
        rows.append((q.prompt, answer_inline(answer.value, q.spec) if answer else UNANSWERED))
    width = max((len(p) for p, _ in rows), default=0)
    lines = [f"FactSheet summary: {sheet.subject_id} v{sheet.subject_version} "
             f"(template {template.name} v{template.version})",
             f"as of {format_timestamp(sheet.as_of)}", ""]
    for prompt, answer in rows:
        lines.append(f"{prompt.ljust(width)} | {answer}")
    if rows:
        lines.append("")
    report = completeness(sheet, template)
    lines.append(f"completeness {report.required_answered}/{report.required_total}")
    return RenderedDocument("summary", "\n".join(lines) + "\n",
                            format_timestamp(sheet.as_of))


# ---------------------------------------------------------------------------
# full report

def _question_block(q: Question, sheet: FactSheet) -> list[str]:
    prompt = f"RISK: {q.prompt}" if q.risk else q.prompt
    lines = [prompt]
    answer = sheet.answers.get(q.id)
    if answer is None:
        lines.append("MISSING (required)" if q.required else UNANSWERED)
    elif answer.value.kind == "metricset":
        for name, val in _metric_items(answer.value, q.spec):
            lines.append(f"  {name}: {format_number(val)}")
        lines.append("  " + _provenance_line(answer.provenance))
    elif answer.value.kind == "longtext":
        lines.extend("  " + ln for ln in (answer.value.text or "").splitlines())
        lines.append("  " + _provenance_line(answer.provenance))
    else:
        lines.append("  " + answer_inline(answer.value, q.spec))
        lines.append("  " + _provenance_line(answer.provenance))
    lines.append("")
    return lines


def render_report(sheet: FactSheet, template: Template) -> RenderedDocument:
    lines = [f"# {template.name} v{template.version}",
             f"subject: {sheet.subject_id} v{sheet.subject_version}",
             f"as of: {format_timestamp(sheet.as_of)}", ""]
    for sec in template.sections:
        lines.append(f"## {sec.title}")
        lines.append("")
        for q in sec.questions:
            lines.extend(_question_block(q, sheet))
        for sub in sec.subsections:
            lines.append(f"### {sub.title}")
            lines.append("")
            for q in sub.questions:
                lines.extend(_question_block(q, sheet))
    return RenderedDocument("report", "\n".join(lines).rstrip("\n") + "\n",
                            format_timestamp(sheet.as_of))


# ---------------------------------------------------------------------------
# slide outline

def _abbreviate(text: str, limit: int = SLIDE_BULLET_LIMIT) -> str:
    flat = " ".join(text.split())
    if len(flat) <= limit:
        return flat
    return flat[: limit - 1] + "…"


def render_slides(sheet: FactSheet, template: Template) -> RenderedDocument:
    report = completeness(sheet, template)
    lines = [f"= {sheet.subject_id} v{sheet.subject_version}",
             f"- template: {template.name} v{template.version}",
             f"- as of: {format_timestamp(sheet.as_of)}",
             f"- completeness: {report.required_answered}/{report.required_total}"]
    for sec in template.sections:
        lines.append("")
        lines.append(f"= {sec.title}")
        for q in sec.all_questions():
            answer = sheet.answers.get(q.id)
            body = _abbreviate(answer_inline(answer.value, q.spec)) if answer else UNANSWERED
            lines.append(f"- {q.prompt}: {body}")
    return RenderedDocument("slides", "\n".join(lines) + "\n",
                            format_timestamp(sheet.as_of))


# ---------------------------------------------------------------------------
# machine-readable export / import

FACTSHEET_SCHEMA_VERSION = 1


def _question_entry(q: Question, sheet: FactSheet) -> dict:
    answer = sheet.answers.get(q.id)
    entry = {
        "id": q.id,
        "prompt": q.prompt,
        "required": q.required,
        "risk": q.risk,
        "answered": answer is not None,
        "answer": answer.value.to_dict() if answer else None,
        "provenance": None,
    }
    if answer:
        p = answer.provenance
        entry["provenance"] = {
            "author": p.author,
            "role": p.role,
            "recorded_at": p.recorded_at,
            "source": p.source,
            "record_id": p.record_id,
        }
    return entry


def export_machine(sheet: FactSheet, template: Template) -> RenderedDocument:
    tpl_name, _, tpl_version = sheet.template_ref.rpartition("@")
    report = completeness(sheet, template)
    sections = []
    for sec in template.sections:
        if sec.questions:
            sections.append({
                "title": sec.title,
                "questions": [_question_entry(q, sheet) for q in sec.questions],
            })
        for sub in sec.subsections:
            sections.append({
                "title": f"{sec.title} / {sub.title}",
                "questions": [_question_entry(q, sheet) for q in sub.questions],
            })
        if not sec.questions and not sec.subsections:
            sections.append({"title": sec.title, "questions": []})
    doc = {
        "factsheet_schema": FACTSHEET_SCHEMA_VERSION,
        "subject": {"id": sheet.subject_id, "version": sheet.subject_version},
        "template": {"name": tpl_name or template.name, "version": int(tpl_version)},
        "as_of": format_timestamp(sheet.as_of),
        "sections": sections,
        "completeness": {
            "required_total": report.required_total,
            "required_answered": report.required_answered,
            "orphaned_records": sheet.orphaned,
        },
    }
    media = json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    return RenderedDocument("machine", media, format_timestamp(sheet.as_of))


class SchemaError(ValueError):
    """Machine-export document violates the schema; `path` names the field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _require(d: dict, key: str, path: str, types) -> object:
    if not isinstance(d, dict) or key not in d:
        raise SchemaError(f"{path}.{key}", "missing field")
    val = d[key]
    if types is not None and not isinstance(val, types):
        raise SchemaError(f"{path}.{key}", f"expected {types}, got {type(val).__name__}")
    return val


def import_machine(document: str) -> FactSheet:
    """Inverse of export_machine: reconstruct the answers and provenance."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("$", "document must be a JSON object")
    if doc.get("factsheet_schema") != FACTSHEET_SCHEMA_VERSION:
        raise SchemaError("$.factsheet_schema",
                          f"unsupported schema version {doc.get('factsheet_schema')!r}")
    subject = _require(doc, "subject", "$", dict)
    template = _require(doc, "template", "$", dict)
    sheet = FactSheet(
        subject_id=_require(subject, "id", "$.subject", str),
        subject_version=_require(subject, "version", "$.subject", str),
        template_ref=(f"{_require(template, 'name', '$.template', str)}@"
                      f"{_require(template, 'version', '$.template', int)}"),
        as_of=parse_timestamp(_require(doc, "as_of", "$", str)),
        orphaned=int(_require(doc, "completeness", "$", dict).get("orphaned_records", 0)),
    )
    sections = _require(doc, "sections", "$", list)
    for si, sec in enumerate(sections):
        spath = f"sections[{si}]"
        questions = _require(sec, "questions", spath, list)
        for qi, entry in enumerate(questions):
            qpath = f"{spath}.questions[{qi}]"
            qid = _require(entry, "id", qpath, str)
            answered = _require(entry, "answered", qpath, bool)
            if not answered:
                continue
            raw = _require(entry, "answer", qpath, dict)
            try:
                value = AnswerValue.from_dict(raw)
            except Exception as exc:
                raise SchemaError(f"{qpath}.answer.kind", str(exc)) from exc
            prov = _require(entry, "provenance", qpath, dict)
            ppath = f"{qpath}.provenance"
            sheet.answers[qid] = Answer(value=value, provenance=Provenance(
                author=_require(prov, "author", ppath, str),
                role=_require(prov, "role", ppath, str),
                recorded_at=_require(prov, "recorded_at", ppath, str),
                source=_require(prov, "source", ppath, str),
                record_id=_require(prov, "record_id", ppath, str)))
    return sheet


RENDERERS = {
    "summary": render_summary,
    "report": render_report,
    "slides": render_slides,
    "machine": export_machine,
}


def render(sheet: FactSheet, template: Template, fmt: str) -> RenderedDocument:
    try:
        renderer = RENDERERS[fmt]
    except KeyError:
        raise ValueError(f"unknown render format {fmt!r}") from None
    return renderer(sheet, template)
