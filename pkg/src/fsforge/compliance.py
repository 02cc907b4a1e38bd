"""Completeness reporting and lifecycle stage gates for assembled FactSheets."""

from __future__ import annotations

from dataclasses import dataclass, field

from .dsl import Template
from .store import FactSheet, STAGES, role_stage, stage_index


class ComplianceError(ValueError):
    pass


@dataclass
class SectionCompleteness:
    title: str
    required_total: int
    required_answered: int
    optional_answered: int


@dataclass
class CompletenessReport:
    sections: list[SectionCompleteness] = field(default_factory=list)
    required_total: int = 0
    required_answered: int = 0
    missing_required: list[str] = field(default_factory=list)
    unanswered_risk: list[str] = field(default_factory=list)

    @property
    def fraction(self) -> float:
        # an empty requirement set is vacuously satisfied
        if self.required_total == 0:
            return 1.0
        return self.required_answered / self.required_total


@dataclass
class GateDecision:
    target_stage: str
    passed: bool
    # (question_id, producing role, producing stage)
    blocking: list[tuple[str, str, str]] = field(default_factory=list)


def _check_pair(sheet: FactSheet, template: Template) -> None:
    if sheet.template_ref != template.ref:
        raise ComplianceError(
            f"FactSheet was assembled with {sheet.template_ref}, not {template.ref}")


def completeness(sheet: FactSheet, template: Template) -> CompletenessReport:
    _check_pair(sheet, template)
    report = CompletenessReport()
    for sec in template.sections:
        req_total = req_answered = opt_answered = 0
        for q in sec.all_questions():
            answered = q.id in sheet.answers
            if q.required:
                req_total += 1
                if answered:
                    req_answered += 1
                else:
                    report.missing_required.append(q.id)
            elif answered:
                opt_answered += 1
            if q.risk and not answered:
                report.unanswered_risk.append(q.id)
        report.sections.append(SectionCompleteness(sec.title, req_total,
                                                   req_answered, opt_answered))
        report.required_total += req_total
        report.required_answered += req_answered
    return report


def check_stage_gate(sheet: FactSheet, template: Template, target: str) -> GateDecision:
    """Pass iff every required question owed at or before `target` is answered.

    Override-role answers already count: the check looks only at whether the
    question is answered, while the owed stage comes from the producing role.
    """
    _check_pair(sheet, template)
    if target not in STAGES:
        raise ComplianceError(f"unknown lifecycle stage {target!r}")
    blocking = []
    for q in template.all_questions():
        if not q.required or q.id in sheet.answers:
            continue
        produced_at = role_stage(q.role)
        if stage_index(produced_at) <= stage_index(target):
            blocking.append((q.id, q.role, produced_at))
    return GateDecision(target_stage=target, passed=not blocking, blocking=blocking)
