"""FactSheet template language: parsing, serialization, views, lint and diff.

Templates are written in a small line-oriented DSL so diagnostics can carry
exact line/column positions.  Grammar sketch::

    file        = header { audiences | section }
    header      = 'template' STRING 'v' INT
    audiences   = 'audiences' IDENT { IDENT }
    section     = 'section' STRING  { subsection | question }  'end'
    subsection  = 'subsection' STRING { question } 'end'
    question    = 'question' IDENT STRING { attr }

`#` starts a comment; blank lines are ignored.  Nesting is capped at two
levels (section -> subsection).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

IDENT_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
UNIT_RE = re.compile(r"[^()\s,]+\Z")

BUILTIN_ROLES = ("business_owner", "data_scientist", "model_validator", "ai_operations")
ANSWER_KINDS = ("text", "longtext", "number", "metricset", "enum", "uri", "flag")

# canonical attribute order on a question line
_ATTR_ORDER = ("type", "required", "by", "source", "audience", "hint", "key", "risk")


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


class TemplateSyntaxError(ValueError):
    """Raised when a document cannot be parsed into a valid Template."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class AnswerSpec:
    kind: str
    unit: str | None = None                # number only
    metrics: tuple[str, ...] = ()          # metricset only
    choices: tuple[str, ...] = ()          # enum only

    def __post_init__(self):
        if self.kind not in ANSWER_KINDS:
            raise ValueError(f"unknown answer kind {self.kind!r}")
        if self.kind == "enum" and len(set(self.choices)) < 2:
            raise ValueError("enum needs at least 2 distinct choices")
        if self.kind == "metricset" and len(set(self.metrics)) < 1:
            raise ValueError("metricset needs at least 1 metric name")

    def render(self) -> str:
        if self.kind == "number" and self.unit:
            return f"number({self.unit})"
        if self.kind == "metricset":
            return "metricset(" + ",".join(self.metrics) + ")"
        if self.kind == "enum":
            return "enum(" + ",".join(self.choices) + ")"
        return self.kind


@dataclass(frozen=True)
class Question:
    id: str
    prompt: str
    spec: AnswerSpec = AnswerSpec("text")
    required: bool = False
    role: str = "data_scientist"
    source: str = "human"
    audiences: tuple[str, ...] = ()        # empty tuple means "all audiences"
    hint: str | None = None
    key: bool = False
    risk: bool = False

    def visible_to(self, audience: str) -> bool:
        return not self.audiences or audience in self.audiences


@dataclass
class Section:
    title: str
    questions: list[Question] = field(default_factory=list)
    subsections: list["Section"] = field(default_factory=list)

    def all_questions(self):
        yield from self.questions
        for sub in self.subsections:
            yield from sub.questions


@dataclass
class Template:
    name: str
    version: int
    audiences: tuple[str, ...] = ()
    sections: list[Section] = field(default_factory=list)

    @property
    def ref(self) -> str:
        return f"{self.name}@{self.version}"

    def all_questions(self):
        for sec in self.sections:
            yield from sec.all_questions()

    def question(self, qid: str) -> Question | None:
        for q in self.all_questions():
            if q.id == qid:
                return q
        return None

    def section_paths(self) -> dict[str, tuple[str, ...]]:
        """Map question id -> path of section titles containing it."""
        paths = {}
        for sec in self.sections:
            for q in sec.questions:
                paths[q.id] = (sec.title,)
            for sub in sec.subsections:
                for q in sub.questions:
                    paths[q.id] = (sec.title, sub.title)
        return paths


@dataclass(frozen=True)
class Warning:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


# ---------------------------------------------------------------------------
# tokenizer

@dataclass(frozen=True)
class _Tok:
    kind: str      # 'atom' | 'str'
    text: str
    col: int       # 1-based


def _scan_line(line: str, lineno: int, diags: list[Diagnostic]) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(line)
    while i < n:
        c = line[i]
        if c in " \t":
            i += 1
            continue
        if c == "#":
            break
        if c == '"':
            start = i
            i += 1
            buf = []
            while i < n:
                c = line[i]
                if c == "\\" and i + 1 < n and line[i + 1] in '\\"':
                    buf.append(line[i + 1])
                    i += 2
                elif c == '"':
                    i += 1
                    break
                else:
                    buf.append(c)
                    i += 1
            else:
                diags.append(Diagnostic(lineno, start + 1, "unterminated string"))
                return toks
            toks.append(_Tok("str", "".join(buf), start + 1))
        else:
            start = i
            while i < n and line[i] not in ' \t"#':
                i += 1
            toks.append(_Tok("atom", line[start:i], start + 1))
    return toks


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


# ---------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, text: str):
        self.diags: list[Diagnostic] = []
        self.lines = text.splitlines()

    def fail(self, lineno: int, col: int, msg: str) -> None:
        self.diags.append(Diagnostic(lineno, col, msg))

    def parse(self) -> Template | None:
        name = None
        version = 0
        audiences: list[str] = []
        sections: list[Section] = []
        # (section, subsection-or-None, opening lineno)
        stack: list[tuple[Section, Section | None, int]] = []
        seen_ids: dict[str, tuple[int, int]] = {}
        # deferred audience checks: (lineno, col, audience)
        audience_refs: list[tuple[int, int, str]] = []
        saw_header = False

        for lineno, raw in enumerate(self.lines, start=1):
            toks = _scan_line(raw, lineno, self.diags)
            if not toks:
                continue
            head = toks[0]
            if head.kind != "atom":
                self.fail(lineno, head.col, "expected a keyword, got a string")
                continue

            if not saw_header:
                if head.text != "template":
                    self.fail(lineno, head.col, "document must start with a 'template' header")
                    continue
                if len(toks) != 3 or toks[1].kind != "str" or toks[2].kind != "atom" \
                        or not re.fullmatch(r"v[0-9]+", toks[2].text):
                    self.fail(lineno, head.col, 'malformed header; expected: template "name" vN')
                    continue
                name = toks[1].text
                version = int(toks[2].text[1:])
                if version < 1:
                    self.fail(lineno, toks[2].col, "template version must be positive")
                saw_header = True
                continue

            kw = head.text
            if kw == "template":
                self.fail(lineno, head.col, "duplicate 'template' header")
            elif kw == "audiences":
                if stack:
                    self.fail(lineno, head.col, "'audiences' not allowed inside a section")
                    continue
                if len(toks) < 2:
                    self.fail(lineno, head.col, "'audiences' needs at least one identifier")
                for t in toks[1:]:
                    if t.kind != "atom" or not IDENT_RE.match(t.text):
                        self.fail(lineno, t.col, f"invalid audience identifier {t.text!r}")
                    elif t.text not in audiences:
                        audiences.append(t.text)
            elif kw == "section":
                if stack:
                    self.fail(lineno, head.col, "sections cannot be nested; close with 'end' first")
                    continue
                if len(toks) != 2 or toks[1].kind != "str":
                    self.fail(lineno, head.col, "section needs a quoted title")
                    continue
                if not toks[1].text.strip():
                    self.fail(lineno, toks[1].col, "section title must be non-empty")
                    continue
                sec = Section(toks[1].text)
                sections.append(sec)
                stack.append((sec, None, lineno))
            elif kw == "subsection":
                if not stack:
                    self.fail(lineno, head.col, "'subsection' outside a section")
                    continue
                if stack[-1][1] is not None:
                    self.fail(lineno, head.col,
                              "nesting deeper than section > subsection is not allowed")
                    continue
                if len(toks) != 2 or toks[1].kind != "str" or not toks[1].text.strip():
                    self.fail(lineno, head.col, "subsection needs a non-empty quoted title")
                    continue
                sec = stack[-1][0]
                sub = Section(toks[1].text)
                sec.subsections.append(sub)
                stack.append((sec, sub, lineno))
            elif kw == "end":
                if not stack:
                    self.fail(lineno, head.col, "'end' without an open section")
                    continue
                stack.pop()
            elif kw == "question":
                if not stack:
                    self.fail(lineno, head.col, "'question' outside a section")
                    continue
                q = self._parse_question(toks, lineno, audience_refs)
                if q is None:
                    continue
                if q.id in seen_ids:
                    self.fail(lineno, toks[1].col, f"duplicate question id {q.id!r}")
                    continue
                seen_ids[q.id] = (lineno, toks[1].col)
                container = stack[-1][1] or stack[-1][0]
                container.questions.append(q)
            else:
                self.fail(lineno, head.col, f"unknown keyword {kw!r}")

        if not saw_header and not self.diags:
            self.fail(max(len(self.lines), 1), 1, "missing 'template' header")
        for _sec, _sub, opened in stack:
            self.fail(opened, 1, "section not closed with 'end'")
        for lineno, col, aud in audience_refs:
            if aud not in audiences:
                self.fail(lineno, col, f"undeclared audience {aud!r}")

        if self.diags:
            return None
        return Template(name=name, version=version,
                        audiences=tuple(audiences), sections=sections)

    def _parse_question(self, toks, lineno, audience_refs) -> Question | None:
        if len(toks) < 3 or toks[1].kind != "atom" or toks[2].kind != "str":
            self.fail(lineno, toks[0].col, "question needs an identifier and a quoted prompt")
            return None
        qid = toks[1].text
        if not IDENT_RE.match(qid):
            self.fail(lineno, toks[1].col, f"invalid question id {qid!r}")
            return None
        prompt = toks[2].text
        if not prompt.strip():
            self.fail(lineno, toks[2].col, "prompt must be non-empty")
            return None

        attrs: dict = {}
        i = 3
        ok = True
        while i < len(toks):
            t = toks[i]
            if t.kind == "str":
                self.fail(lineno, t.col, "unexpected string; attributes come after the prompt")
                return None
            word = t.text
            if word in ("required", "optional", "key", "risk"):
                if word == "required":
                    attrs["required"] = True
                elif word == "optional":
                    attrs["required"] = False
                else:
                    attrs[word] = True
                i += 1
                continue
            m = re.match(r"(type|by|source|audience|hint):", word)
            if not m:
                self.fail(lineno, t.col, f"unknown attribute {word!r}")
                return None
            attr = m.group(1)
            rest = word[len(attr) + 1:]
            i += 1
            if attr == "hint":
                if rest:
                    self.fail(lineno, t.col, "hint value must be a quoted string")
                    return None
                if i >= len(toks) or toks[i].kind != "str":
                    self.fail(lineno, t.col, "hint: needs a quoted string")
                    return None
                attrs["hint"] = toks[i].text
                i += 1
                continue
            # value may be glued to the colon or stand alone; parenthesized and
            # comma-separated values may be split across atoms by spaces
            vcol = t.col
            if not rest:
                if i >= len(toks) or toks[i].kind != "atom":
                    self.fail(lineno, t.col, f"{attr}: needs a value")
                    return None
                rest = toks[i].text
                vcol = toks[i].col
                i += 1
            while (rest.endswith(",") or rest.count("(") > rest.count(")")) \
                    and i < len(toks) and toks[i].kind == "atom":
                rest += toks[i].text
                i += 1
            if attr == "type":
                spec = self._parse_anstype(rest, lineno, vcol)
                if spec is None:
                    ok = False
                else:
                    attrs["spec"] = spec
            elif attr == "by":
                if rest in BUILTIN_ROLES:
                    attrs["role"] = rest
                elif rest.startswith("other:") and IDENT_RE.match(rest[6:]):
                    attrs["role"] = rest
                else:
                    self.fail(lineno, vcol, f"unknown role {rest!r}")
                    ok = False
            elif attr == "source":
                if rest not in ("human", "auto"):
                    self.fail(lineno, vcol, f"source must be human or auto, got {rest!r}")
                    ok = False
                else:
                    attrs["source"] = rest
            elif attr == "audience":
                auds = []
                for part in rest.split(","):
                    part = part.strip()
                    if not IDENT_RE.match(part):
                        self.fail(lineno, vcol, f"invalid audience identifier {part!r}")
                        ok = False
                        continue
                    audience_refs.append((lineno, vcol, part))
                    if part not in auds:
                        auds.append(part)
                attrs["audiences"] = tuple(auds)
        if not ok:
            return None
        return Question(id=qid, prompt=prompt, **attrs)

    def _parse_anstype(self, text, lineno, col) -> AnswerSpec | None:
        if text in ("text", "longtext", "uri", "flag"):
            return AnswerSpec(text)
        if text == "number":
            return AnswerSpec("number")
        m = re.fullmatch(r"number\(([^()\s,]+)\)", text)
        if m:
            return AnswerSpec("number", unit=m.group(1))
        m = re.fullmatch(r"(metricset|enum)\(([^()]*)\)", text)
        if m:
            kind, body = m.group(1), m.group(2)
            names = [p.strip() for p in body.split(",") if p.strip()]
            bad = [p for p in names if not IDENT_RE.match(p)]
            if bad:
                self.fail(lineno, col, f"invalid identifier {bad[0]!r} in {kind}")
                return None
            if len(set(names)) != len(names):
                self.fail(lineno, col, f"duplicate name in {kind}")
                return None
            if kind == "enum" and len(names) < 2:
                self.fail(lineno, col, "enum needs at least 2 choices")
                return None
            if kind == "metricset" and not names:
                self.fail(lineno, col, "metricset needs at least 1 metric name")
                return None
            if kind == "enum":
                return AnswerSpec("enum", choices=tuple(names))
            return AnswerSpec("metricset", metrics=tuple(names))
        self.fail(lineno, col, f"unknown answer type {text!r}")
        return None


def parse_template(text: str) -> Template:
    """Parse DSL text; raises TemplateSyntaxError carrying 1-based diagnostics."""
    parser = _Parser(text)
    tpl = parser.parse()
    if tpl is None:
        raise TemplateSyntaxError(parser.diags)
    return tpl


def try_parse_template(text: str) -> tuple[Template | None, list[Diagnostic]]:
    parser = _Parser(text)
    tpl = parser.parse()
    return tpl, parser.diags


# ---------------------------------------------------------------------------
# serialization

def _question_line(q: Question) -> str:
    parts = [f'question {q.id} "{_escape(q.prompt)}"']
    if q.spec != AnswerSpec("text"):
        parts.append(f"type: {q.spec.render()}")
    if q.required:
        parts.append("required")
    if q.role != "data_scientist":
        parts.append(f"by: {q.role}")
    if q.source != "human":
        parts.append(f"source: {q.source}")
    if q.audiences:
        parts.append("audience: " + ",".join(q.audiences))
    if q.hint is not None:
        parts.append(f'hint: "{_escape(q.hint)}"')
    if q.key:
        parts.append("key")
    if q.risk:
        parts.append("risk")
    return " ".join(parts)


def serialize_template(t: Template) -> str:
    """Canonical form: fixed attribute order, one declaration per line."""
    lines = [f'template "{_escape(t.name)}" v{t.version}']
    if t.audiences:
        lines.append("audiences " + " ".join(t.audiences))
    for sec in t.sections:
        lines.append("")
        lines.append(f'section "{_escape(sec.title)}"')
        for q in sec.questions:
            lines.append("  " + _question_line(q))
        for sub in sec.subsections:
            lines.append(f'  subsection "{_escape(sub.title)}"')
            for q in sub.questions:
                lines.append("    " + _question_line(q))
            lines.append("  end")
        lines.append("end")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# audience views

def derive_audience_view(t: Template, audience: str) -> Template:
    """Template restricted to questions visible to `audience`; empty sections drop."""
    if audience not in t.audiences:
        raise ValueError(f"unknown audience {audience!r}")
    base = t.name.split("@", 1)[0]
    out = Template(name=f"{base}@{audience}", version=t.version, audiences=t.audiences)
    for sec in t.sections:
        new = Section(sec.title, [q for q in sec.questions if q.visible_to(audience)])
        for sub in sec.subsections:
            kept = [q for q in sub.questions if q.visible_to(audience)]
            if kept:
                new.subsections.append(Section(sub.title, kept))
        if new.questions or new.subsections:
            out.sections.append(new)
    return out


# ---------------------------------------------------------------------------
# lint

def lint_template(t: Template) -> list[Warning]:
    warnings: list[Warning] = []
    questions = list(t.all_questions())
    for audience in t.audiences:
        visible = [q for q in questions if q.visible_to(audience)]
        if questions and not visible:
            warnings.append(Warning("empty_audience",
                                    f"audience {audience} sees no questions"))
            continue
        for sec in t.sections:
            sec_qs = list(sec.all_questions())
            if sec_qs and not any(q.visible_to(audience) for q in sec_qs):
                warnings.append(Warning(
                    "empty_section_for_audience",
                    f"section {sec.title!r} has no questions visible to audience {audience}"))
    if questions and not any(q.key for q in questions):
        warnings.append(Warning("no_key_question",
                                "no question is marked key; the summary render will be empty"))
    if questions and not any(q.risk for q in questions):
        warnings.append(Warning("no_risk_question",
                                "no question is tagged risk (harm/safety coverage)"))
    for q in questions:
        if q.required and q.source == "auto" and q.hint is None:
            warnings.append(Warning(
                "auto_required_without_hint",
                f"question {q.id} is required and auto-sourced but has no hint"))
    return warnings


# ---------------------------------------------------------------------------
# diffing

@dataclass
class TemplateDiff:
    # (section path, index within its container, question)
    added: list[tuple[tuple[str, ...], int, Question]] = field(default_factory=list)
    removed: list[str] = field(default_factory=list)
    reworded: list[tuple[str, str, str]] = field(default_factory=list)
    respecd: list[tuple[str, AnswerSpec, AnswerSpec]] = field(default_factory=list)
    # (id, old path, new path, index within new container)
    moved: list[tuple[str, tuple[str, ...], tuple[str, ...], int]] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.reworded or self.respecd or self.moved)


def _positions(t: Template) -> dict[str, tuple[tuple[str, ...], int]]:
    pos = {}
    for sec in t.sections:
        for i, q in enumerate(sec.questions):
            pos[q.id] = ((sec.title,), i)
        for sub in sec.subsections:
            for i, q in enumerate(sub.questions):
                pos[q.id] = ((sec.title, sub.title), i)
    return pos


def diff_templates(old: Template, new: Template) -> TemplateDiff:
    old_qs = {q.id: q for q in old.all_questions()}
    new_qs = {q.id: q for q in new.all_questions()}
    old_pos = _positions(old)
    new_pos = _positions(new)

    diff = TemplateDiff()
    for qid, q in new_qs.items():
        if qid not in old_qs:
            path, idx = new_pos[qid]
            diff.added.append((path, idx, q))
    diff.removed = [qid for qid in old_qs if qid not in new_qs]
    for qid in old_qs:
        if qid not in new_qs:
            continue
        oq, nq = old_qs[qid], new_qs[qid]
        if oq.prompt != nq.prompt:
            diff.reworded.append((qid, oq.prompt, nq.prompt))
        if oq.spec != nq.spec:
            diff.respecd.append((qid, oq.spec, nq.spec))
        if old_pos[qid][0] != new_pos[qid][0]:
            path, idx = new_pos[qid]
            diff.moved.append((qid, old_pos[qid][0], path, idx))
    return diff


def _container_for(t: Template, path: tuple[str, ...]) -> Section:
    for sec in t.sections:
        if sec.title == path[0]:
            if len(path) == 1:
                return sec
            for sub in sec.subsections:
                if sub.title == path[1]:
                    return sub
            new = Section(path[1])
            sec.subsections.append(new)
            return new
    sec = Section(path[0])
    t.sections.append(sec)
    if len(path) == 1:
        return sec
    sub = Section(path[1])
    sec.subsections.append(sub)
    return sub


def apply_diff(old: Template, diff: TemplateDiff) -> Template:
    """Replay a TemplateDiff onto `old`; bumps the version."""
    import copy

    t = copy.deepcopy(old)
    drop = set(diff.removed) | {qid for qid, _o, _n, _i in diff.moved}
    for sec in t.sections:
        sec.questions = [q for q in sec.questions if q.id not in drop]
        for sub in sec.subsections:
            sub.questions = [q for q in sub.questions if q.id not in drop]

    old_qs = {q.id: q for q in old.all_questions()}
    rewords = {qid: new for qid, _old, new in diff.reworded}
    respecs = {qid: new for qid, _old, new in diff.respecd}

    def patched(q: Question) -> Question:
        if q.id in rewords:
            q = replace(q, prompt=rewords[q.id])
        if q.id in respecs:
            q = replace(q, spec=respecs[q.id])
        return q

    for sec in t.sections:
        sec.questions = [patched(q) for q in sec.questions]
        for sub in sec.subsections:
            sub.questions = [patched(q) for q in sub.questions]

    inserts = [(path, idx, patched(old_qs[qid])) for qid, _o, path, idx in diff.moved]
    inserts += [(path, idx, q) for path, idx, q in diff.added]
    for path, idx, q in sorted(inserts, key=lambda e: e[1]):
        container = _container_for(t, path)
        container.questions.insert(min(idx, len(container.questions)), q)

    t.sections = [s for s in t.sections if s.questions or s.subsections]
    t.version = old.version + 1
    return t
