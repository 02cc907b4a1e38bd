"""`fsforge` command line interface.

Exit codes: 0 ok, 1 validation failure, 2 usage error, 3 I/O error.
Machine-consumable output goes to stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import methodology
from .compliance import check_stage_gate
from .dsl import (TemplateSyntaxError, derive_audience_view, diff_templates, lint_template,
                  parse_template, serialize_template)
from .render import RENDERERS
from .service import canonical_json, gate_to_dict
from .store import STAGES, AnswerValue, FactStoreError, Store, parse_timestamp

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_IO = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_VALIDATION):
        self.code = code
        super().__init__(message)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO)


def _load_template(path: str):
    try:
        return parse_template(_read_text(path))
    except TemplateSyntaxError as exc:
        for diag in exc.diagnostics:
            print(f"{path}:{diag}", file=sys.stderr)
        raise CliError(f"{path} does not parse", EXIT_VALIDATION)


def _open_store(location: str) -> Store:
    try:
        store = Store(Path(location))
    except OSError as exc:
        raise CliError(f"cannot open store {location}: {exc}", EXIT_IO)
    for corrupt in store.corruption:
        print(f"corrupt log line: {corrupt}", file=sys.stderr)
    return store


# -- template ----------------------------------------------------------------

def cmd_template_lint(args) -> int:
    template = _load_template(args.file)
    for warning in lint_template(template):
        print(str(warning), file=sys.stderr)
    return EXIT_OK


def cmd_template_derive(args) -> int:
    template = _load_template(args.file)
    if args.audience not in template.audiences:
        raise CliError(f"unknown audience {args.audience!r}")
    text = serialize_template(derive_audience_view(template, args.audience))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_template_diff(args) -> int:
    old = _load_template(args.old)
    new = _load_template(args.new)
    diff = diff_templates(old, new)
    out = {
        "added": [{"section": list(path), "index": idx, "id": q.id, "prompt": q.prompt}
                  for path, idx, q in diff.added],
        "removed": diff.removed,
        "reworded": [{"id": qid, "old": o, "new": n} for qid, o, n in diff.reworded],
        "respecd": [{"id": qid, "old": o.render(), "new": n.render()}
                    for qid, o, n in diff.respecd],
        "moved": [{"id": qid, "from": list(o), "to": list(n), "index": idx}
                  for qid, o, n, idx in diff.moved],
    }
    sys.stdout.write(canonical_json(out))
    return EXIT_OK


# -- facts and sheets ----------------------------------------------------------

def cmd_fact_add(args) -> int:
    template = _load_template(args.template)
    store = _open_store(args.store)
    try:
        raw = json.loads(args.value)
    except json.JSONDecodeError as exc:
        raise CliError(f"--value is not valid JSON: {exc}")
    try:
        value = AnswerValue.from_dict(raw)
        record_id = store.record_fact(
            subject_id=args.subject, subject_version=args.version, template=template,
            question_id=args.question, value=value, role=args.role,
            author=args.author or args.role, stage=args.stage,
            recorded_at=args.recorded_at, source=args.source,
            supersedes=args.supersedes)
    except FactStoreError as exc:
        raise CliError(str(exc))
    print(record_id)
    return EXIT_OK


def cmd_sheet_render(args) -> int:
    template = _load_template(args.template)
    if args.audience:
        if args.audience not in template.audiences:
            raise CliError(f"unknown audience {args.audience!r}")
        template = derive_audience_view(template, args.audience)
    store = _open_store(args.store)
    as_of = parse_timestamp(args.as_of) if args.as_of else None
    sheet = store.assemble_factsheet(args.subject, args.version, template, as_of)
    sys.stdout.write(RENDERERS[args.format](sheet, template).media)
    return EXIT_OK


def cmd_gate_check(args) -> int:
    template = _load_template(args.template)
    store = _open_store(args.store)
    as_of = parse_timestamp(args.as_of) if args.as_of else None
    sheet = store.assemble_factsheet(args.subject, args.version, template, as_of)
    decision = check_stage_gate(sheet, template, args.stage)
    sys.stdout.write(canonical_json(gate_to_dict(decision)))
    return EXIT_OK if decision.passed else EXIT_VALIDATION


# -- evaluations ----------------------------------------------------------------

def cmd_eval_new(args) -> int:
    template = _load_template(args.template)
    sessions = methodology.SessionStore(args.store)
    try:
        session = methodology.new_session(
            kind=args.kind, template_ref=template.ref, evaluator=args.evaluator,
            evaluator_role=args.role, subject_id=args.subject,
            subject_version=args.subject_version)
    except methodology.MethodologyError as exc:
        raise CliError(str(exc))
    sessions.save(session)
    print(session.id)
    return EXIT_OK


def cmd_eval_respond(args) -> int:
    sessions = methodology.SessionStore(args.store)
    try:
        session = sessions.load(args.session)
        proposed = None
        if args.propose:
            proposed = methodology.ProposedItem(label=args.propose, why=args.why or "",
                                                example=args.example or "")
        methodology.record_response(session, methodology.Response(
            item_index=args.item, flags=tuple(args.flag or []), note=args.note or "",
            question_id=args.question, proposed_item=proposed))
    except methodology.MethodologyError as exc:
        raise CliError(str(exc))
    sessions.save(session)
    return EXIT_OK


def cmd_eval_rank(args) -> int:
    template = _load_template(args.template)
    sessions = methodology.SessionStore(args.store)
    try:
        session = sessions.load(args.session)
        methodology.record_ranking(session, args.elements, template)
    except methodology.MethodologyError as exc:
        raise CliError(str(exc))
    sessions.save(session)
    return EXIT_OK


def _build_report(args):
    template = _load_template(args.template)
    sessions = methodology.SessionStore(args.store).all_for(template.ref)
    if not sessions:
        raise CliError(f"no sessions recorded for {template.ref}")
    thresholds = methodology.Thresholds(remove=args.theta_remove, reword=args.theta_reword,
                                        add=args.theta_add, move=args.theta_move)
    return methodology.evaluation_report(sessions, template, thresholds)


def cmd_eval_report(args) -> int:
    sys.stdout.write(methodology.render_report_text(_build_report(args)))
    return EXIT_OK


def cmd_eval_suggest(args) -> int:
    sys.stdout.write(canonical_json(_build_report(args).to_dict()))
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.store, args.bind)
    return EXIT_OK


# -- argument wiring -------------------------------------------------------------

def _add_theta_args(p):
    p.add_argument("--theta-remove", type=float, default=0.5)
    p.add_argument("--theta-reword", type=float, default=0.5)
    p.add_argument("--theta-add", type=float, default=0.5)
    p.add_argument("--theta-move", type=float, default=0.5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fsforge",
                                     description="FactSheet authoring toolchain")
    sub = parser.add_subparsers(dest="command", required=True)

    tpl = sub.add_parser("template", help="template operations")
    tpl_sub = tpl.add_subparsers(dest="subcommand", required=True)
    p = tpl_sub.add_parser("lint")
    p.add_argument("file")
    p.set_defaults(func=cmd_template_lint)
    p = tpl_sub.add_parser("derive")
    p.add_argument("file")
    p.add_argument("--audience", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_template_derive)
    p = tpl_sub.add_parser("diff")
    p.add_argument("old")
    p.add_argument("new")
    p.set_defaults(func=cmd_template_diff)

    fact = sub.add_parser("fact", help="fact recording")
    fact_sub = fact.add_subparsers(dest="subcommand", required=True)
    p = fact_sub.add_parser("add")
    p.add_argument("--store", required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--version", required=True)
    p.add_argument("--template", required=True, help="template DSL file")
    p.add_argument("--question", required=True)
    p.add_argument("--role", required=True)
    p.add_argument("--author")
    p.add_argument("--stage", choices=STAGES)
    p.add_argument("--source", choices=("human", "auto"), default="human")
    p.add_argument("--supersedes")
    p.add_argument("--recorded-at")
    p.add_argument("--value", required=True, help='answer JSON, e.g. {"kind":"text","text":"..."}')
    p.set_defaults(func=cmd_fact_add)

    sheet = sub.add_parser("sheet", help="factsheet assembly and rendering")
    sheet_sub = sheet.add_subparsers(dest="subcommand", required=True)
    p = sheet_sub.add_parser("render")
    p.add_argument("--store", required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--version", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--format", required=True, choices=sorted(RENDERERS))
    p.add_argument("--as-of")
    p.add_argument("--audience")
    p.set_defaults(func=cmd_sheet_render)

    gate = sub.add_parser("gate", help="lifecycle stage gates")
    gate_sub = gate.add_subparsers(dest="subcommand", required=True)
    p = gate_sub.add_parser("check")
    p.add_argument("--store", required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--version", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--stage", required=True, choices=STAGES)
    p.add_argument("--as-of")
    p.set_defaults(func=cmd_gate_check)

    ev = sub.add_parser("eval", help="evaluation sessions and suggestions")
    ev_sub = ev.add_subparsers(dest="subcommand", required=True)
    p = ev_sub.add_parser("new")
    p.add_argument("--store", required=True)
    p.add_argument("--kind", required=True, choices=methodology.BANK_KINDS)
    p.add_argument("--template", required=True)
    p.add_argument("--evaluator", required=True)
    p.add_argument("--role", default="")
    p.add_argument("--subject")
    p.add_argument("--subject-version")
    p.set_defaults(func=cmd_eval_new)
    p = ev_sub.add_parser("respond")
    p.add_argument("--store", required=True)
    p.add_argument("--session", required=True)
    p.add_argument("--item", type=int, required=True)
    p.add_argument("--flag", action="append", choices=methodology.FLAGS)
    p.add_argument("--note")
    p.add_argument("--question")
    p.add_argument("--propose", help="label of a proposed missing item")
    p.add_argument("--why")
    p.add_argument("--example")
    p.set_defaults(func=cmd_eval_respond)
    p = ev_sub.add_parser("rank")
    p.add_argument("--store", required=True)
    p.add_argument("--session", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("elements", nargs="+")
    p.set_defaults(func=cmd_eval_rank)
    p = ev_sub.add_parser("report")
    p.add_argument("--store", required=True)
    p.add_argument("--template", required=True)
    _add_theta_args(p)
    p.set_defaults(func=cmd_eval_report)
    p = ev_sub.add_parser("suggest")
    p.add_argument("--store", required=True)
    p.add_argument("--template", required=True)
    _add_theta_args(p)
    p.set_defaults(func=cmd_eval_suggest)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--store", required=True)
    p.add_argument("--bind", default="127.0.0.1:8023")
    p.set_defaults(func=cmd_serve)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"fsforge: {exc}", file=sys.stderr)
        return exc.code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
