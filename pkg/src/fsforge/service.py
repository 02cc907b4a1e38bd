"""HTTP facade over the library.  Adds no semantics of its own: every endpoint
is a thin mapping onto the corresponding library call, and response bodies are
byte-identical to the library's own serializations.

The caller's lifecycle role is conveyed via the ``X-Role`` request header.
There is NO authentication: the header is trusted as-is.  Do not expose this
service beyond a trusted network without putting real authn/z in front of it.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from . import methodology
from .compliance import ComplianceError, GateDecision, check_stage_gate
from .dsl import (Template, TemplateSyntaxError, derive_audience_view, parse_template,
                  serialize_template)
from .render import RENDERERS
from .store import STAGES, AnswerValue, FactStoreError, Store, parse_timestamp

TEMPLATE_REF_RE = re.compile(r"(.+)@([0-9]+)\Z")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, diagnostics=None):
        self.status = status
        self.code = code
        self.message = message
        self.diagnostics = diagnostics
        super().__init__(message)

    def response(self) -> JSONResponse:
        body = {"code": self.code, "message": self.message}
        if self.diagnostics is not None:
            body["diagnostics"] = self.diagnostics
        return JSONResponse(body, status_code=self.status)


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def gate_to_dict(decision: GateDecision) -> dict:
    return {
        "target_stage": decision.target_stage,
        "pass": decision.passed,
        "blocking": [
            {"question_id": qid, "role": role, "stage": stage}
            for qid, role, stage in decision.blocking
        ],
    }


class TemplateRegistry:
    """DSL documents persisted under <store>/templates/<name>__<version>.fst."""

    def __init__(self, root: Path):
        self.root = Path(root) / "templates"
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, name: str, version: int) -> Path:
        return self.root / f"{name}__{version}.fst"

    def put(self, name: str, version: int, text: str) -> Template:
        template = parse_template(text)
        if template.name != name or template.version != version:
            raise ApiError(422, "template_ref_mismatch",
                           f"document declares {template.ref}, URL says {name}@{version}")
        self._path(name, version).write_text(text, encoding="utf-8")
        return template

    def get(self, name: str, version: int) -> Template:
        path = self._path(name, version)
        if not path.exists():
            raise ApiError(404, "template_not_found", f"no template {name}@{version}")
        return parse_template(path.read_text(encoding="utf-8"))

    def get_ref(self, ref: str) -> Template:
        m = TEMPLATE_REF_RE.match(ref or "")
        if not m:
            raise ApiError(400, "bad_template_ref",
                           f"template ref must look like name@version, got {ref!r}")
        return self.get(m.group(1), int(m.group(2)))

    def listing(self) -> list[dict]:
        rows = []
        for path in sorted(self.root.glob("*.fst")):
            name, _, version = path.stem.rpartition("__")
            rows.append({"name": name, "version": int(version)})
        return rows


def create_app(store_location: str | Path) -> FastAPI:
    app = FastAPI(title="fsforge", docs_url=None, redoc_url=None)
    store = Store(Path(store_location))
    registry = TemplateRegistry(Path(store_location))
    sessions = methodology.SessionStore(Path(store_location))
    app.state.store = store
    app.state.registry = registry

    @app.exception_handler(ApiError)
    async def _api_error(_request, exc: ApiError):
        return exc.response()

    @app.exception_handler(TemplateSyntaxError)
    async def _syntax_error(_request, exc: TemplateSyntaxError):
        return ApiError(422, "template_syntax", "template does not parse",
                        diagnostics=[{"line": d.line, "column": d.column,
                                      "message": d.message}
                                     for d in exc.diagnostics]).response()

    @app.exception_handler(FactStoreError)
    async def _store_error(_request, exc: FactStoreError):
        return ApiError(422, "fact_rejected", str(exc)).response()

    @app.exception_handler(ComplianceError)
    async def _compliance_error(_request, exc: ComplianceError):
        return ApiError(422, "compliance_error", str(exc)).response()

    @app.exception_handler(methodology.MethodologyError)
    async def _methodology_error(_request, exc: methodology.MethodologyError):
        return ApiError(422, "evaluation_rejected", str(exc)).response()

    # -- templates -----------------------------------------------------------

    @app.put("/templates/{name}/{version}")
    async def put_template(name: str, version: int, request: Request,
                           dry_run: bool = False):
        text = (await request.body()).decode("utf-8")
        if dry_run:
            parse_template(text)
            return JSONResponse({"ok": True}, status_code=200)
        registry.put(name, version, text)
        return JSONResponse({"ok": True}, status_code=201)

    @app.get("/templates/{name}/{version}")
    async def get_template(name: str, version: int, audience: str | None = None):
        template = registry.get(name, version)
        if audience is not None:
            if audience not in template.audiences:
                raise ApiError(404, "unknown_audience",
                               f"audience {audience!r} not declared by {template.ref}")
            template = derive_audience_view(template, audience)
        return PlainTextResponse(serialize_template(template))

    @app.get("/templates")
    async def list_templates():
        return Response(canonical_json(registry.listing()),
                        media_type="application/json")

    # -- facts ---------------------------------------------------------------

    @app.post("/subjects/{subject_id}/{subject_version}/facts")
    async def post_fact(subject_id: str, subject_version: str, request: Request):
        role = request.headers.get("X-Role")
        if not role:
            raise ApiError(400, "role_required", "X-Role header is required")
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            raise ApiError(400, "bad_json", f"request body is not JSON: {exc}")
        for field in ("template", "question_id", "value", "author"):
            if field not in body:
                raise ApiError(400, "missing_field", f"body is missing {field!r}")
        template = registry.get_ref(body["template"])
        try:
            value = AnswerValue.from_dict(body["value"])
        except FactStoreError as exc:
            raise ApiError(422, "bad_answer_value", str(exc))
        record_id = store.record_fact(
            subject_id=subject_id, subject_version=subject_version, template=template,
            question_id=body["question_id"], value=value, role=role,
            author=body["author"], stage=body.get("stage"),
            recorded_at=body.get("recorded_at"), source=body.get("source", "human"),
            supersedes=body.get("supersedes"))
        return JSONResponse({"record_id": record_id}, status_code=201)

    @app.get("/subjects/{subject_id}/{subject_version}/factsheet")
    async def get_factsheet(subject_id: str, subject_version: str, template: str,
                            format: str = "machine", as_of: str | None = None,
                            audience: str | None = None):
        tpl = registry.get_ref(template)
        if audience is not None:
            if audience not in tpl.audiences:
                raise ApiError(404, "unknown_audience",
                               f"audience {audience!r} not declared by {tpl.ref}")
            tpl = derive_audience_view(tpl, audience)
        if format not in RENDERERS:
            raise ApiError(400, "bad_format",
                           f"format must be one of {sorted(RENDERERS)}, got {format!r}")
        as_of_ts = parse_timestamp(as_of) if as_of else None
        sheet = store.assemble_factsheet(subject_id, subject_version, tpl, as_of_ts)
        doc = RENDERERS[format](sheet, tpl)
        media_type = "application/json" if format == "machine" else "text/plain"
        return Response(doc.media, media_type=media_type)

    @app.get("/subjects/{subject_id}/{subject_version}/history/{question_id}")
    async def get_history(subject_id: str, subject_version: str, question_id: str):
        entries = store.history(subject_id, subject_version, question_id)
        rows = []
        for entry in entries:
            row = entry.record.to_dict()
            row["superseded_by"] = entry.superseded_by
            rows.append(row)
        return Response(canonical_json(rows), media_type="application/json")

    @app.get("/subjects/{subject_id}/{subject_version}/gate/{stage}")
    async def get_gate(subject_id: str, subject_version: str, stage: str,
                       template: str, as_of: str | None = None):
        tpl = registry.get_ref(template)
        if stage not in STAGES:
            raise ApiError(400, "bad_stage",
                           f"stage must be one of {list(STAGES)}, got {stage!r}")
        as_of_ts = parse_timestamp(as_of) if as_of else None
        sheet = store.assemble_factsheet(subject_id, subject_version, tpl, as_of_ts)
        decision = check_stage_gate(sheet, tpl, stage)
        return Response(canonical_json(gate_to_dict(decision)),
                        media_type="application/json")

    # -- evaluations -----------------------------------------------------------

    @app.post("/evaluations/sessions")
    async def post_session(request: Request):
        body = json.loads(await request.body())
        ref = body.get("template")
        registry.get_ref(ref)   # must exist
        session = methodology.new_session(
            kind=body.get("kind", ""), template_ref=ref,
            evaluator=body.get("evaluator", ""),
            evaluator_role=body.get("evaluator_role", ""),
            subject_id=body.get("subject_id"),
            subject_version=body.get("subject_version"))
        sessions.save(session)
        return JSONResponse({"id": session.id}, status_code=201)

    @app.post("/evaluations/sessions/{session_id}/responses")
    async def post_response(session_id: str, request: Request):
        body = json.loads(await request.body())
        session = sessions.load(session_id)
        proposed = body.get("proposed_item")
        response = methodology.Response(
            item_index=int(body.get("item_index", -1)),
            flags=tuple(body.get("flags", [])),
            note=body.get("note", ""),
            question_id=body.get("question_id"),
            proposed_item=methodology.ProposedItem(**proposed) if proposed else None)
        methodology.record_response(session, response)
        sessions.save(session)
        return JSONResponse({"ok": True}, status_code=201)

    @app.post("/evaluations/sessions/{session_id}/ranking")
    async def post_ranking(session_id: str, request: Request):
        body = json.loads(await request.body())
        session = sessions.load(session_id)
        template = registry.get_ref(session.template_ref)
        methodology.record_ranking(session, list(body.get("elements", [])), template)
        sessions.save(session)
        return JSONResponse({"ok": True}, status_code=201)

    @app.get("/evaluations/report")
    async def get_report(template: str, theta_remove: float = 0.5,
                         theta_reword: float = 0.5, theta_add: float = 0.5,
                         theta_move: float = 0.5):
        tpl = registry.get_ref(template)
        batch = sessions.all_for(tpl.ref)
        if not batch:
            raise ApiError(404, "no_sessions", f"no sessions for {tpl.ref}")
        report = methodology.evaluation_report(
            batch, tpl, methodology.Thresholds(remove=theta_remove, reword=theta_reword,
                                               add=theta_add, move=theta_move))
        return Response(canonical_json(report.to_dict()), media_type="application/json")

    return app


def serve(store_location: str | Path, bind: str = "127.0.0.1:8023") -> None:
    import uvicorn

    host, _, port = bind.rpartition(":")
    uvicorn.run(create_app(store_location), host=host or "127.0.0.1", port=int(port))
