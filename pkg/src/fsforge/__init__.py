"""fsforge: author, populate, validate, render and iterate AI FactSheets."""

from importlib import resources
from pathlib import Path

from .compliance import (CompletenessReport, GateDecision, check_stage_gate,  # noqa: F401
                         completeness)
from .dsl import (AnswerSpec, Diagnostic, Question, Section, Template,  # noqa: F401
                  TemplateDiff, TemplateSyntaxError, apply_diff, derive_audience_view,
                  diff_templates, lint_template, parse_template, serialize_template,
                  try_parse_template)
from .methodology import (EvalSession, QuestionBank, Response, SessionStore,  # noqa: F401
                          SuggestionReport, Thresholds, builtin_bank, evaluation_report,
                          new_session, record_ranking, record_response)
from .render import (RenderedDocument, export_machine, import_machine, render,  # noqa: F401
                     render_report, render_slides, render_summary)
from .store import (AnswerValue, FactRecord, FactSheet, Store, open_store)  # noqa: F401

__version__ = "0.1.0"


def fixture_path(name: str) -> Path:
    """Path to a bundled template fixture, e.g. 'max_catalog.fst'."""
    return Path(resources.files("fsforge") / "fixtures" / name)


def load_fixture(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")
