/**
 * Client-side structural reading of template DSL text.
 *
 * The service is the single source of truth for validation (the editor
 * dry-runs every change against it); this module only extracts the already-
 * validated structure so the preview pane and fact-entry forms can render
 * without another round trip.  It also provides the small text surgeries the
 * suggestion-review screen needs to turn accepted suggestions back into DSL.
 */

export interface AnswerSpec {
  kind: "text" | "longtext" | "number" | "metricset" | "enum" | "uri" | "flag";
  unit: string | null;
  metrics: string[];
  choices: string[];
}

export interface QuestionOutline {
  id: string;
  prompt: string;
  spec: AnswerSpec;
  required: boolean;
  role: string;
  source: "human" | "auto";
  audiences: string[]; // empty = visible to all
  hint: string | null;
  key: boolean;
  risk: boolean;
  line: number; // 1-based source line of the declaration
}

export interface SubsectionOutline {
  title: string;
  questions: QuestionOutline[];
}

export interface SectionOutline {
  title: string;
  questions: QuestionOutline[];
  subsections: SubsectionOutline[];
}

export interface TemplateOutline {
  name: string;
  version: number;
  audiences: string[];
  sections: SectionOutline[];
}

export class OutlineError extends Error {
  constructor(readonly line: number, message: string) {
    super(`line ${line}: ${message}`);
    this.name = "OutlineError";
  }
}

const TEXT_SPEC: AnswerSpec = { kind: "text", unit: null, metrics: [], choices: [] };

type Token = { kind: "string" | "atom"; value: string };

function scanLine(line: string, lineno: number): Token[] {
  const tokens: Token[] = [];
  let i = 0;
  while (i < line.length) {
    const ch = line[i]!;
    if (ch === " " || ch === "\t") { i += 1; continue; }
    if (ch === "#") break;
    if (ch === '"') {
      let out = "";
      i += 1;
      for (;;) {
        if (i >= line.length) throw new OutlineError(lineno, "unterminated string");
        const c = line[i]!;
        if (c === "\\") {
          const next = line[i + 1];
          if (next !== '"' && next !== "\\") {
            throw new OutlineError(lineno, `bad escape \\${next ?? ""}`);
          }
          out += next;
          i += 2;
        } else if (c === '"') {
          i += 1;
          break;
        } else {
          out += c;
          i += 1;
        }
      }
      tokens.push({ kind: "string", value: out });
    } else {
      let j = i;
      while (j < line.length && !' \t"#'.includes(line[j]!)) j += 1;
      tokens.push({ kind: "atom", value: line.slice(i, j) });
      i = j;
    }
  }
  return tokens;
}

function parseSpec(text: string, lineno: number): AnswerSpec {
  const m = /^([a-z]+)(?:\(([^)]*)\))?$/.exec(text);
  if (!m) throw new OutlineError(lineno, `bad answer type ${text}`);
  const kind = m[1] as AnswerSpec["kind"];
  const args = m[2] ? m[2].split(",").map((s) => s.trim()).filter(Boolean) : [];
  switch (kind) {
    case "number":
      return { kind, unit: args[0] ?? null, metrics: [], choices: [] };
    case "metricset":
      return { kind, unit: null, metrics: args, choices: [] };
    case "enum":
      return { kind, unit: null, metrics: [], choices: args };
    default:
      return { kind, unit: null, metrics: [], choices: [] };
  }
}

function parseQuestion(tokens: Token[], lineno: number): QuestionOutline {
  const [, idTok, promptTok] = tokens;
  if (!idTok || idTok.kind !== "atom" || !promptTok || promptTok.kind !== "string") {
    throw new OutlineError(lineno, "question needs an id and a prompt");
  }
  const q: QuestionOutline = {
    id: idTok.value, prompt: promptTok.value, spec: TEXT_SPEC,
    required: false, role: "data_scientist", source: "human",
    audiences: [], hint: null, key: false, risk: false, line: lineno,
  };
  let i = 3;
  const next = (what: string): Token => {
    const tok = tokens[i];
    if (!tok) throw new OutlineError(lineno, `${what} needs a value`);
    i += 1;
    return tok;
  };
  while (i < tokens.length) {
    const tok = tokens[i]!;
    i += 1;
    if (tok.kind === "string") throw new OutlineError(lineno, "unexpected string");
    switch (tok.value) {
      case "required": q.required = true; break;
      case "optional": q.required = false; break;
      case "key": q.key = true; break;
      case "risk": q.risk = true; break;
      case "type:": q.spec = parseSpec(next("type:").value, lineno); break;
      case "by:": q.role = next("by:").value; break;
      case "source:": q.source = next("source:").value as "human" | "auto"; break;
      case "audience:":
        q.audiences = next("audience:").value.split(",").map((s) => s.trim()).filter(Boolean);
        break;
      case "hint:": {
        const val = next("hint:");
        if (val.kind !== "string") throw new OutlineError(lineno, "hint: needs a string");
        q.hint = val.value;
        break;
      }
      default:
        throw new OutlineError(lineno, `unknown attribute ${tok.value}`);
    }
  }
  return q;
}

/** Read structure out of DSL text the service has already validated. */
export function parseOutline(text: string): TemplateOutline {
  const outline: TemplateOutline = { name: "", version: 0, audiences: [], sections: [] };
  let section: SectionOutline | null = null;
  let subsection: SubsectionOutline | null = null;
  const lines = text.split("\n");
  for (let n = 0; n < lines.length; n++) {
    const lineno = n + 1;
    const tokens = scanLine(lines[n]!, lineno);
    const head = tokens[0];
    if (!head) continue;
    switch (head.value) {
      case "template": {
        const name = tokens[1];
        const ver = tokens[2];
        if (!name || name.kind !== "string" || !ver || !/^v\d+$/.test(ver.value)) {
          throw new OutlineError(lineno, "bad template header");
        }
        outline.name = name.value;
        outline.version = Number(ver.value.slice(1));
        break;
      }
      case "audiences":
        outline.audiences = tokens.slice(1).map((t) => t.value);
        break;
      case "section": {
        const title = tokens[1];
        if (!title || title.kind !== "string") throw new OutlineError(lineno, "section needs a title");
        section = { title: title.value, questions: [], subsections: [] };
        outline.sections.push(section);
        subsection = null;
        break;
      }
      case "subsection": {
        const title = tokens[1];
        if (!section || !title || title.kind !== "string") {
          throw new OutlineError(lineno, "subsection outside a section");
        }
        subsection = { title: title.value, questions: [] };
        section.subsections.push(subsection);
        break;
      }
      case "question": {
        const q = parseQuestion(tokens, lineno);
        if (subsection) subsection.questions.push(q);
        else if (section) section.questions.push(q);
        else throw new OutlineError(lineno, "question outside a section");
        break;
      }
      case "end":
        if (subsection) subsection = null;
        else section = null;
        break;
      default:
        throw new OutlineError(lineno, `unknown declaration ${head.value}`);
    }
  }
  return outline;
}

export interface VisibleQuestion extends QuestionOutline {
  sectionPath: string; // "Section" or "Section / Subsection"
}

/** Flatten the questions one audience sees, in document order. */
export function visibleQuestions(outline: TemplateOutline,
                                 audience: string | null): VisibleQuestion[] {
  const seen = (q: QuestionOutline) =>
    audience === null || q.audiences.length === 0 || q.audiences.includes(audience);
  const out: VisibleQuestion[] = [];
  for (const sec of outline.sections) {
    for (const q of sec.questions) {
      if (seen(q)) out.push({ ...q, sectionPath: sec.title });
    }
    for (const sub of sec.subsections) {
      for (const q of sub.questions) {
        if (seen(q)) out.push({ ...q, sectionPath: `${sec.title} / ${sub.title}` });
      }
    }
  }
  return out;
}

export function allQuestionIds(outline: TemplateOutline): string[] {
  return visibleQuestions(outline, null).map((q) => q.id);
}

/** Placeholder question id for a suggested-add label; rename before save. */
export function slugify(label: string): string {
  let slug = label.toLowerCase().replace(/[^a-z0-9]+/g, "_").replace(/^_+|_+$/g, "");
  if (!slug || /^[^a-z]/.test(slug)) slug = `q_${slug}`;
  return slug;
}

function escapeString(value: string): string {
  return value.replace(/\\/g, "\\\\").replace(/"/g, '\\"');
}

function questionLineIndex(lines: string[], questionId: string): number {
  const re = new RegExp(`^\\s*question\\s+${questionId}\\s`);
  return lines.findIndex((line) => re.test(line));
}

/** Delete a question declaration from DSL text. */
export function removeQuestionLine(text: string, questionId: string): string {
  const lines = text.split("\n");
  const idx = questionLineIndex(lines, questionId);
  if (idx < 0) throw new Error(`no question ${questionId} in template text`);
  lines.splice(idx, 1);
  return lines.join("\n");
}

/** Replace a question's prompt (the first quoted string on its line). */
export function rewordQuestionLine(text: string, questionId: string,
                                   newPrompt: string): string {
  const lines = text.split("\n");
  const idx = questionLineIndex(lines, questionId);
  if (idx < 0) throw new Error(`no question ${questionId} in template text`);
  const line = lines[idx]!;
  const m = /"(?:\\.|[^"\\])*"/.exec(line);
  if (!m) throw new Error(`question ${questionId} has no prompt string`);
  lines[idx] = line.slice(0, m.index) + `"${escapeString(newPrompt)}"` +
    line.slice(m.index + m[0].length);
  return lines.join("\n");
}

/**
 * Insert a stub question at the end of a section (before its closing `end`).
 * With no section named, the last top-level section is used.
 */
export function addQuestionLine(text: string, label: string,
                                sectionTitle?: string): string {
  const lines = text.split("\n");
  const sectionStarts: { title: string; index: number }[] = [];
  for (let i = 0; i < lines.length; i++) {
    const m = /^section\s+"((?:\\.|[^"\\])*)"/.exec(lines[i]!.trim());
    if (m && /^section\s/.test(lines[i]!)) {
      sectionStarts.push({ title: m[1]!.replace(/\\(.)/g, "$1"), index: i });
    }
  }
  if (sectionStarts.length === 0) throw new Error("template has no sections");
  const target = sectionTitle === undefined
    ? sectionStarts[sectionStarts.length - 1]!
    : sectionStarts.find((s) => s.title === sectionTitle);
  if (!target) throw new Error(`no section titled ${JSON.stringify(sectionTitle)}`);
  // the section's own `end` is the first unindented `end` after its start
  let endIdx = -1;
  for (let i = target.index + 1; i < lines.length; i++) {
    if (/^end\s*$/.test(lines[i]!)) { endIdx = i; break; }
  }
  if (endIdx < 0) throw new Error(`section ${JSON.stringify(target.title)} has no end`);
  const stub = `  question ${slugify(label)} "${escapeString(label)}"`;
  lines.splice(endIdx, 0, stub);
  return lines.join("\n");
}

/** Move a question declaration to the end of another section. */
export function moveQuestionLine(text: string, questionId: string,
                                 sectionTitle: string): string {
  const lines = text.split("\n");
  const idx = questionLineIndex(lines, questionId);
  if (idx < 0) throw new Error(`no question ${questionId} in template text`);
  const [line] = lines.splice(idx, 1);
  const without = lines.join("\n");
  const withoutLines = without.split("\n");
  let sectionIdx = -1;
  for (let i = 0; i < withoutLines.length; i++) {
    const m = /^section\s+"((?:\\.|[^"\\])*)"/.exec(withoutLines[i]!);
    if (m && m[1]!.replace(/\\(.)/g, "$1") === sectionTitle) { sectionIdx = i; break; }
  }
  if (sectionIdx < 0) throw new Error(`no section titled ${JSON.stringify(sectionTitle)}`);
  let endIdx = -1;
  for (let i = sectionIdx + 1; i < withoutLines.length; i++) {
    if (/^end\s*$/.test(withoutLines[i]!)) { endIdx = i; break; }
  }
  if (endIdx < 0) throw new Error(`section ${JSON.stringify(sectionTitle)} has no end`);
  withoutLines.splice(endIdx, 0, "  " + line!.trim());
  return withoutLines.join("\n");
}

/** Bump the vN on the template header line. */
export function bumpVersionLine(text: string): string {
  return text.replace(/^(template\s+"(?:\\.|[^"\\])*"\s+v)(\d+)/m,
    (_all, head: string, n: string) => head + String(Number(n) + 1));
}
