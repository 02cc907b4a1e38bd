/**
 * Fact-entry view-model: one input control per question visible to the chosen
 * audience, keyed to the question's answer kind.  Client-side validation only
 * mirrors the answer spec (so obvious mistakes are caught before a round
 * trip); the service remains the authority and its rejections are surfaced
 * as-is.  Displayed completeness comes straight from the machine export.
 */
import {
  AnswerValue, ApiClient, MachineQuestion, ServiceError,
} from "./api.js";
import { parseOutline, visibleQuestions, VisibleQuestion } from "./template.js";

export type ControlKind =
  | "textbox"       // text
  | "textarea"      // longtext
  | "number_field"  // number, with unit adornment
  | "metric_grid"   // metricset, one row per declared metric
  | "select"        // enum
  | "link_field"    // uri
  | "toggle";       // flag

const CONTROL_FOR_KIND: Record<string, ControlKind> = {
  text: "textbox",
  longtext: "textarea",
  number: "number_field",
  metricset: "metric_grid",
  enum: "select",
  uri: "link_field",
  flag: "toggle",
};

export interface FieldInput {
  text: string;
  number: string;               // raw text of the number field
  metrics: Record<string, string>; // metric name -> raw text, one row each
  choice: string | null;
  uri: string;
  flag: boolean;
}

export class FieldModel {
  readonly control: ControlKind;
  readonly input: FieldInput;
  /** Current answer + provenance as exported by the service, if answered. */
  current: MachineQuestion | null = null;

  constructor(readonly question: VisibleQuestion) {
    this.control = CONTROL_FOR_KIND[question.spec.kind]!;
    const metrics: Record<string, string> = {};
    for (const name of question.spec.metrics) metrics[name] = "";
    this.input = { text: "", number: "", metrics, choice: null, uri: "", flag: false };
  }

  /** Unit label shown next to the number field, if any. */
  get unit(): string | null { return this.question.spec.unit; }
  /** Rows of the metric grid, in declaration order. */
  get metricRows(): string[] { return this.question.spec.metrics; }
  /** Options of the select control. */
  get choices(): string[] { return this.question.spec.choices; }

  setText(value: string): void { this.input.text = value; }
  setNumber(value: string): void { this.input.number = value; }
  setMetric(name: string, value: string): void {
    if (!(name in this.input.metrics)) throw new Error(`no metric row ${name}`);
    this.input.metrics[name] = value;
  }
  setChoice(value: string): void { this.input.choice = value; }
  setUri(value: string): void { this.input.uri = value; }
  setFlag(value: boolean): void { this.input.flag = value; }

  /** Null when the draft passes the client-side mirror of the answer spec. */
  validate(): string | null {
    const spec = this.question.spec;
    switch (spec.kind) {
      case "text":
      case "longtext":
        return this.input.text ? null : "enter a value";
      case "number":
        return Number.isFinite(Number.parseFloat(this.input.number))
          ? null : "enter a number";
      case "metricset": {
        const entered = Object.entries(this.input.metrics)
          .filter(([, v]) => v.trim() !== "");
        if (entered.length === 0) return "enter at least one metric";
        for (const [name, v] of entered) {
          if (!Number.isFinite(Number.parseFloat(v))) return `${name} must be a number`;
        }
        return null;
      }
      case "enum":
        return this.input.choice !== null && spec.choices.includes(this.input.choice)
          ? null : "pick one of the declared choices";
      case "uri":
        return this.input.uri ? null : "enter a link";
      case "flag":
        return null;
    }
  }

  /** The AnswerValue this field's inputs describe.  Call validate() first. */
  draftValue(): AnswerValue {
    const spec = this.question.spec;
    switch (spec.kind) {
      case "text":
      case "longtext":
        return { kind: spec.kind, text: this.input.text };
      case "number": {
        const value: AnswerValue = { kind: "number", number: Number.parseFloat(this.input.number) };
        if (spec.unit !== null) value.unit = spec.unit;
        return value;
      }
      case "metricset": {
        const metrics: Record<string, number> = {};
        for (const [name, v] of Object.entries(this.input.metrics)) {
          if (v.trim() !== "") metrics[name] = Number.parseFloat(v);
        }
        return { kind: "metricset", metrics };
      }
      case "enum":
        return { kind: "enum", choice: this.input.choice ?? "" };
      case "uri":
        return { kind: "uri", uri: this.input.uri };
      case "flag":
        return { kind: "flag", flag: this.input.flag };
    }
  }
}

export interface FactEntryOptions {
  subjectId: string;
  subjectVersion: string;
  templateName: string;
  templateVersion: number;
  audience: string | null;
  role: string;   // sent as X-Role on every submit
  author: string;
}

export class FactEntryForm {
  fields: FieldModel[] = [];
  /** Completeness exactly as the service's machine export reports it. */
  completeness = { required_answered: 0, required_total: 0 };
  /** Error from the last submit attempt that the service rejected. */
  lastError: ServiceError | null = null;

  private constructor(
    private readonly client: ApiClient,
    private readonly opts: FactEntryOptions,
  ) {}

  get templateRef(): string {
    return `${this.opts.templateName}@${this.opts.templateVersion}`;
  }

  static async open(client: ApiClient, opts: FactEntryOptions): Promise<FactEntryForm> {
    const form = new FactEntryForm(client, opts);
    const text = await client.getTemplateText(opts.templateName, opts.templateVersion);
    const outline = parseOutline(text);
    form.fields = visibleQuestions(outline, opts.audience).map((q) => new FieldModel(q));
    await form.refresh();
    return form;
  }

  field(questionId: string): FieldModel {
    const field = this.fields.find((f) => f.question.id === questionId);
    if (!field) throw new Error(`no visible question ${questionId}`);
    return field;
  }

  /** Re-pull current answers, provenance and completeness from the service. */
  async refresh(): Promise<void> {
    const exported = await this.client.getMachineExport(
      this.opts.subjectId, this.opts.subjectVersion, this.templateRef,
      this.opts.audience ? { audience: this.opts.audience } : {});
    const byId = new Map<string, MachineQuestion>();
    for (const section of exported.sections) {
      for (const q of section.questions) byId.set(q.id, q);
    }
    for (const field of this.fields) {
      const entry = byId.get(field.question.id);
      field.current = entry && entry.answered ? entry : null;
    }
    this.completeness = {
      required_answered: exported.completeness.required_answered,
      required_total: exported.completeness.required_total,
    };
  }

  /**
   * Post the field's draft.  Client-side validation blocks clearly invalid
   * drafts unless `force` is set; a forced submit lets the service's own
   * rejection come through (stored in lastError and rethrown).
   */
  async submit(questionId: string, extra: { force?: boolean; supersede?: boolean } = {}):
      Promise<string> {
    const field = this.field(questionId);
    const problem = field.validate();
    if (problem && !extra.force) throw new Error(`invalid input: ${problem}`);
    const draft = {
      template: this.templateRef,
      question_id: questionId,
      value: field.draftValue(),
      author: this.opts.author,
      ...(extra.supersede && field.current?.provenance
        ? { supersedes: field.current.provenance.record_id }
        : {}),
    };
    this.lastError = null;
    try {
      const recordId = await this.client.postFact(
        this.opts.subjectId, this.opts.subjectVersion, this.opts.role, draft);
      await this.refresh();
      return recordId;
    } catch (err) {
      if (err instanceof ServiceError) this.lastError = err;
      throw err;
    }
  }

  /** Old and new values of a question, oldest first, for the history panel. */
  async history(questionId: string) {
    return this.client.getHistory(this.opts.subjectId, this.opts.subjectVersion, questionId);
  }
}
