/**
 * Template editor view-model: DSL text on the left, parsed preview on the
 * right, diagnostics inline.  Every change is validated by the service via a
 * dry-run PUT so the diagnostics shown are exactly the parser's, at their
 * original line/column.
 */
import { ApiClient, Diagnostic } from "./api.js";
import { parseOutline, TemplateOutline, visibleQuestions, VisibleQuestion } from "./template.js";

export interface EditorState {
  text: string;
  diagnostics: Diagnostic[];
  /** Parsed structure, or null while the text has errors. */
  outline: TemplateOutline | null;
  /** Selected audience for the preview pane; null = all questions. */
  audience: string | null;
}

export class TemplateEditorModel {
  private state: EditorState = { text: "", diagnostics: [], outline: null, audience: null };

  constructor(
    private readonly client: ApiClient,
    private readonly name: string,
    private readonly version: number,
  ) {}

  get text(): string { return this.state.text; }
  get diagnostics(): Diagnostic[] { return this.state.diagnostics; }
  get outline(): TemplateOutline | null { return this.state.outline; }
  get audience(): string | null { return this.state.audience; }
  get valid(): boolean { return this.state.diagnostics.length === 0; }

  /** Diagnostics for one editor line, for inline gutter markers. */
  diagnosticsAt(line: number): Diagnostic[] {
    return this.state.diagnostics.filter((d) => d.line === line);
  }

  /** Replace the buffer and re-validate against the service. */
  async setText(text: string): Promise<void> {
    const diagnostics = await this.client.validateTemplate(this.name, this.version, text);
    const outline = diagnostics.length === 0 ? parseOutline(text) : null;
    const audience =
      outline && this.state.audience && outline.audiences.includes(this.state.audience)
        ? this.state.audience
        : null;
    this.state = { text, diagnostics, outline, audience };
  }

  /** Audience dropdown: null shows every question. */
  setAudience(audience: string | null): void {
    if (audience !== null && !(this.state.outline?.audiences ?? []).includes(audience)) {
      throw new Error(`template does not declare audience ${audience}`);
    }
    this.state = { ...this.state, audience };
  }

  /** Questions the preview pane lists for the selected audience. */
  preview(): VisibleQuestion[] {
    if (!this.state.outline) return [];
    return visibleQuestions(this.state.outline, this.state.audience);
  }

  /** Persist the buffer; only callable once the text validates. */
  async save(): Promise<void> {
    if (!this.valid) throw new Error("cannot save a template with diagnostics");
    await this.client.putTemplate(this.name, this.version, this.state.text);
  }
}
