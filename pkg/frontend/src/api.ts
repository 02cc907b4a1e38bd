/**
 * Typed client for the fsforge HTTP service.  The client does no computation
 * of its own: every value it returns is the service's answer, parsed and
 * schema-checked with zod.
 */
import { z } from "zod";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export const diagnosticSchema = z.object({
  line: z.number().int(),
  column: z.number().int(),
  message: z.string(),
});
export type Diagnostic = z.infer<typeof diagnosticSchema>;

export const answerValueSchema = z.object({
  kind: z.enum(["text", "longtext", "number", "metricset", "enum", "uri", "flag"]),
  text: z.string().optional(),
  number: z.number().optional(),
  unit: z.string().optional(),
  metrics: z.record(z.number()).optional(),
  choice: z.string().optional(),
  uri: z.string().optional(),
  flag: z.boolean().optional(),
});
export type AnswerValue = z.infer<typeof answerValueSchema>;

export const provenanceSchema = z.object({
  author: z.string(),
  role: z.string(),
  recorded_at: z.string(),
  source: z.string(),
  record_id: z.string(),
});
export type ProvenanceInfo = z.infer<typeof provenanceSchema>;

export const machineQuestionSchema = z.object({
  id: z.string(),
  prompt: z.string(),
  required: z.boolean(),
  risk: z.boolean(),
  answered: z.boolean(),
  answer: answerValueSchema.nullable(),
  provenance: provenanceSchema.nullable(),
});
export type MachineQuestion = z.infer<typeof machineQuestionSchema>;

export const machineExportSchema = z.object({
  factsheet_schema: z.literal(1),
  subject: z.object({ id: z.string(), version: z.string() }),
  template: z.object({ name: z.string(), version: z.number().int() }),
  as_of: z.string(),
  sections: z.array(
    z.object({ title: z.string(), questions: z.array(machineQuestionSchema) }),
  ),
  completeness: z.object({
    required_total: z.number().int(),
    required_answered: z.number().int(),
    orphaned_records: z.number().int(),
  }),
});
export type MachineExport = z.infer<typeof machineExportSchema>;

export const gateSchema = z.object({
  target_stage: z.string(),
  pass: z.boolean(),
  blocking: z.array(
    z.object({ question_id: z.string(), role: z.string(), stage: z.string() }),
  ),
});
export type GateResult = z.infer<typeof gateSchema>;

export const historyEntrySchema = z.object({
  seq: z.number().int(),
  record_id: z.string(),
  question_id: z.string(),
  role: z.string(),
  author: z.string(),
  recorded_at: z.string(),
  source: z.string(),
  value: answerValueSchema,
  superseded_by: z.string().nullable(),
}).passthrough();
export type HistoryEntry = z.infer<typeof historyEntrySchema>;

export const suggestionReportSchema = z.object({
  template_ref: z.string(),
  session_count: z.number().int(),
  questions: z.array(
    z.object({
      id: z.string(),
      flags: z.record(z.number()),
      mean_rank: z.number().nullable(),
      quartile: z.number().nullable(),
    }),
  ),
  suggestions: z.array(
    z.object({
      action: z.enum(["add", "remove", "reword", "move"]),
      target: z.string(),
      evidence: z.array(z.string()),
    }),
  ),
});
export type SuggestionReportData = z.infer<typeof suggestionReportSchema>;

export interface FactDraft {
  template: string; // "name@version"
  question_id: string;
  value: AnswerValue;
  author: string;
  stage?: string;
  recorded_at?: string;
  source?: string;
  supersedes?: string;
}

export interface SessionRequest {
  kind: string;
  template: string;
  evaluator: string;
  evaluator_role: string;
  subject_id?: string;
  subject_version?: string;
}

export interface ResponseDraft {
  item_index: number;
  flags: string[];
  note?: string;
  question_id?: string;
  proposed_item?: { label: string; why?: string; example?: string };
}

/** A non-2xx answer from the service, carrying its error envelope. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly diagnostics: Diagnostic[] = [],
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

async function raiseServiceError(res: Response): Promise<never> {
  let code = "http_error";
  let message = `${res.status} ${res.statusText}`;
  let diagnostics: Diagnostic[] = [];
  try {
    const body = await res.json();
    if (typeof body.code === "string") code = body.code;
    if (typeof body.message === "string") message = body.message;
    if (Array.isArray(body.diagnostics)) {
      diagnostics = z.array(diagnosticSchema).parse(body.diagnostics);
    }
  } catch {
    // non-JSON error body; keep the HTTP defaults
  }
  throw new ServiceError(res.status, code, message, diagnostics);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private url(path: string, query: Record<string, string | undefined> = {}): string {
    const u = new URL(path, this.baseUrl);
    for (const [key, value] of Object.entries(query)) {
      if (value !== undefined) u.searchParams.set(key, value);
    }
    return u.toString();
  }

  private async request(url: string, init?: RequestInit): Promise<Response> {
    const res = await this.fetchImpl(url, init);
    if (!res.ok) await raiseServiceError(res);
    return res;
  }

  /** Dry-run PUT; resolves to [] when valid, or the parser's diagnostics. */
  async validateTemplate(name: string, version: number, text: string): Promise<Diagnostic[]> {
    const res = await this.fetchImpl(
      this.url(`/templates/${name}/${version}`, { dry_run: "true" }),
      { method: "PUT", body: text, headers: { "Content-Type": "text/plain" } },
    );
    if (res.ok) return [];
    try {
      await raiseServiceError(res);
    } catch (err) {
      if (err instanceof ServiceError && err.code === "template_syntax") {
        return err.diagnostics;
      }
      throw err;
    }
    return []; // unreachable
  }

  async putTemplate(name: string, version: number, text: string): Promise<void> {
    await this.request(this.url(`/templates/${name}/${version}`), {
      method: "PUT",
      body: text,
      headers: { "Content-Type": "text/plain" },
    });
  }

  async getTemplateText(name: string, version: number, audience?: string): Promise<string> {
    const res = await this.request(this.url(`/templates/${name}/${version}`, { audience }));
    return res.text();
  }

  async listTemplates(): Promise<{ name: string; version: number }[]> {
    const res = await this.request(this.url("/templates"));
    return z.array(z.object({ name: z.string(), version: z.number().int() }))
      .parse(await res.json());
  }

  async postFact(subjectId: string, subjectVersion: string, role: string,
                 draft: FactDraft): Promise<string> {
    const res = await this.request(
      this.url(`/subjects/${subjectId}/${subjectVersion}/facts`),
      {
        method: "POST",
        body: JSON.stringify(draft),
        headers: { "Content-Type": "application/json", "X-Role": role },
      },
    );
    const body = z.object({ record_id: z.string() }).parse(await res.json());
    return body.record_id;
  }

  async getFactsheetText(subjectId: string, subjectVersion: string, templateRef: string,
                         format: "summary" | "report" | "slides",
                         opts: { asOf?: string; audience?: string } = {}): Promise<string> {
    const res = await this.request(
      this.url(`/subjects/${subjectId}/${subjectVersion}/factsheet`, {
        template: templateRef, format, as_of: opts.asOf, audience: opts.audience,
      }),
    );
    return res.text();
  }

  async getMachineExport(subjectId: string, subjectVersion: string, templateRef: string,
                         opts: { asOf?: string; audience?: string } = {}): Promise<MachineExport> {
    const res = await this.request(
      this.url(`/subjects/${subjectId}/${subjectVersion}/factsheet`, {
        template: templateRef, format: "machine", as_of: opts.asOf, audience: opts.audience,
      }),
    );
    return machineExportSchema.parse(await res.json());
  }

  async getHistory(subjectId: string, subjectVersion: string,
                   questionId: string): Promise<HistoryEntry[]> {
    const res = await this.request(
      this.url(`/subjects/${subjectId}/${subjectVersion}/history/${questionId}`),
    );
    return z.array(historyEntrySchema).parse(await res.json());
  }

  async getGate(subjectId: string, subjectVersion: string, stage: string,
                templateRef: string, asOf?: string): Promise<GateResult> {
    const res = await this.request(
      this.url(`/subjects/${subjectId}/${subjectVersion}/gate/${stage}`,
               { template: templateRef, as_of: asOf }),
    );
    return gateSchema.parse(await res.json());
  }

  async createSession(req: SessionRequest): Promise<string> {
    const res = await this.request(this.url("/evaluations/sessions"), {
      method: "POST",
      body: JSON.stringify(req),
      headers: { "Content-Type": "application/json" },
    });
    const body = z.object({ id: z.string() }).parse(await res.json());
    return body.id;
  }

  async postResponse(sessionId: string, draft: ResponseDraft): Promise<void> {
    await this.request(this.url(`/evaluations/sessions/${sessionId}/responses`), {
      method: "POST",
      body: JSON.stringify(draft),
      headers: { "Content-Type": "application/json" },
    });
  }

  async postRanking(sessionId: string, elements: string[]): Promise<void> {
    await this.request(this.url(`/evaluations/sessions/${sessionId}/ranking`), {
      method: "POST",
      body: JSON.stringify({ elements }),
      headers: { "Content-Type": "application/json" },
    });
  }

  async getSuggestionReport(templateRef: string,
                            thresholds: Partial<Record<
                              "theta_remove" | "theta_reword" | "theta_add" | "theta_move",
                              number>> = {}): Promise<SuggestionReportData> {
    const query: Record<string, string | undefined> = { template: templateRef };
    for (const [key, value] of Object.entries(thresholds)) {
      if (value !== undefined) query[key] = String(value);
    }
    const res = await this.request(this.url("/evaluations/report", query));
    return suggestionReportSchema.parse(await res.json());
  }
}
