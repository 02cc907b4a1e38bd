/**
 * Evaluation runner view-model: walks an evaluator through a question bank
 * item by item (flags, note, proposed missing item), then a ranking screen
 * that orders every template question plus any proposed items.  All recorded
 * state lives in the service's session; the runner only sequences input.
 */
import { ApiClient } from "./api.js";

export const FLAGS = ["missing", "extraneous", "confusing", "misplaced", "format_issue"] as const;
export type Flag = (typeof FLAGS)[number];

export interface BankItem {
  index: number;
  prompt: string;
}

export interface ItemDraft {
  flags: Set<Flag>;
  note: string;
  questionId: string | null;       // template question the flags refer to
  proposedLabel: string;           // required when the missing flag is set
  proposedWhy: string;
  proposedExample: string;
}

function emptyDraft(): ItemDraft {
  return { flags: new Set(), note: "", questionId: null,
           proposedLabel: "", proposedWhy: "", proposedExample: "" };
}

export interface RunnerOptions {
  kind: string;                    // e.g. content_eval | presentation_eval
  templateRef: string;
  evaluator: string;
  evaluatorRole: string;
  subjectId?: string;
  subjectVersion?: string;
}

export class EvaluationRunner {
  sessionId: string | null = null;
  position = 0;
  readonly drafts: ItemDraft[];
  private readonly proposedLabels: string[] = [];

  constructor(
    private readonly client: ApiClient,
    private readonly opts: RunnerOptions,
    readonly items: BankItem[],
  ) {
    if (items.length === 0) throw new Error("bank has no items");
    this.drafts = items.map(() => emptyDraft());
  }

  get currentItem(): BankItem { return this.items[this.position]!; }
  get currentDraft(): ItemDraft { return this.drafts[this.position]!; }
  get finished(): boolean { return this.position >= this.items.length; }
  get stepLabel(): string { return `${this.position + 1} / ${this.items.length}`; }

  async start(): Promise<void> {
    this.sessionId = await this.client.createSession({
      kind: this.opts.kind,
      template: this.opts.templateRef,
      evaluator: this.opts.evaluator,
      evaluator_role: this.opts.evaluatorRole,
      ...(this.opts.subjectId !== undefined ? { subject_id: this.opts.subjectId } : {}),
      ...(this.opts.subjectVersion !== undefined
        ? { subject_version: this.opts.subjectVersion } : {}),
    });
  }

  toggleFlag(flag: Flag): void {
    const draft = this.currentDraft;
    if (draft.flags.has(flag)) draft.flags.delete(flag);
    else draft.flags.add(flag);
  }

  setNote(note: string): void { this.currentDraft.note = note; }
  setQuestionId(questionId: string | null): void { this.currentDraft.questionId = questionId; }
  setProposed(label: string, why = "", example = ""): void {
    const draft = this.currentDraft;
    draft.proposedLabel = label;
    draft.proposedWhy = why;
    draft.proposedExample = example;
  }

  /** Why the Next button is disabled, or null when the step can be left. */
  blockReason(): string | null {
    const draft = this.currentDraft;
    if (draft.flags.has("missing") && draft.proposedLabel.trim() === "") {
      return "the missing flag needs a proposed item label";
    }
    return null;
  }

  /** Record the current step with the service and advance. */
  async next(): Promise<void> {
    if (!this.sessionId) throw new Error("call start() first");
    if (this.finished) throw new Error("already past the last item");
    const reason = this.blockReason();
    if (reason) throw new Error(reason);
    const draft = this.currentDraft;
    await this.client.postResponse(this.sessionId, {
      item_index: this.currentItem.index,
      flags: [...draft.flags],
      note: draft.note,
      ...(draft.questionId !== null ? { question_id: draft.questionId } : {}),
      ...(draft.flags.has("missing")
        ? { proposed_item: { label: draft.proposedLabel,
                             why: draft.proposedWhy, example: draft.proposedExample } }
        : {}),
    });
    if (draft.flags.has("missing")) this.proposedLabels.push(draft.proposedLabel);
    this.position += 1;
  }

  /** The ranking screen: template questions plus this session's proposals. */
  rankingScreen(questionIds: string[]): RankingModel {
    if (!this.sessionId) throw new Error("call start() first");
    return new RankingModel(this.client, this.sessionId,
                            [...questionIds, ...this.proposedLabels]);
  }
}

/**
 * Drag-to-reorder list of every element the evaluator must place.  Submission
 * is refused (client-side, mirroring the service) unless the order is a
 * permutation of the required elements.
 */
export class RankingModel {
  order: string[];
  submitted = false;

  constructor(
    private readonly client: ApiClient,
    private readonly sessionId: string,
    readonly required: string[],
  ) {
    this.order = [...required];
  }

  /** Drag the element at `from` so it lands at `to` (0-based slots). */
  move(from: number, to: number): void {
    if (from < 0 || from >= this.order.length || to < 0 || to >= this.order.length) {
      throw new Error("drag out of range");
    }
    const [el] = this.order.splice(from, 1);
    this.order.splice(to, 0, el!);
  }

  /** Replace the whole order, e.g. after a multi-drag gesture. */
  setOrder(order: string[]): void { this.order = [...order]; }

  /** Null when `order` is a permutation of the required elements. */
  permutationProblem(order: string[] = this.order): string | null {
    const seen = new Set<string>();
    for (const el of order) {
      if (seen.has(el)) return `duplicate element ${el}`;
      seen.add(el);
    }
    for (const el of this.required) {
      if (!seen.has(el)) return `every element must be placed: missing ${el}`;
    }
    for (const el of order) {
      if (!this.required.includes(el)) return `unknown element ${el}`;
    }
    return null;
  }

  async submit(): Promise<void> {
    const problem = this.permutationProblem();
    if (problem) throw new Error(problem);
    await this.client.postRanking(this.sessionId, this.order);
    this.submitted = true;
  }
}
