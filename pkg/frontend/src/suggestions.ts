/**
 * Suggestion-review view-model: shows the service's SuggestionReport with its
 * evidence, lets the reviewer accept or reject each suggestion (supplying the
 * missing detail where the evidence alone can't decide it, like a new prompt
 * for a reword), and composes the accepted ones into updated DSL text ready
 * to save as the next template version.
 */
import { ApiClient, SuggestionReportData } from "./api.js";
import {
  addQuestionLine, bumpVersionLine, moveQuestionLine,
  removeQuestionLine, rewordQuestionLine, slugify,
} from "./template.js";

export type Verdict = "pending" | "accepted" | "rejected";

export interface ReviewItem {
  action: "add" | "remove" | "reword" | "move";
  target: string;            // question id, or proposed label for add
  evidence: string[];        // session ids backing the suggestion
  verdict: Verdict;
  /** Reviewer-supplied detail: new prompt (reword) or section title (add/move). */
  newPrompt: string | null;
  sectionTitle: string | null;
}

export class SuggestionReviewModel {
  items: ReviewItem[] = [];
  report: SuggestionReportData | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly templateRef: string,
  ) {}

  async load(): Promise<void> {
    this.report = await this.client.getSuggestionReport(this.templateRef);
    this.items = this.report.suggestions.map((s) => ({
      action: s.action, target: s.target, evidence: [...s.evidence],
      verdict: "pending", newPrompt: null, sectionTitle: null,
    }));
  }

  item(action: string, target: string): ReviewItem {
    const found = this.items.find((i) => i.action === action && i.target === target);
    if (!found) throw new Error(`no ${action} suggestion for ${target}`);
    return found;
  }

  accept(action: string, target: string,
         detail: { newPrompt?: string; sectionTitle?: string } = {}): void {
    const item = this.item(action, target);
    if (item.action === "reword" && !detail.newPrompt) {
      throw new Error("accepting a reword needs the new prompt text");
    }
    if (item.action === "move" && !detail.sectionTitle) {
      throw new Error("accepting a move needs the destination section");
    }
    item.verdict = "accepted";
    item.newPrompt = detail.newPrompt ?? null;
    item.sectionTitle = detail.sectionTitle ?? null;
  }

  reject(action: string, target: string): void {
    this.item(action, target).verdict = "rejected";
  }

  get accepted(): ReviewItem[] {
    return this.items.filter((i) => i.verdict === "accepted");
  }

  /** Placeholder id an accepted add will get; flagged for rename before save. */
  placeholderId(label: string): string { return slugify(label); }

  /**
   * Apply the accepted suggestions to the current DSL text and bump the
   * version.  Rejecting everything returns the input unchanged.
   */
  composeDsl(currentText: string): string {
    const accepted = this.accepted;
    if (accepted.length === 0) return currentText;
    let text = currentText;
    for (const item of accepted) {
      switch (item.action) {
        case "remove":
          text = removeQuestionLine(text, item.target);
          break;
        case "reword":
          text = rewordQuestionLine(text, item.target, item.newPrompt!);
          break;
        case "move":
          text = moveQuestionLine(text, item.target, item.sectionTitle!);
          break;
        case "add":
          text = addQuestionLine(text, item.target, item.sectionTitle ?? undefined);
          break;
      }
    }
    return bumpVersionLine(text);
  }

  /** Fetch the live template text, apply accepted suggestions, return DSL. */
  async exportDsl(): Promise<string> {
    const at = this.templateRef.lastIndexOf("@");
    const name = this.templateRef.slice(0, at);
    const version = Number(this.templateRef.slice(at + 1));
    const current = await this.client.getTemplateText(name, version);
    return this.composeDsl(current);
  }
}
