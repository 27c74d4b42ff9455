/** DOM wiring for the annotation workspace.
 *
 * One question at a time: fetch it, fetch its closed lexicon, compose steps
 * with chip suggestions and backwards-only reference chips, let the server
 * validate on every change (debounced), preview the decomposition graph, and
 * submit once the snapshot is clean. Network failures surface as a banner and
 * never drop editor state.
 */

import { AnnotateApiClient, ApiError } from "./api.js";
import {
  EditorState,
  addStep,
  applyValidation,
  canSubmit,
  freshEditor,
  loadLexicon,
  localViolations,
  refChips,
  removeStep,
  suggest,
} from "./editor.js";
import { renderSvg } from "./graph_view.js";

export interface AppOptions {
  annotatorId: string;
  split?: string;
  mode?: string;
  debounceMs?: number;
}

export class AnnotateApp {
  state: EditorState | null = null;
  private pending: Promise<void> = Promise.resolve();
  private debounceHandle: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: AnnotateApiClient,
    private readonly options: AppOptions,
  ) {}

  /** Everything queued so far has settled. */
  idle(): Promise<void> {
    return this.pending;
  }

  private queue(work: () => Promise<void>): Promise<void> {
    this.pending = this.pending.then(work, work);
    return this.pending;
  }

  start(): Promise<void> {
    this.renderSkeleton();
    return this.queue(() => this.loadNextQuestion());
  }

  private renderSkeleton(): void {
    this.root.innerHTML = `
      <div id="banner" class="banner" hidden></div>
      <section id="workspace" hidden>
        <h2 id="question-text"></h2>
        <div id="chips">
          <div id="ref-chips"></div>
        </div>
        <div class="composer">
          <input id="step-input" type="text" autocomplete="off"
                 placeholder="return …" />
          <button id="add-step" type="button">add step</button>
          <ul id="suggestions"></ul>
          <div id="local-violations" class="hint"></div>
        </div>
        <ol id="steps"></ol>
        <div id="errors"></div>
        <div id="graph"></div>
        <button id="submit" type="button" disabled>submit</button>
      </section>
      <section id="done" hidden><h2>all questions annotated</h2></section>
    `;
    this.element("step-input").addEventListener("input", () => this.onType());
    this.element("add-step").addEventListener("click", () => {
      void this.addStepFromInput();
    });
    this.element("submit").addEventListener("click", () => {
      void this.submit();
    });
  }

  private element(id: string): HTMLElement {
    const found = this.root.querySelector(`#${id}`);
    if (!found) {
      throw new Error(`missing element #${id}`);
    }
    return found as HTMLElement;
  }

  private showBanner(message: string): void {
    const banner = this.element("banner");
    banner.textContent = message;
    banner.hidden = false;
  }

  private clearBanner(): void {
    this.element("banner").hidden = true;
  }

  private async loadNextQuestion(): Promise<void> {
    try {
      const question = await this.client.nextQuestion(this.options.split);
      if (question === null) {
        this.element("workspace").hidden = true;
        this.element("done").hidden = false;
        this.state = null;
        return;
      }
      this.state = freshEditor(question.id, question.text);
      const lexicon = await this.client.lexicon(question.text);
      loadLexicon(this.state, lexicon.tokens, lexicon.function_words);
      this.element("workspace").hidden = false;
      this.element("done").hidden = true;
      this.element("question-text").textContent = question.text;
      this.clearBanner();
      this.renderEditor();
    } catch (err) {
      this.showBanner(`could not reach the annotation service: ${String(err)}`);
    }
  }

  private onType(): void {
    if (!this.state) {
      return;
    }
    const input = this.element("step-input") as HTMLInputElement;
    const lastWord = input.value.split(/\s+/).pop() ?? "";
    const items = suggest(this.state, lastWord);
    this.element("suggestions").innerHTML = items
      .map((word) => `<li class="suggestion">${word}</li>`)
      .join("");
    const unknown = localViolations(this.state, input.value);
    this.element("local-violations").textContent = unknown.length
      ? `outside the lexicon: ${unknown.join(", ")}`
      : "";
  }

  addStepFromInput(): Promise<void> {
    const input = this.element("step-input") as HTMLInputElement;
    const text = input.value.trim();
    if (!text || !this.state) {
      return this.idle();
    }
    addStep(this.state, text);
    input.value = "";
    this.element("suggestions").innerHTML = "";
    this.element("local-violations").textContent = "";
    this.renderEditor();
    return this.scheduleValidation();
  }

  removeStepAt(index: number): Promise<void> {
    if (!this.state) {
      return this.idle();
    }
    removeStep(this.state, index);
    this.renderEditor();
    return this.scheduleValidation();
  }

  private scheduleValidation(): Promise<void> {
    const delay = this.options.debounceMs ?? 250;
    if (this.debounceHandle !== null) {
      clearTimeout(this.debounceHandle);
    }
    return this.queue(
      () =>
        new Promise<void>((resolve) => {
          this.debounceHandle = setTimeout(() => {
            void this.validateNow().then(resolve);
          }, delay);
        }),
    );
  }

  private async validateNow(): Promise<void> {
    if (!this.state || this.state.steps.length === 0) {
      this.renderEditor();
      return;
    }
    try {
      const response = await this.client.validate(
        this.state.questionText,
        this.state.steps.map((step) => step.text),
        this.options.mode ?? "standard",
      );
      applyValidation(this.state, response);
      this.clearBanner();
    } catch (err) {
      this.showBanner(`validation failed: ${String(err)}`);
    }
    this.renderEditor();
  }

  submit(): Promise<void> {
    return this.queue(async () => {
      if (!this.state || !canSubmit(this.state)) {
        return;
      }
      try {
        await this.client.submit({
          question_id: this.state.questionId,
          question_text: this.state.questionText,
          steps: this.state.steps.map((step) => step.text),
          annotator_id: this.options.annotatorId,
          mode: this.options.mode ?? "standard",
        });
        await this.loadNextQuestion();
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          this.showBanner("the server rejected the annotation; fix the highlighted steps");
          await this.validateNow();
        } else {
          this.showBanner(`submit failed: ${String(err)}`);
        }
      }
    });
  }

  private renderEditor(): void {
    if (!this.state) {
      return;
    }
    this.element("ref-chips").innerHTML = refChips(this.state)
      .map((chip) => `<button type="button" class="ref-chip">${chip}</button>`)
      .join("");
    const items = this.state.steps.map((step, i) => {
      const label = step.operator ?? "…";
      const violations = step.violations
        .map((v) => `<span class="violation">${v.token}@${v.position}</span>`)
        .join(" ");
      const violationClass = step.violations.length > 0 ? " has-violations" : "";
      return (
        `<li class="step${violationClass}" data-index="${i}">` +
        `<span class="step-text">${step.text}</span>` +
        `<span class="op-label">${label}</span>` +
        `${violations}` +
        `<button type="button" class="remove" data-index="${i}">×</button></li>`
      );
    });
    this.element("steps").innerHTML = items.join("");
    for (const button of this.root.querySelectorAll<HTMLButtonElement>("button.remove")) {
      button.addEventListener("click", () => {
        void this.removeStepAt(Number(button.dataset.index));
      });
    }
    this.element("errors").innerHTML = this.state.errors
      .map((message) => `<div class="error">${message}</div>`)
      .join("");
    this.element("graph").innerHTML = this.state.graph ? renderSvg(this.state.graph) : "";
    (this.element("submit") as HTMLButtonElement).disabled = !canSubmit(this.state);
  }
}

export function mount(root: HTMLElement, baseUrl: string, options: AppOptions): AnnotateApp {
  const app = new AnnotateApp(root, new AnnotateApiClient(baseUrl), options);
  void app.start();
  return app;
}
