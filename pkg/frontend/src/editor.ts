/** Editor state machine: steps under edit, their validation results, and the
 * client-side pre-filters that keep composition inside the closed lexicon.
 * The server stays authoritative; everything here is responsiveness only. */

import type { GraphDocument, ValidateResponse, Violation } from "./api.js";

export interface StepState {
  text: string;
  operator: string | null;
  violations: Violation[];
}

export interface EditorState {
  questionId: string;
  questionText: string;
  steps: StepState[];
  lexiconTokens: Set<string>;
  functionWords: string[];
  graph: GraphDocument | null;
  errors: string[];
  dirty: boolean;
}

export function freshEditor(questionId: string, questionText: string): EditorState {
  return {
    questionId,
    questionText,
    steps: [],
    lexiconTokens: new Set(),
    functionWords: [],
    graph: null,
    errors: [],
    dirty: false,
  };
}

export function loadLexicon(state: EditorState, tokens: string[], functionWords: string[]): void {
  state.lexiconTokens = new Set(tokens.map((t) => t.toLowerCase()));
  state.functionWords = functionWords.map((w) => w.toLowerCase());
}

/** Word chips offered while typing: question words and function words that
 * start with the prefix (case-insensitive), alphabetical, capped. */
export function suggest(state: EditorState, prefix: string, limit = 8): string[] {
  const needle = prefix.toLowerCase();
  if (!needle) {
    return [];
  }
  const pool = [...state.lexiconTokens, ...state.functionWords];
  const hits = pool.filter((w) => w.startsWith(needle) && w !== needle);
  return [...new Set(hits)].sort().slice(0, limit);
}

/** A reference chip #k may only be inserted while editing step index (1-based)
 * when k points strictly backwards. */
export function canInsertRef(k: number, editingStepIndex: number): boolean {
  return k >= 1 && k < editingStepIndex;
}

export function refChips(state: EditorState): string[] {
  const editing = state.steps.length + 1;
  const chips: string[] = [];
  for (let k = 1; k < editing; k += 1) {
    chips.push(`#${k}`);
  }
  return chips;
}

/** Local mirror of the server-side lexicon rule, for instant feedback: every
 * word must be a question word, a function word, or a reference. Multi-word
 * function entries cover their span. */
export function localViolations(state: EditorState, stepText: string): string[] {
  const words = stepText
    .toLowerCase()
    .split(/\s+/)
    .filter((w) => w.length > 0 && w !== "return");
  const allowed = new Set(state.lexiconTokens);
  for (const entry of state.functionWords) {
    for (const part of entry.split(" ")) {
      allowed.add(part);
    }
  }
  return words.filter((w) => !/^#\d+$/.test(w) && !allowed.has(w.replace(/[?.!,]+$/, "")));
}

export function setSteps(state: EditorState, texts: string[]): void {
  state.steps = texts.map((text) => ({ text, operator: null, violations: [] }));
  state.dirty = true;
}

export function addStep(state: EditorState, text: string): void {
  state.steps.push({ text, operator: null, violations: [] });
  state.dirty = true;
}

export function removeStep(state: EditorState, index: number): void {
  state.steps.splice(index, 1);
  state.dirty = true;
}

/** Fold a /validate response into the state. */
export function applyValidation(state: EditorState, response: ValidateResponse): void {
  response.operators.forEach((operator, i) => {
    if (state.steps[i]) {
      state.steps[i].operator = operator;
    }
  });
  response.violations.forEach((violations, i) => {
    if (state.steps[i]) {
      state.steps[i].violations = violations;
    }
  });
  state.graph = response.graph;
  state.errors = response.errors;
  state.dirty = false;
}

/** Submission is enabled only when the server reported a clean snapshot. */
export function canSubmit(state: EditorState): boolean {
  if (state.dirty || state.steps.length === 0 || state.errors.length > 0) {
    return false;
  }
  return state.steps.every((step) => step.violations.length === 0);
}
