import { describe, expect, it } from "vitest";

import {
  addStep,
  applyValidation,
  canInsertRef,
  canSubmit,
  freshEditor,
  loadLexicon,
  localViolations,
  refChips,
  removeStep,
  suggest,
} from "../src/editor.js";

function atisEditor() {
  const state = freshEditor("ATIS_train_1", "I would like a flight from Toronto to San Diego please.");
  loadLexicon(
    state,
    ["flight", "flights", "toronto", "san", "diego", "like"],
    ["from", "to", "the", "of", "for each", "number of"],
  );
  return state;
}

describe("suggestions", () => {
  it("offers lexicon words for a prefix", () => {
    const state = atisEditor();
    expect(suggest(state, "tor")).toEqual(["toronto"]);
  });

  it("offers nothing for an empty prefix or exact word", () => {
    const state = atisEditor();
    expect(suggest(state, "")).toEqual([]);
    expect(suggest(state, "toronto")).toEqual([]);
  });

  it("includes function words", () => {
    const state = atisEditor();
    expect(suggest(state, "fro")).toContain("from");
  });
});

describe("reference chips", () => {
  it("blocks forward references while editing", () => {
    expect(canInsertRef(1, 2)).toBe(true);
    expect(canInsertRef(3, 2)).toBe(false);
    expect(canInsertRef(2, 2)).toBe(false);
    expect(canInsertRef(0, 2)).toBe(false);
  });

  it("offers chips only for existing steps", () => {
    const state = atisEditor();
    expect(refChips(state)).toEqual([]);
    addStep(state, "return flights");
    addStep(state, "return #1 from toronto");
    expect(refChips(state)).toEqual(["#1", "#2"]);
  });
});

describe("local pre-filter", () => {
  it("accepts lexicon words, refs, and function words", () => {
    const state = atisEditor();
    expect(localViolations(state, "return #1 from toronto")).toEqual([]);
  });

  it("flags out-of-lexicon words", () => {
    const state = atisEditor();
    expect(localViolations(state, "return spaceships from toronto")).toEqual(["spaceships"]);
  });
});

describe("submission gating", () => {
  it("requires a clean validated snapshot", () => {
    const state = atisEditor();
    expect(canSubmit(state)).toBe(false);
    addStep(state, "return flights");
    expect(canSubmit(state)).toBe(false); // dirty until the server confirms
    applyValidation(state, {
      schema_version: 1,
      violations: [[]],
      operators: ["SELECT"],
      graph: { nodes: [{ id: 1, label: "flights" }], edges: [] },
      errors: [],
    });
    expect(canSubmit(state)).toBe(true);
  });

  it("stays disabled while violations exist", () => {
    const state = atisEditor();
    addStep(state, "return spaceships");
    applyValidation(state, {
      schema_version: 1,
      violations: [[{ token: "spaceships", position: 2 }]],
      operators: ["SELECT"],
      graph: null,
      errors: [],
    });
    expect(canSubmit(state)).toBe(false);
  });

  it("stays disabled on hard errors and after edits", () => {
    const state = atisEditor();
    addStep(state, "return flights");
    applyValidation(state, {
      schema_version: 1,
      violations: [[]],
      operators: ["SELECT"],
      graph: null,
      errors: ["step 1: something"],
    });
    expect(canSubmit(state)).toBe(false);
    state.errors = [];
    state.dirty = false;
    expect(canSubmit(state)).toBe(true);
    removeStep(state, 0);
    expect(canSubmit(state)).toBe(false); // empty and dirty again
  });
});
