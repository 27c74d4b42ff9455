import { describe, expect, it } from "vitest";

import type { GraphDocument } from "../src/api.js";
import { layout, renderSvg } from "../src/graph_view.js";

const CHAIN: GraphDocument = {
  nodes: [
    { id: 1, label: "flights" },
    { id: 2, label: "#1 from toronto" },
    { id: 3, label: "#2 to san diego" },
  ],
  edges: [
    { from: 1, to: 2 },
    { from: 2, to: 3 },
  ],
};

describe("layout", () => {
  it("places a chain left to right", () => {
    const placed = layout(CHAIN);
    expect(placed.map((n) => n.layer)).toEqual([0, 1, 2]);
    expect(placed[0].x).toBeLessThan(placed[1].x);
    expect(placed[1].x).toBeLessThan(placed[2].x);
  });

  it("stacks siblings within a layer", () => {
    const diamond: GraphDocument = {
      nodes: [
        { id: 1, label: "a" },
        { id: 2, label: "b" },
        { id: 3, label: "c" },
        { id: 4, label: "d" },
      ],
      edges: [
        { from: 1, to: 2 },
        { from: 1, to: 3 },
        { from: 2, to: 4 },
        { from: 3, to: 4 },
      ],
    };
    const placed = layout(diamond);
    const byId = new Map(placed.map((n) => [n.id, n]));
    expect(byId.get(2)!.layer).toBe(1);
    expect(byId.get(3)!.layer).toBe(1);
    expect(byId.get(2)!.y).not.toBe(byId.get(3)!.y);
    expect(byId.get(4)!.layer).toBe(2);
  });

  it("uses the deepest parent for layering", () => {
    const skip: GraphDocument = {
      nodes: [
        { id: 1, label: "a" },
        { id: 2, label: "b" },
        { id: 3, label: "c" },
      ],
      edges: [
        { from: 1, to: 2 },
        { from: 1, to: 3 },
        { from: 2, to: 3 },
      ],
    };
    const placed = layout(skip);
    expect(placed.map((n) => n.layer)).toEqual([0, 1, 2]);
  });
});

describe("svg rendering", () => {
  it("draws one node group per step and one path per edge", () => {
    const svg = renderSvg(CHAIN);
    expect(svg.match(/<g class="node"/g)).toHaveLength(3);
    expect(svg.match(/<path class="edge"/g)).toHaveLength(2);
    expect(svg).toContain('data-from="1" data-to="2"');
    expect(svg).toContain('data-from="2" data-to="3"');
  });

  it("escapes labels", () => {
    const svg = renderSvg({
      nodes: [{ id: 1, label: "a < b" }],
      edges: [],
    });
    expect(svg).toContain("a &lt; b");
  });
});
