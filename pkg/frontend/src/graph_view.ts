/** Left-to-right layered rendering of the decomposition DAG preview.
 * Pure layout plus SVG string generation; the graph document comes from the
 * server verbatim and no graph logic lives client-side beyond placement. */

import type { GraphDocument } from "./api.js";

export interface PlacedNode {
  id: number;
  label: string;
  layer: number;
  row: number;
  x: number;
  y: number;
}

const LAYER_WIDTH = 170;
const ROW_HEIGHT = 64;
const NODE_WIDTH = 130;
const NODE_HEIGHT = 40;
const MARGIN = 24;

/** Longest-path layering: a node sits one layer right of its deepest parent. */
export function layout(graph: GraphDocument): PlacedNode[] {
  const layers = new Map<number, number>();
  const ordered = [...graph.nodes].sort((a, b) => a.id - b.id);
  for (const node of ordered) {
    let layer = 0;
    for (const edge of graph.edges) {
      if (edge.to === node.id) {
        layer = Math.max(layer, (layers.get(edge.from) ?? 0) + 1);
      }
    }
    layers.set(node.id, layer);
  }
  const rows = new Map<number, number>();
  return ordered.map((node) => {
    const layer = layers.get(node.id) ?? 0;
    const row = rows.get(layer) ?? 0;
    rows.set(layer, row + 1);
    return {
      id: node.id,
      label: node.label,
      layer,
      row,
      x: MARGIN + layer * LAYER_WIDTH,
      y: MARGIN + row * ROW_HEIGHT,
    };
  });
}

function escapeXml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

function truncate(label: string, max = 18): string {
  return label.length <= max ? label : `${label.slice(0, max - 1)}…`;
}

/** SVG markup for the preview pane. */
export function renderSvg(graph: GraphDocument): string {
  const placed = layout(graph);
  const byId = new Map(placed.map((node) => [node.id, node]));
  const width = Math.max(...placed.map((n) => n.x + NODE_WIDTH), 0) + MARGIN;
  const height = Math.max(...placed.map((n) => n.y + NODE_HEIGHT), 0) + MARGIN;
  const parts: string[] = [
    `<svg class="dag" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">`,
    `<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="7" refY="3" orient="auto">` +
      `<path d="M0,0 L7,3 L0,6 z" fill="currentColor"/></marker></defs>`,
  ];
  for (const edge of graph.edges) {
    const from = byId.get(edge.from);
    const to = byId.get(edge.to);
    if (!from || !to) {
      continue;
    }
    const x1 = from.x + NODE_WIDTH;
    const y1 = from.y + NODE_HEIGHT / 2;
    const x2 = to.x;
    const y2 = to.y + NODE_HEIGHT / 2;
    parts.push(
      `<path class="edge" data-from="${edge.from}" data-to="${edge.to}" ` +
        `d="M${x1},${y1} C${x1 + 30},${y1} ${x2 - 30},${y2} ${x2},${y2}" ` +
        `fill="none" marker-end="url(#arrow)"/>`,
    );
  }
  for (const node of placed) {
    parts.push(
      `<g class="node" data-id="${node.id}">` +
        `<rect x="${node.x}" y="${node.y}" width="${NODE_WIDTH}" height="${NODE_HEIGHT}" rx="8"/>` +
        `<text x="${node.x + 8}" y="${node.y + 17}" class="node-id">${node.id}</text>` +
        `<text x="${node.x + 8}" y="${node.y + 32}" class="node-label">` +
        `${escapeXml(truncate(node.label))}</text></g>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
