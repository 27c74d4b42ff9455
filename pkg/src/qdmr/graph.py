"""Decomposition graphs: the DAG induced by reference tokens.

Each step is a node labeled by its token sequence; a reference to step ``j``
inside step ``i`` induces the directed edge ``j -> i`` (data flows from the
referenced step into its consumer). Because references point strictly
backwards, index order is always a valid topological order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from qdmr.core import Qdmr


@dataclass(frozen=True)
class Issue:
    kind: str  # OrphanStep | DuplicateEdge | IndexGap
    detail: str
    node: int | None = None


@dataclass(frozen=True)
class DecompositionGraph:
    """Nodes are (index, token sequence); edges are (source, target) with
    source < target. Multiple references between the same pair collapse to a
    single edge; multiplicity stays visible on the node's tokens."""

    nodes: tuple[tuple[int, tuple[str, ...]], ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def node_tokens(self, index: int) -> tuple[str, ...]:
        for i, tokens in self.nodes:
            if i == index:
                return tokens
        raise KeyError(index)

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)


def to_graph(d: Qdmr) -> DecompositionGraph:
    """Build the decomposition DAG: one node per step, one edge per distinct
    (referenced, referencing) pair."""
    nodes = tuple((step.index, step.tokens) for step in d.steps)
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for step in d.steps:
        for ref in step.refs:
            edge = (ref, step.index)
            if edge not in seen:
                seen.add(edge)
                edges.append(edge)
    return DecompositionGraph(nodes=nodes, edges=tuple(sorted(edges)))


def validate(g: DecompositionGraph) -> list[Issue]:
    """Report structural findings; none of them is fatal.

    OrphanStep: a non-final node with no path to the final node (its result is
    never used). DuplicateEdge: a repeated edge pair. IndexGap: node indices
    are not contiguous from 1.
    """
    issues: list[Issue] = []
    indices = [i for i, _ in g.nodes]
    if indices != list(range(1, len(indices) + 1)):
        issues.append(Issue(kind="IndexGap", detail=f"node indices {indices} are not 1..{len(indices)}"))
    seen: set[tuple[int, int]] = set()
    for edge in g.edges:
        if edge in seen:
            issues.append(Issue(kind="DuplicateEdge", detail=f"edge {edge[0]} -> {edge[1]} repeated"))
        seen.add(edge)
    if indices:
        last = max(indices)
        forward: dict[int, list[int]] = {i: [] for i in indices}
        for src, dst in g.edges:
            if src in forward:
                forward[src].append(dst)
        reaches_last: set[int] = set()

        def _walk(node: int) -> bool:
            if node == last:
                return True
            if node in reaches_last:
                return True
            return any(_walk(nxt) for nxt in forward.get(node, ()))

        for node in indices:
            if _walk(node):
                reaches_last.add(node)
        for node in indices:
            if node not in reaches_last:
                issues.append(
                    Issue(kind="OrphanStep", detail=f"step {node} never feeds step {last}", node=node)
                )
    return issues


def topo_order(g: DecompositionGraph) -> list[int]:
    """Evaluation order; with backwards-only references this is index order."""
    order = sorted(i for i, _ in g.nodes)
    position = {node: rank for rank, node in enumerate(order)}
    for src, dst in g.edges:
        if position[src] >= position[dst]:
            raise ValueError(f"edge {src} -> {dst} violates acyclicity")
    return order


def to_adjacency_text(g: DecompositionGraph) -> str:
    """Plain-text export: node labels, then one "src -> dst" line per edge."""
    lines = [f"{i}: {' '.join(tokens)}" for i, tokens in g.nodes]
    lines += [f"{src} -> {dst}" for src, dst in g.edges]
    return "\n".join(lines)


def to_dot(g: DecompositionGraph) -> str:
    """Graphviz DOT export for visualization tools."""
    lines = ["digraph decomposition {", "  rankdir=LR;"]
    for i, tokens in g.nodes:
        label = " ".join(tokens).replace('"', '\\"')
        lines.append(f'  n{i} [label="{i}: {label}"];')
    for src, dst in g.edges:
        lines.append(f"  n{src} -> n{dst};")
    lines.append("}")
    return "\n".join(lines)


def to_json(g: DecompositionGraph) -> str:
    """The {nodes, edges} document consumed by the annotation UI."""
    return json.dumps(graph_document(g))


def graph_document(g: DecompositionGraph) -> dict:
    return {
        "nodes": [{"id": i, "label": " ".join(tokens)} for i, tokens in g.nodes],
        "edges": [{"from": src, "to": dst} for src, dst in g.edges],
    }
