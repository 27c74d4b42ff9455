from __future__ import annotations

import json

from qdmr.core import parse_qdmr
from qdmr.graph import (
    DecompositionGraph,
    graph_document,
    to_adjacency_text,
    to_dot,
    to_graph,
    to_json,
    topo_order,
    validate,
)

COMPARATIVE = (
    "return authors ;return papers of #1 ;return the number of #2 for each of #1 "
    ";return #1 where #3 is more than 500"
)

# Same template applied to the keyword/paper question rendered as a graph in
# the formalism's running example.
KEYWORDS_100 = (
    "return keywords ;return acl papers of #1 ;return the number of #2 for each of #1 "
    ";return #1 where #3 is more than 100"
)


def test_comparative_row_graph():
    g = to_graph(parse_qdmr(COMPARATIVE))
    assert g.node_count == 4
    assert g.edge_set() == {(1, 2), (1, 3), (2, 3), (1, 4), (3, 4)}


def test_keywords_question_isomorphic_shape():
    g1 = to_graph(parse_qdmr(COMPARATIVE))
    g2 = to_graph(parse_qdmr(KEYWORDS_100))
    assert g1.edge_set() == g2.edge_set()
    assert g1.node_count == g2.node_count


def test_single_step_graph():
    g = to_graph(parse_qdmr("return touchdowns"))
    assert g.node_count == 1
    assert g.edges == ()


def test_duplicate_refs_collapse_to_single_edge():
    g = to_graph(parse_qdmr("return a ;return #1 besides #1"))
    assert g.edges == ((1, 2),)
    assert g.node_tokens(2).count("#1") == 2


def test_validate_clean_graph():
    assert validate(to_graph(parse_qdmr(COMPARATIVE))) == []


def test_validate_orphan():
    g = to_graph(parse_qdmr("return a ;return b ;return the number of #1"))
    issues = validate(g)
    assert [i.kind for i in issues] == ["OrphanStep"]
    assert issues[0].node == 2


def test_validate_index_gap():
    g = DecompositionGraph(nodes=((1, ("a",)), (3, ("b",))), edges=((1, 3),))
    assert any(i.kind == "IndexGap" for i in validate(g))


def test_validate_duplicate_edge():
    g = DecompositionGraph(nodes=((1, ("a",)), (2, ("#1", "b"))), edges=((1, 2), (1, 2)))
    assert any(i.kind == "DuplicateEdge" for i in validate(g))


def test_topo_order_is_index_order():
    for text in (COMPARATIVE, "return touchdowns", "return a ;return #1 b"):
        g = to_graph(parse_qdmr(text))
        assert topo_order(g) == [i for i, _ in g.nodes]


def test_adjacency_export():
    g = to_graph(parse_qdmr("return a ;return #1 b"))
    text = to_adjacency_text(g)
    assert "1: a" in text
    assert "1 -> 2" in text


def test_dot_export():
    dot = to_dot(to_graph(parse_qdmr("return a ;return #1 b")))
    assert dot.startswith("digraph")
    assert "n1 -> n2;" in dot


def test_json_export():
    doc = json.loads(to_json(to_graph(parse_qdmr("return a ;return #1 b"))))
    assert doc == graph_document(to_graph(parse_qdmr("return a ;return #1 b")))
    assert doc["nodes"][0] == {"id": 1, "label": "a"}
    assert doc["edges"] == [{"from": 1, "to": 2}]
