"""Score predicted decompositions against gold: exact match, SARI, normalized
graph edit distance, and GED+ with node merge/split operations.

Graph edit costs are exact rationals end to end (insert/delete cost 1, node
substitution costs 1 - align), so search results can be compared to a
brute-force enumerator without tolerance. GED is normalized by the larger
node count and clamped into [0, 1]; GED+ is left unnormalized and extends the
edit operations with node merges and splits plus an order penalty of 1 per
crossing substitution pair.
"""

from __future__ import annotations

import heapq
import itertools
import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from qdmr.core import Qdmr, tokenize, serialize_qdmr
from qdmr.graph import DecompositionGraph

_REF_TOKEN_RE = re.compile(r"^#\d+$")
_PLACEHOLDER = "#REF"

GED_NODE_LIMIT = 8
GED_PLUS_NODE_LIMIT = 5


class MetricsError(Exception):
    pass


class TooLargeError(MetricsError):
    def __init__(self, size: int, limit: int):
        super().__init__(f"graph with {size} nodes exceeds the exact-search limit of {limit}")
        self.size = size
        self.limit = limit


class GedPlusSkipped(MetricsError):
    def __init__(self, size: int):
        super().__init__(f"GED+ computed only for graphs with up to {GED_PLUS_NODE_LIMIT} nodes, got {size}")
        self.size = size


def exact_match(gold: Qdmr, pred: Qdmr) -> int:
    """1 iff the canonical token sequences (with separators) are identical."""
    return int(serialize_qdmr(gold) == serialize_qdmr(pred))


# ---------------------------------------------------------------------------
# SARI


def _ngram_set(tokens: list[str], n: int) -> frozenset[tuple[str, ...]]:
    return frozenset(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _f1(pred_set: frozenset, gold_set: frozenset) -> Fraction:
    if not pred_set and not gold_set:
        return Fraction(1)  # vacuous agreement
    inter = len(pred_set & gold_set)
    precision = Fraction(inter, len(pred_set)) if pred_set else Fraction(0)
    recall = Fraction(inter, len(gold_set)) if gold_set else Fraction(0)
    if precision + recall == 0:
        return Fraction(0)
    return 2 * precision * recall / (precision + recall)


def _precision(pred_set: frozenset, gold_set: frozenset) -> Fraction:
    if not pred_set and not gold_set:
        return Fraction(1)
    if not pred_set:
        return Fraction(0)
    return Fraction(len(pred_set & gold_set), len(pred_set))


def sari_tokens(source: list[str], gold: list[str], pred: list[str], max_n: int = 4) -> float:
    """SARI over raw token streams: the mean of add-F1, keep-F1, and delete
    precision, each averaged over n-gram orders 1..4."""
    add_scores, keep_scores, del_scores = [], [], []
    for n in range(1, max_n + 1):
        s, g, p = _ngram_set(source, n), _ngram_set(gold, n), _ngram_set(pred, n)
        add_scores.append(_f1(p - s, g - s))
        keep_scores.append(_f1(p & s, g & s))
        del_scores.append(_precision(s - p, s - g))
    total = (
        sum(add_scores) / max_n + sum(keep_scores) / max_n + sum(del_scores) / max_n
    ) / 3
    return float(total)


def _decomposition_tokens(d: Qdmr) -> list[str]:
    return tokenize(serialize_qdmr(d))


def sari(source_text: str, gold: Qdmr, pred: Qdmr) -> float:
    """SARI between the question and the two decomposition token sequences."""
    return sari_tokens(tokenize(source_text.lower()), _decomposition_tokens(gold), _decomposition_tokens(pred))


# ---------------------------------------------------------------------------
# Alignment and metric graphs


def _normalize_tokens(tokens) -> tuple[str, ...]:
    return tuple(_PLACEHOLDER if _REF_TOKEN_RE.match(t) else t.lower() for t in tokens)


def align_fraction(u, v) -> Fraction:
    u_norm, v_norm = _normalize_tokens(u), _normalize_tokens(v)
    if not u_norm and not v_norm:
        return Fraction(1)
    overlap = sum((Counter(u_norm) & Counter(v_norm)).values())
    return Fraction(2 * overlap, len(u_norm) + len(v_norm))


def align_ratio(u, v) -> float:
    """Ratio of aligned tokens between two steps: twice the multiset overlap
    over the combined length, references collapsed to a placeholder."""
    return float(align_fraction(u, v))


@dataclass(frozen=True)
class MetricGraph:
    """A decomposition graph prepared for edit-distance scoring: normalized
    node token sequences in step order and 0-based directed edges."""

    nodes: tuple[tuple[str, ...], ...]
    edges: frozenset[tuple[int, int]]

    @classmethod
    def from_qdmr(cls, d: Qdmr) -> "MetricGraph":
        nodes = tuple(_normalize_tokens(step.tokens) for step in d.steps)
        edges = frozenset((ref - 1, step.index - 1) for step in d.steps for ref in step.refs)
        return cls(nodes=nodes, edges=edges)

    @classmethod
    def from_graph(cls, g: DecompositionGraph) -> "MetricGraph":
        index_of = {i: pos for pos, (i, _) in enumerate(g.nodes)}
        nodes = tuple(_normalize_tokens(tokens) for _, tokens in g.nodes)
        edges = frozenset((index_of[a], index_of[b]) for a, b in g.edges)
        return cls(nodes=nodes, edges=edges)

    @property
    def node_count(self) -> int:
        return len(self.nodes)


def _as_metric_graph(g) -> MetricGraph:
    if isinstance(g, MetricGraph):
        return g
    if isinstance(g, Qdmr):
        return MetricGraph.from_qdmr(g)
    if isinstance(g, DecompositionGraph):
        return MetricGraph.from_graph(g)
    raise TypeError(f"cannot score {type(g).__name__} as a graph")


# ---------------------------------------------------------------------------
# GED: exact best-first search over node assignments


def ged_cost(gold_g, pred_g, node_limit: int = GED_NODE_LIMIT) -> Fraction:
    """Exact minimal edit-path cost (unnormalized)."""
    g1, g2 = _as_metric_graph(gold_g), _as_metric_graph(pred_g)
    size = max(g1.node_count, g2.node_count)
    if size > node_limit:
        raise TooLargeError(size, node_limit)
    return _ged_search(g1, g2)


def ged(gold_g, pred_g, node_limit: int = GED_NODE_LIMIT) -> float:
    """Normalized GED: minimal cost over max node count, clamped into [0, 1]."""
    g1, g2 = _as_metric_graph(gold_g), _as_metric_graph(pred_g)
    cost = ged_cost(g1, g2, node_limit)
    normalized = cost / max(g1.node_count, g2.node_count)
    return float(min(Fraction(1), normalized))


def _ged_search(g1: MetricGraph, g2: MetricGraph) -> Fraction:
    """Best-first (A*) search over node edit paths.

    States assign source nodes 0..i-1 to target nodes or deletion; edge costs
    accrue as soon as both endpoints are decided. The admissible bound counts
    the forced node insert/delete imbalance; complete paths re-enter the queue
    with their exact closed cost (terminal states), so the first terminal
    popped is optimal. No dominance pruning: the assignment history determines
    future edge costs, so each state is unique.
    """
    n1, n2 = g1.node_count, g2.node_count
    sub_cost = [
        [Fraction(1) - align_fraction(g1.nodes[i], g2.nodes[j]) for j in range(n2)]
        for i in range(n1)
    ]
    edges1, edges2 = g1.edges, g2.edges

    def heuristic(i: int, used_count: int) -> Fraction:
        return Fraction(abs((n1 - i) - (n2 - used_count)))

    counter = itertools.count()
    heap: list = [(heuristic(0, 0), next(counter), False, Fraction(0), 0, 0, ())]
    while heap:
        _, _, terminal, cost, i, used_mask, assigned = heapq.heappop(heap)
        if terminal:
            return cost
        if i == n1:
            total = cost + sum(1 for j in range(n2) if not (used_mask >> j) & 1)
            for a, b in edges2:
                if not ((used_mask >> a) & 1) or not ((used_mask >> b) & 1):
                    total += 1
            heapq.heappush(heap, (total, next(counter), True, total, i, used_mask, assigned))
            continue
        for choice in [-1] + [j for j in range(n2) if not (used_mask >> j) & 1]:
            step_cost = Fraction(1) if choice < 0 else sub_cost[i][choice]
            extra = _edge_increment(i, choice, assigned, edges1, edges2)
            new_cost = cost + step_cost + extra
            new_mask = used_mask if choice < 0 else used_mask | (1 << choice)
            bound = new_cost + heuristic(i + 1, new_mask.bit_count())
            heapq.heappush(
                heap,
                (bound, next(counter), False, new_cost, i + 1, new_mask, assigned + (choice,)),
            )
    raise AssertionError("GED search exhausted without a goal")


def _edge_increment(i, choice, assigned, edges1, edges2) -> Fraction:
    """Edge costs decidable once node i is assigned (against nodes < i)."""
    extra = Fraction(0)
    for j, a_j in enumerate(assigned):
        for src, dst in ((j, i), (i, j)):
            if (src, dst) in edges1:
                mapped = (
                    (a_j, choice) if (src, dst) == (j, i) else (choice, a_j)
                )
                if choice < 0 or a_j < 0 or mapped not in edges2:
                    extra += 1  # deleted edge
        if choice >= 0 and a_j >= 0:
            for src, dst in (((a_j, choice), (j, i)), ((choice, a_j), (i, j))):
                if src in edges2 and dst not in edges1:
                    extra += 1  # inserted edge between two mapped nodes
    return extra


# ---------------------------------------------------------------------------
# GED+: exact search over plans with merges and splits


def merge_cost(parts: list[tuple[str, ...]], target: tuple[str, ...]) -> Fraction:
    """Cost of merging the listed nodes into the target node: each merged node
    pays 1 - best alignment of the target against a concatenation order."""
    best = Fraction(0)
    for perm in itertools.permutations(parts):
        concat = tuple(t for part in perm for t in part)
        best = max(best, align_fraction(target, concat))
    return len(parts) * (Fraction(1) - best)


def ged_plus_cost(gold_g, pred_g) -> Fraction:
    g1, g2 = _as_metric_graph(gold_g), _as_metric_graph(pred_g)
    size = max(g1.node_count, g2.node_count)
    if size > GED_PLUS_NODE_LIMIT:
        raise GedPlusSkipped(size)
    return _ged_plus_search(g1, g2)


def ged_plus(gold_g, pred_g) -> float:
    """Unnormalized minimal cost with merge/split operations and the crossing
    penalty; defined for graphs with at most five nodes."""
    return float(ged_plus_cost(gold_g, pred_g))


def _ged_plus_search(g1: MetricGraph, g2: MetricGraph) -> Fraction:
    """Exact branch-and-bound over node plans extended with merge/split.

    Source nodes are processed in order; each picks delete, substitute, merge
    (with later source nodes) into one target, or split into several targets.
    Edge and crossing costs are nonnegative and computed on complete plans, so
    the accumulated node cost alone is a sound pruning bound.
    """
    n1, n2 = g1.node_count, g2.node_count
    best: list[Fraction | None] = [None]

    def finish(plan_cost: Fraction, mapping: dict, inverse: dict, subs: list):
        total = plan_cost + _plan_edge_cost(g1, g2, mapping, inverse) + _crossing_cost(subs)
        if best[0] is None or total < best[0]:
            best[0] = total

    def recurse(i: int, free_v: frozenset, cost: Fraction, mapping: dict, inverse: dict, subs: list, consumed: frozenset):
        if best[0] is not None and cost >= best[0]:
            return
        if i == n1:
            finish(cost + len(free_v), mapping, inverse, subs)
            return
        if i in consumed:
            recurse(i + 1, free_v, cost, mapping, inverse, subs, consumed)
            return
        # Delete.
        recurse(i + 1, free_v, cost + 1, {**mapping, i: ()}, inverse, subs, consumed)
        for v in sorted(free_v):
            # Substitute.
            sub = Fraction(1) - align_fraction(g1.nodes[i], g2.nodes[v])
            recurse(
                i + 1,
                free_v - {v},
                cost + sub,
                {**mapping, i: (v,)},
                inverse,
                subs + [(i, v)],
                consumed,
            )
            # Merge i with later unconsumed source nodes into v.
            later = [u for u in range(i + 1, n1) if u not in consumed]
            for size in range(1, len(later) + 1):
                for extra in itertools.combinations(later, size):
                    group = (i,) + extra
                    mcost = merge_cost([g1.nodes[u] for u in group], g2.nodes[v])
                    new_mapping = dict(mapping)
                    for u in group:
                        new_mapping[u] = (v,)
                    recurse(
                        i + 1,
                        free_v - {v},
                        cost + mcost,
                        new_mapping,
                        inverse,
                        subs,
                        consumed | set(extra),
                    )
        # Split i into a set of target nodes.
        for size in range(2, len(free_v) + 1):
            for group in itertools.combinations(sorted(free_v), size):
                scost = merge_cost([g2.nodes[v] for v in group], g1.nodes[i])
                new_inverse = dict(inverse)
                for v in group:
                    new_inverse[v] = i
                recurse(
                    i + 1,
                    free_v - set(group),
                    cost + scost,
                    {**mapping, i: tuple(group)},
                    new_inverse,
                    subs,
                    consumed,
                )

    recurse(0, frozenset(range(n2)), Fraction(0), {}, {}, [], frozenset())
    assert best[0] is not None
    return best[0]


def _plan_edge_cost(g1: MetricGraph, g2: MetricGraph, mapping: dict, inverse: dict) -> Fraction:
    """Edge cost induced by a node plan: edges collapsed inside a merge (or
    arising inside a split) are absorbed; the rest pair off via maximum
    matching on compatible pairs, unmatched ones are deleted/inserted."""
    live1 = []
    for a, b in sorted(g1.edges):
        img_a, img_b = mapping.get(a, ()), mapping.get(b, ())
        if len(img_a) == 1 and img_a == img_b:
            continue  # collapsed by a merge
        live1.append((a, b))
    live2 = []
    for a, b in sorted(g2.edges):
        if a in inverse and b in inverse and inverse[a] == inverse[b]:
            continue  # created by a split
        live2.append((a, b))
    compat = {
        i: [
            j
            for j, (a2, b2) in enumerate(live2)
            if a2 in mapping.get(live1[i][0], ()) and b2 in mapping.get(live1[i][1], ())
        ]
        for i in range(len(live1))
    }
    matched = _max_matching(len(live1), len(live2), compat)
    return Fraction(len(live1) - matched + len(live2) - matched)


def _max_matching(n_left: int, n_right: int, compat: dict) -> int:
    match_right: dict[int, int] = {}

    def try_assign(i: int, seen: set) -> bool:
        for j in compat.get(i, ()):
            if j in seen:
                continue
            seen.add(j)
            if j not in match_right or try_assign(match_right[j], seen):
                match_right[j] = i
                return True
        return False

    count = 0
    for i in range(n_left):
        if try_assign(i, set()):
            count += 1
    return count


def _crossing_cost(subs: list[tuple[int, int]]) -> Fraction:
    """Order penalty: 1 per crossing pair of substitution correspondences."""
    cost = 0
    for (u1, v1), (u2, v2) in itertools.combinations(sorted(subs), 2):
        if (u1 - u2) * (v1 - v2) < 0:
            cost += 1
    return Fraction(cost)


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class MetricReport:
    exact_match: int
    sari: float
    ged: float
    ged_plus: float | None
    ged_plus_skipped: str | None = None


def score_pair(question_text: str, gold: Qdmr, pred: Qdmr, node_limit: int = GED_NODE_LIMIT) -> MetricReport:
    g_gold, g_pred = MetricGraph.from_qdmr(gold), MetricGraph.from_qdmr(pred)
    em = exact_match(gold, pred)
    sari_score = sari(question_text, gold, pred)
    ged_score = ged(g_gold, g_pred, node_limit)
    try:
        plus: float | None = ged_plus(g_gold, g_pred)
        reason = None
    except GedPlusSkipped as skip:
        plus = None
        reason = str(skip)
    return MetricReport(exact_match=em, sari=sari_score, ged=ged_score, ged_plus=plus, ged_plus_skipped=reason)


def summarize(reports: list[MetricReport]) -> dict[str, float | None]:
    """Mean scores across a batch; GED+ averaged over the computed subset."""
    if not reports:
        raise MetricsError("nothing to summarize")
    plus_values = [r.ged_plus for r in reports if r.ged_plus is not None]
    return {
        "exact_match": sum(r.exact_match for r in reports) / len(reports),
        "sari": sum(r.sari for r in reports) / len(reports),
        "ged": sum(r.ged for r in reports) / len(reports),
        "ged_plus": (sum(plus_values) / len(plus_values)) if plus_values else None,
    }
