"""Random toy KBs and well-typed decompositions for the oracle-equivalence
suite. Kept template-driven so every generated step parses, classifies, and
executes on both interpreters."""

from __future__ import annotations

import random
from fractions import Fraction

from brute_force import PlainKb
from qdmr.executor import Entity, KnowledgeBase, Number

AUTHOR_IDS = ("alpha", "beta", "gamma", "delta")
PAPER_IDS = ("doc1", "doc2", "doc3", "doc4", "doc5")
PLACE_IDS = ("north", "south")


def random_kb(rng: random.Random) -> tuple[KnowledgeBase, PlainKb]:
    """A toy KB (<= 8 entities, 3 relations) plus its plain-tuple mirror."""
    authors = list(AUTHOR_IDS[: rng.randint(2, 3)])
    papers = list(PAPER_IDS[: rng.randint(2, 4)])
    places = list(PLACE_IDS)

    triples = []
    for i, author in enumerate(authors):
        # The first author always owns a paper so the "papers" relation exists.
        low = 1 if i == 0 else 0
        for paper in rng.sample(papers, rng.randint(low, len(papers))):
            triples.append((author, "papers", Entity(paper)))
    for i, paper in enumerate(papers):
        triples.append((paper, "score", Number(Fraction(rng.randint(0, 5)))))
        if i == 0 or rng.random() < 0.8:
            triples.append((rng.choice(places), "in", Entity(paper)))

    aliases = {a: {"author"} for a in authors}
    aliases.update({p: {"paper"} for p in papers})
    kb = KnowledgeBase.build(triples, aliases)

    plain_triples = []
    for s, r, o in triples:
        if isinstance(o, Entity):
            plain_triples.append((s, r, ("ent", o.id)))
        else:
            plain_triples.append((s, r, ("num", o.value)))
    names = {e: set(a) for e, a in aliases.items()}
    for e in authors + papers + places:
        names.setdefault(e, set()).add(e)
    for e in list(names):
        names[e].add(e)
    return kb, PlainKb(plain_triples, names)


class _Step:
    def __init__(self, text, kind, cls=None, parent=None, singleton=False):
        self.text = text  # step text without the "return" prefix
        self.kind = kind  # ents | nums | num1 | bool
        self.cls = cls  # author | paper
        self.parent = parent  # step index this was derived from
        self.singleton = singleton


def random_qdmr_text(rng: random.Random, max_steps: int = 5) -> str:
    """A well-typed decomposition over the generator's KB schema."""
    steps: list[_Step] = []

    def add(step):
        steps.append(step)
        return len(steps)

    first = rng.choice(
        [
            _Step("authors", "ents", cls="author"),
            _Step("papers", "ents", cls="paper"),
            _Step(rng.choice(AUTHOR_IDS[:2]), "ents", cls="author", singleton=True),
        ]
    )
    add(first)

    target = rng.randint(2, max_steps)
    guard = 0
    while len(steps) < target and guard < 40:
        guard += 1
        i = len(steps) + 1
        ents = [k + 1 for k, s in enumerate(steps) if s.kind == "ents"]
        authors = [k + 1 for k, s in enumerate(steps) if s.kind == "ents" and s.cls == "author"]
        papers = [k + 1 for k, s in enumerate(steps) if s.kind == "ents" and s.cls == "paper"]
        num1s = [k + 1 for k, s in enumerate(steps) if s.kind == "num1"]
        keyed_nums = [
            (k + 1, steps[k].parent)
            for k, s in enumerate(steps)
            if s.kind == "nums" and s.parent is not None
        ]

        moves = []
        if authors:
            moves.append("project_papers")
        if papers:
            moves += ["project_score", "filter_place"]
        if ents:
            moves.append("aggregate_count")
        if any(steps[k - 1].parent for k in papers):
            moves.append("group_count")
        if keyed_nums:
            moves += ["superlative", "comparative", "sort"]
        same_class_pairs = [
            (a, b) for a in ents for b in ents if a < b and steps[a - 1].cls == steps[b - 1].cls
        ]
        if same_class_pairs:
            moves += ["union", "discard"]
        if len(authors) >= 2:
            moves.append("intersection")
        if len(num1s) >= 2:
            moves += ["boolean", "arithmetic"]
        if not moves:
            break

        move = rng.choice(moves)
        if move == "project_papers":
            src = rng.choice(authors)
            add(_Step(f"papers of #{src}", "ents", cls="paper", parent=src))
        elif move == "project_score":
            src = rng.choice(papers)
            add(_Step(f"score of #{src}", "nums", parent=src))
        elif move == "filter_place":
            src = rng.choice(papers)
            place = rng.choice(PLACE_IDS)
            add(_Step(f"#{src} in {place}", "ents", cls="paper", parent=steps[src - 1].parent))
        elif move == "aggregate_count":
            src = rng.choice(ents)
            add(_Step(f"the number of #{src}", "num1", singleton=True))
        elif move == "group_count":
            child = rng.choice([k for k in papers if steps[k - 1].parent])
            keys = steps[child - 1].parent
            if rng.random() < 0.5:
                add(_Step(f"the number of #{child} for each #{keys}", "nums", parent=keys))
            else:
                # Inverse provenance: group the base set per its projection.
                add(_Step(f"the number of #{keys} for each #{child}", "nums", parent=child))
        elif move in ("superlative", "comparative", "sort"):
            nums, keys = rng.choice(keyed_nums)
            if move == "superlative":
                word = rng.choice(["highest", "lowest"])
                add(_Step(f"#{keys} where #{nums} is {word}", "ents", cls=steps[keys - 1].cls))
            elif move == "comparative":
                word = rng.choice(["more than", "less than", "at least", "at most"])
                add(
                    _Step(
                        f"#{keys} where #{nums} is {word} {rng.randint(0, 4)}",
                        "ents",
                        cls=steps[keys - 1].cls,
                    )
                )
            else:
                add(_Step(f"#{keys} sorted by #{nums}", "ents", cls=steps[keys - 1].cls))
        elif move == "union":
            a, b = rng.choice(same_class_pairs)
            add(_Step(f"#{a} , #{b}", "ents", cls=steps[a - 1].cls))
        elif move == "discard":
            a, b = rng.choice(same_class_pairs)
            add(_Step(f"#{a} besides #{b}", "ents", cls=steps[a - 1].cls))
        elif move == "intersection":
            a, b = rng.sample(authors, 2)
            add(_Step(f"papers in both #{a} and #{b}", "ents", cls="paper"))
        elif move == "boolean":
            a, b = rng.sample(num1s, 2)
            add(_Step(f"if #{a} is the same as #{b}", "bool"))
        elif move == "arithmetic":
            a, b = rng.sample(num1s, 2)
            word = rng.choice(["difference", "sum"])
            add(_Step(f"the {word} of #{a} and #{b}", "num1", singleton=True))

    return " ;".join(f"return {s.text}" for s in steps)
