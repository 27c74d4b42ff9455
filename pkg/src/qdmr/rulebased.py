"""Rule-based question decomposition over pre-parsed dependency trees.

Twelve rules are tried in a fixed priority order, leftmost anchor first, and
re-applied to the produced fragments until nothing matches. A fragment
("region") is a span of original tree tokens plus reference and literal
items, so recursion never needs to re-parse text: structural predicates keep
consulting the original tree, restricted to tokens still inside the region.

The toolkit performs no syntactic parsing itself. Input is a tab-separated
token table (id, form, lemma, pos, head, deprel; sentences separated by blank
lines; PTB-style tags, classic prep/pobj attachment) plus an optional
coreference span file ("sent:start-end<TAB>sent:start-end", anaphor first).

Rule predicates are deliberately narrow where the grammar is ambiguous:
  * acl-verb fires only on present participles with a prepositional
    complement ("students studying in 108", not "state bordering ohio").
  * relcl needs a finite "that"-clause and a matrix head inside the region,
    so extracted noun-phrase fragments stay whole.
  * single-prep anchors only below a region-internal head and only on an
    "of"-style prepositional object that is not already a reference.
Splits copy surface forms verbatim; imperative lead verbs (find/show/...)
and sentence punctuation are dropped at split time.
"""

from __future__ import annotations

from dataclasses import dataclass

from qdmr.core import Qdmr, QdmrMode, parse_qdmr

IMPERATIVE_LEMMAS = {"find", "show", "return", "tell", "give", "list", "name"}
_NOUN_TAGS = ("NN", "NNS", "NNP", "NNPS")
_FINITE_TAGS = ("VBZ", "VBD", "VBP")
RECURSION_LIMIT = 64


class RulebasedError(Exception):
    pass


class RecursionLimitError(RulebasedError):
    pass


@dataclass(frozen=True)
class DepToken:
    sent: int
    id: int
    form: str
    lemma: str
    pos: str
    head: int
    deprel: str
    gi: int  # global position across sentences


@dataclass(frozen=True)
class CorefLink:
    anaphor: tuple[int, int, int]  # sent, start id, end id (inclusive)
    antecedent: tuple[int, int, int]


class DepTree:
    """A parsed question: one or more dependency trees plus coref links."""

    def __init__(self, tokens: list[DepToken], coref_links: tuple[CorefLink, ...] = ()):
        self.tokens = tuple(tokens)
        self.coref_links = coref_links
        self._by_sentence: dict[int, list[DepToken]] = {}
        for token in self.tokens:
            self._by_sentence.setdefault(token.sent, []).append(token)
        self._children: dict[int, list[int]] = {t.gi: [] for t in self.tokens}
        self._global: dict[tuple[int, int], int] = {}
        for token in self.tokens:
            self._global[(token.sent, token.id)] = token.gi
        for token in self.tokens:
            if token.head > 0:
                head_gi = self._global.get((token.sent, token.head))
                if head_gi is None:
                    raise RulebasedError(
                        f"token {token.sent}:{token.id} has out-of-bounds head {token.head}"
                    )
                self._children[head_gi].append(token.gi)
        for roots_needed in self._by_sentence.values():
            if sum(1 for t in roots_needed if t.head == 0) != 1:
                raise RulebasedError("each sentence needs exactly one root")

    @property
    def sentences(self) -> list[int]:
        return sorted(self._by_sentence)

    def token(self, gi: int) -> DepToken:
        return self.tokens[gi]

    def children(self, gi: int, deprel: str | None = None) -> list[int]:
        out = self._children[gi]
        if deprel is None:
            return list(out)
        return [c for c in out if self.tokens[c].deprel == deprel]

    def head_gi(self, gi: int) -> int | None:
        token = self.tokens[gi]
        if token.head == 0:
            return None
        return self._global[(token.sent, token.head)]

    def subtree(self, gi: int) -> list[int]:
        out = [gi]
        stack = [gi]
        while stack:
            for child in self._children[stack.pop()]:
                out.append(child)
                stack.append(child)
        return sorted(out)

    def global_of(self, sent: int, local_id: int) -> int:
        return self._global[(sent, local_id)]

    def inside_clause(self, gi: int) -> bool:
        """True when the token sits under an acl/relcl attachment."""
        current = self.head_gi(gi)
        while current is not None:
            if self.tokens[current].deprel in ("acl", "relcl"):
                return True
            current = self.head_gi(current)
        return False


def read_dep_text(text: str) -> list[DepToken]:
    tokens: list[DepToken] = []
    sent = 1
    saw_row = False
    gi = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            if saw_row:
                sent += 1
                saw_row = False
            continue
        if line.lstrip().startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 6:
            raise RulebasedError(f"dependency line {lineno}: expected 6 tab-separated fields")
        tokens.append(
            DepToken(
                sent=sent,
                id=int(parts[0]),
                form=parts[1],
                lemma=parts[2],
                pos=parts[3],
                head=int(parts[4]),
                deprel=parts[5],
                gi=gi,
            )
        )
        saw_row = True
        gi += 1
    return tokens


def read_coref_text(text: str) -> tuple[CorefLink, ...]:
    links = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise RulebasedError(f"coref line {lineno}: expected 2 tab-separated spans")
        links.append(CorefLink(anaphor=_parse_span(parts[0]), antecedent=_parse_span(parts[1])))
    return tuple(links)


def _parse_span(text: str) -> tuple[int, int, int]:
    sent_part, range_part = text.strip().split(":")
    start, end = range_part.split("-")
    return int(sent_part), int(start), int(end)


def load_dep_tree(dep_path: str, coref_path: str | None = None) -> DepTree:
    with open(dep_path, encoding="utf-8") as f:
        tokens = read_dep_text(f.read())
    links: tuple[CorefLink, ...] = ()
    if coref_path is not None:
        with open(coref_path, encoding="utf-8") as f:
            links = read_coref_text(f.read())
    return DepTree(tokens, links)


# ---------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class Ref:
    target: int  # 0-based region position


@dataclass(frozen=True)
class Lit:
    text: str


@dataclass(frozen=True)
class NewRef:
    index: int  # position within the regions a rule is emitting


Item = int | Ref | Lit | NewRef


def _region_tokens(region: list[Item]) -> list[int]:
    return [item for item in region if isinstance(item, int)]


def _region_sentences(tree: DepTree, region: list[Item]) -> set[int]:
    return {tree.token(gi).sent for gi in _region_tokens(region)}


def _in_region(region: list[Item], gis) -> bool:
    present = set(_region_tokens(region))
    return all(gi in present for gi in gis)


def _without(region: list[Item], drop: set[int]) -> list[Item]:
    return [item for item in region if not (isinstance(item, int) and item in drop)]


def _replace_span(region: list[Item], drop: set[int], replacement: Item) -> list[Item]:
    """Remove the listed tokens, inserting the replacement at the first one."""
    out: list[Item] = []
    placed = False
    for item in region:
        if isinstance(item, int) and item in drop:
            if not placed:
                out.append(replacement)
                placed = True
            continue
        out.append(item)
    return out


def _drop_imperative_root(tree: DepTree, region: list[Item]) -> list[Item]:
    drop = set()
    for gi in _region_tokens(region):
        token = tree.token(gi)
        head = tree.head_gi(gi)
        is_region_root = head is None or not _in_region(region, [head])
        if is_region_root and token.pos.startswith("VB") and token.lemma in IMPERATIVE_LEMMAS:
            drop.add(gi)
    return _without(region, drop)


def _ordered(items: list[Item]) -> list[Item]:
    tokens = sorted(i for i in items if isinstance(i, int))
    rest = [i for i in items if not isinstance(i, int)]
    return list(tokens) + rest  # only used for pure token lists


@dataclass(frozen=True)
class RuleMatch:
    site: str
    regions: tuple[tuple[Item, ...], ...]


@dataclass(frozen=True)
class Rule:
    name: str
    matcher: object  # callable(tree, region) -> RuleMatch | None

    def match(self, tree: DepTree, region: list[Item]) -> RuleMatch | None:
        return self.matcher(tree, region)


def _single_sentence(tree: DepTree, region: list[Item]) -> bool:
    return len(_region_sentences(tree, region)) == 1


def _nouns(tree: DepTree, region: list[Item]) -> list[int]:
    return [gi for gi in _region_tokens(region) if tree.token(gi).pos in _NOUN_TAGS]


def _prep_children(tree: DepTree, region: list[Item], gi: int) -> list[int]:
    return [
        c
        for c in tree.children(gi)
        if tree.token(c).deprel == "prep" and _in_region(region, [c])
    ]


def _pobj_of(tree: DepTree, region: list[Item], prep_gi: int) -> int | None:
    objs = [c for c in tree.children(prep_gi, "pobj") if _in_region(region, [c])]
    return objs[0] if objs else None


def _how_many_tokens(tree: DepTree, region: list[Item], noun_gi: int) -> list[int] | None:
    for child in tree.children(noun_gi):
        token = tree.token(child)
        if token.lemma == "many" and _in_region(region, [child]):
            hows = [
                g
                for g in tree.children(child)
                if tree.token(g).lemma == "how" and _in_region(region, [g])
            ]
            if hows:
                return [hows[0], child]
    return None


# --- the twelve rules, in priority order -----------------------------------


def _match_be_root(tree: DepTree, region: list[Item]) -> RuleMatch | None:
    if not _single_sentence(tree, region):
        return None
    for cop in _region_tokens(region):
        token = tree.token(cop)
        if token.deprel != "cop" or token.lemma != "be":
            continue
        pred = tree.head_gi(cop)
        if pred is None or not _in_region(region, [pred]):
            continue
        subjects = [c for c in tree.children(pred, "nsubj") if _in_region(region, [c])]
        for subj in subjects:
            quant = None
            for noun in tree.subtree(subj):
                quant = _how_many_tokens(tree, region, noun)
                if quant:
                    break
            if not quant:
                continue
            subj_span = [gi for gi in tree.subtree(subj) if _in_region(region, [gi])]
            step1 = [gi for gi in subj_span if gi not in quant]
            rest = [
                gi
                for gi in _region_tokens(region)
                if gi not in subj_span and gi != cop
            ]
            step2: list[Item] = list(quant) + [NewRef(0)] + rest
            return RuleMatch(
                site=tree.token(cop).form,
                regions=(tuple(step1), tuple(step2)),
            )
    return None


def _match_be_auxpass(tree: DepTree, region: list[Item]) -> RuleMatch | None:
    if not _single_sentence(tree, region):
        return None
    for aux in _region_tokens(region):
        token = tree.token(aux)
        if token.deprel != "auxpass" or token.lemma != "be":
            continue
        verb = tree.head_gi(aux)
        if verb is None or not _in_region(region, [verb]):
            continue
        for prep in _prep_children(tree, region, verb):
            if tree.token(prep).lemma != "by":
                continue
            agent = _pobj_of(tree, region, prep)
            if agent is None:
                continue
            agent_span = set(tree.subtree(agent))
            step1 = [gi for gi in sorted(agent_span) if _in_region(region, [gi])]
            remainder = _drop_imperative_root(tree, region)
            remainder = _without(remainder, {aux})
            step2 = _replace_span(remainder, agent_span, NewRef(0))
            return RuleMatch(site=token.form, regions=(tuple(step1), tuple(step2)))
    return None


def _match_do_subj(tree: DepTree, region: list[Item]) -> RuleMatch | None:
    if not _single_sentence(tree, region):
        return None
    for aux in _region_tokens(region):
        token = tree.token(aux)
        if token.deprel != "aux" or token.lemma != "do":
            continue
        verb = tree.head_gi(aux)
        if verb is None or not _in_region(region, [verb]):
            continue
        if tree.token(verb).deprel in ("acl", "relcl"):
            continue
        for subj in tree.children(verb, "nsubj"):
            subj_token = tree.token(subj)
            if subj_token.pos not in _NOUN_TAGS or not _in_region(region, [subj]):
                continue
            subj_span = set(tree.subtree(subj))
            dets = {
                c
                for c in tree.children(subj, "det")
                if tree.token(c).lemma in ("the", "a", "an")
            }
            step1 = [gi for gi in sorted(subj_span) if gi not in dets and _in_region(region, [gi])]
            step2 = _replace_span(region, subj_span, NewRef(0))
            return RuleMatch(site=token.form, regions=(tuple(step1), tuple(step2)))
    return None


def _match_subj_do_have(tree: DepTree, region: list[Item]) -> RuleMatch | None:
    if not _single_sentence(tree, region):
        return None
    for verb in _region_tokens(region):
        token = tree.token(verb)
        if token.lemma != "have" or not token.pos.startswith("VB"):
            continue
        subjects = [c for c in tree.children(verb, "nsubj") if _in_region(region, [c])]
        for subj in subjects:
            wh_dets = [c for c in tree.children(subj, "det") if tree.token(c).pos == "WDT"]
            acls = [
                c
                for c in tree.children(subj)
                if tree.token(c).deprel == "acl"
                and tree.token(c).pos in ("VBN", "VBG")
                and _in_region(region, [c])
            ]
            if not wh_dets or not acls:
                continue
            complement: list[int] = []
            for child in tree.children(verb):
                if tree.token(child).deprel in ("dobj", "xcomp", "ccomp") and _in_region(
                    region, [child]
                ):
                    complement.extend(tree.subtree(child))
            if not complement:
                continue
            acl_span = set()
            for acl in acls:
                acl_span |= set(tree.subtree(acl))
            head_bits = [
                gi
                for gi in tree.subtree(subj)
                if gi not in acl_span and gi not in set(wh_dets) and _in_region(region, [gi])
            ]
            step1 = sorted(head_bits + complement)
            step2: list[Item] = [NewRef(0)] + sorted(acl_span)
            return RuleMatch(site=token.form, regions=(tuple(step1), tuple(step2)))
    return None


def _match_conjunction(tree: DepTree, region: list[Item]) -> RuleMatch | None:
    if not _single_sentence(tree, region):
        return None
    for verb in _region_tokens(region):
        token = tree.token(verb)
        if not token.pos.startswith("VB") or token.deprel != "root":
            continue
        subjects = [c for c in tree.children(verb, "nsubj") if _in_region(region, [c])]
        conjs = [
            c
            for c in tree.children(verb, "conj")
            if tree.token(c).pos.startswith("VB") and _in_region(region, [c])
        ]
        ccs = [
            c
            for c in tree.children(verb, "cc")
            if tree.token(c).lemma == "and" and _in_region(region, [c])
        ]
        if not subjects or not conjs or not ccs:
            continue
        subj_span = set()
        for subj in subjects:
            subj_span |= set(tree.subtree(subj))
        conj_span = set(tree.subtree(conjs[0]))
        step1 = sorted(
            [gi for gi in subj_span if _in_region(region, [gi])]
            + [gi for gi in conj_span if _in_region(region, [gi])]
        )
        rest = [
            gi
            for gi in _region_tokens(region)
            if gi not in subj_span and gi not in conj_span and gi != ccs[0]
        ]
        step2: list[Item] = [NewRef(0)] + rest
        return RuleMatch(site=tree.token(ccs[0]).form, regions=(tuple(step1), tuple(step2)))
    return None


def _match_how_many(tree: DepTree, region: list[Item]) -> RuleMatch | None:
    if not _single_sentence(tree, region):
        return None
    for noun in _nouns(tree, region):
        quant = _how_many_tokens(tree, region, noun)
        if not quant:
            continue
        step1 = [gi for gi in _region_tokens(region) if gi not in quant]
        step2: list[Item] = [Lit("the"), Lit("number"), Lit("of"), NewRef(0)]
        site = " ".join(tree.token(gi).form for gi in quant)
        return RuleMatch(site=site, regions=(tuple(step1), tuple(step2)))
    return None


def _match_single_prep(tree: DepTree, region: list[Item]) -> RuleMatch | None:
    if not _single_sentence(tree, region):
        return None
    for noun in _nouns(tree, region):
        head = tree.head_gi(noun)
        if head is None or not _in_region(region, [head]):
            continue  # anchor must sit below a region-internal head
        preps = _prep_children(tree, region, noun)
        if len(preps) != 1:
            continue
        pobj = _pobj_of(tree, region, preps[0])
        if pobj is None:
            continue
        pobj_span = set(tree.subtree(pobj))
        step1 = [gi for gi in sorted(pobj_span) if _in_region(region, [gi])]
        remainder = _drop_imperative_root(tree, region)
        dets = {
            c
            for c in tree.children(noun, "det")
            if tree.token(c).lemma in ("the", "a", "an")
        }
        remainder = _without(remainder, dets)
        step2 = _replace_span(remainder, pobj_span, NewRef(0))
        return RuleMatch(site=tree.token(preps[0]).form, regions=(tuple(step1), tuple(step2)))
    return None


def _match_multi_prep(tree: DepTree, region: list[Item]) -> RuleMatch | None:
    if not _single_sentence(tree, region):
        return None
    for noun in _nouns(tree, region):
        preps = _prep_children(tree, region, noun)
        if len(preps) < 2:
            continue
        if any(_pobj_of(tree, region, p) is None for p in preps):
            continue
        prep_span = set()
        for prep in preps:
            prep_span |= set(tree.subtree(prep))
        wh_dets = {
            c
            for c in tree.children(noun, "det")
            if tree.token(c).pos in ("WDT", "WP")
        }
        base = [
            gi
            for gi in tree.subtree(noun)
            if gi not in prep_span and gi not in wh_dets and _in_region(region, [gi])
        ]
        regions: list[tuple[Item, ...]] = [tuple(sorted(base))]
        for i, prep in enumerate(preps):
            chunk: list[Item] = [NewRef(i)] + sorted(set(tree.subtree(prep)))
            regions.append(tuple(chunk))
        site = " ".join(tree.token(p).form for p in preps)
        return RuleMatch(site=site, regions=tuple(regions))
    return None


def _match_relcl(tree: DepTree, region: list[Item]) -> RuleMatch | None:
    if not _single_sentence(tree, region):
        return None
    for noun in _nouns(tree, region):
        head = tree.head_gi(noun)
        if head is None or not _in_region(region, [head]):
            continue  # needs a matrix context; bare NP fragments stay whole
        for rel in tree.children(noun, "relcl"):
            if not _in_region(region, [rel]):
                continue
            rel_token = tree.token(rel)
            relativizers = [
                c
                for c in tree.children(rel)
                if tree.token(c).lemma == "that" and _in_region(region, [c])
            ]
            if not relativizers:
                continue
            finite = rel_token.pos in _FINITE_TAGS or any(
                tree.token(c).deprel == "aux" and _in_region(region, [c])
                for c in tree.children(rel)
            )
            if not finite:
                continue
            rel_span = set(tree.subtree(rel))
            step1 = [
                gi
                for gi in tree.subtree(noun)
                if gi not in rel_span and _in_region(region, [gi])
            ]
            step2: list[Item] = [NewRef(0)] + sorted(
                gi for gi in rel_span if _in_region(region, [gi])
            )
            return RuleMatch(
                site=tree.token(relativizers[0]).form, regions=(tuple(step1), tuple(step2))
            )
    return None


def _match_superlative(tree: DepTree, region: list[Item]) -> RuleMatch | None:
    if not _single_sentence(tree, region):
        return None
    for noun in _nouns(tree, region):
        if tree.inside_clause(noun):
            continue  # embedded superlatives belong to their clause
        adjs = [
            c
            for c in tree.children(noun, "amod")
            if tree.token(c).pos == "JJS" and _in_region(region, [c])
        ]
        if not adjs:
            continue
        adj = adjs[0]
        dets = [
            c
            for c in tree.children(noun, "det")
            if tree.token(c).lemma in ("the", "a", "an") and _in_region(region, [c])
        ]
        drop = {adj} | set(dets)
        for child in tree.children(noun):
            token = tree.token(child)
            if token.deprel == "nsubj" and token.pos in ("WP", "WDT", "WRB"):
                drop |= set(tree.subtree(child))
            if token.deprel == "cop" and token.lemma == "be":
                drop.add(child)
        step1 = [
            gi for gi in tree.subtree(noun) if gi not in drop and _in_region(region, [gi])
        ]
        step2: list[Item] = [*sorted(dets), adj, NewRef(0)]
        return RuleMatch(site=tree.token(adj).form, regions=(tuple(step1), tuple(step2)))
    return None


def _match_acl_verb(tree: DepTree, region: list[Item]) -> RuleMatch | None:
    if not _single_sentence(tree, region):
        return None
    for noun in _nouns(tree, region):
        for acl in tree.children(noun, "acl"):
            if not _in_region(region, [acl]) or tree.token(acl).pos != "VBG":
                continue
            if not _prep_children(tree, region, acl):
                continue  # needs a prepositional complement
            acl_span = set(tree.subtree(acl))
            step1 = [
                gi
                for gi in tree.subtree(noun)
                if gi not in acl_span and _in_region(region, [gi])
            ]
            step2: list[Item] = [NewRef(0)] + sorted(
                gi for gi in acl_span if _in_region(region, [gi])
            )
            return RuleMatch(site=tree.token(acl).form, regions=(tuple(step1), tuple(step2)))
    return None


def _match_sent_coref(tree: DepTree, region: list[Item]) -> RuleMatch | None:
    sentences = _region_sentences(tree, region)
    if len(sentences) < 2:
        return None
    for link in tree.coref_links:
        ana_sent, ana_start, ana_end = link.anaphor
        ant_sent, ant_start, ant_end = link.antecedent
        if ana_sent not in sentences or ant_sent not in sentences:
            continue
        ana_span = {tree.global_of(ana_sent, i) for i in range(ana_start, ana_end + 1)}
        ant_tokens = [gi for gi in _region_tokens(region) if tree.token(gi).sent == ant_sent]
        ana_tokens = [gi for gi in _region_tokens(region) if tree.token(gi).sent == ana_sent]
        if not _in_region(region, ana_span):
            continue
        step1 = _drop_imperative_root(tree, list(ant_tokens))
        step2_tokens = _drop_imperative_root(tree, list(ana_tokens))
        step2 = _replace_span(step2_tokens, ana_span, NewRef(0))
        site = " ".join(tree.token(gi).form for gi in sorted(ana_span))
        return RuleMatch(site=site, regions=(tuple(step1), tuple(step2)))
    return None


RULES: tuple[Rule, ...] = (
    Rule("be-root", _match_be_root),
    Rule("be-auxpass", _match_be_auxpass),
    Rule("do-subj", _match_do_subj),
    Rule("subj-do-have", _match_subj_do_have),
    Rule("conjunction", _match_conjunction),
    Rule("how-many", _match_how_many),
    Rule("single-prep", _match_single_prep),
    Rule("multi-prep", _match_multi_prep),
    Rule("relcl", _match_relcl),
    Rule("superlative", _match_superlative),
    Rule("acl-verb", _match_acl_verb),
    Rule("sent-coref", _match_sent_coref),
)


def _initial_region(tree: DepTree) -> list[Item]:
    return [t.gi for t in tree.tokens if t.deprel != "punct"]


def match_rule(tree: DepTree) -> tuple[Rule, str] | None:
    """First rule (priority order, leftmost site) matching the whole question."""
    region = _initial_region(tree)
    for rule in RULES:
        found = rule.match(tree, region)
        if found is not None:
            return rule, found.site
    return None


def _apply(regions: list[list[Item]], position: int, produced: tuple[tuple[Item, ...], ...]) -> list[list[Item]]:
    offset = len(produced) - 1

    def remap(item: Item) -> Item:
        if isinstance(item, NewRef):
            return Ref(position + item.index)
        if isinstance(item, Ref):
            if item.target < position:
                return item
            if item.target == position:
                return Ref(position + offset)  # the last region carries the result
            return Ref(item.target + offset)
        return item

    merged: list[list[Item]] = (
        regions[:position] + [list(r) for r in produced] + regions[position + 1 :]
    )
    return [[remap(item) for item in region] for region in merged]


def decompose(tree: DepTree) -> list[str]:
    """Recursively apply the rules to a fixpoint; surface-form step texts."""
    regions: list[list[Item]] = [_initial_region(tree)]
    for _ in range(RECURSION_LIMIT):
        fired = False
        for rule in RULES:
            for position, region in enumerate(regions):
                found = rule.match(tree, region)
                if found is not None:
                    regions = _apply(regions, position, found.regions)
                    fired = True
                    break
            if fired:
                break
        if not fired:
            return [_render(tree, region) for region in regions]
    raise RecursionLimitError(f"no fixpoint after {RECURSION_LIMIT} rule applications")


def _render(tree: DepTree, region: list[Item]) -> str:
    parts = []
    for item in region:
        if isinstance(item, int):
            parts.append(tree.token(item).form)
        elif isinstance(item, Ref):
            parts.append(f"#{item.target + 1}")
        elif isinstance(item, Lit):
            parts.append(item.text)
        else:
            raise AssertionError(f"unrendered item {item!r}")
    return " ".join(parts)


def to_qdmr(steps: list[str], mode: QdmrMode = QdmrMode.STANDARD) -> Qdmr:
    """Parse decomposed surface steps into a canonical decomposition."""
    return parse_qdmr(" ;".join(f"return {step}" for step in steps), mode)
