"""Execute decompositions against an idealized in-memory knowledge base.

The KB holds typed triples (subject entity, relation, object value) plus
surface phrases per entity. A relation holds between x and y exactly when the
triple (x, relation, y) is present. Numbers are exact rationals so golden
results never depend on float rounding.

Results are provenance-tracking value sets: an item remembers the entity it
was derived from through project/group chains, which is what keying
operations (GROUP, SUPERLATIVE, COMPARATIVE, SORT) consume. The pairing is
resolved in either direction: values that carry their key as origin, or keys
that carry the paired value as origin (step chains reference both ways).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from qdmr.core import Qdmr, QdmrMode, strip_articles, tokenize
from qdmr.opident import (
    KeywordLexicon,
    Operator,
    OperatorInstance,
    classify_qdmr,
    default_keyword_lexicon,
    resolve_keyword,
)


@dataclass(frozen=True)
class Entity:
    id: str


@dataclass(frozen=True)
class Number:
    value: Fraction


@dataclass(frozen=True)
class Boolean:
    value: bool


@dataclass(frozen=True)
class Text:
    value: str


Value = Entity | Number | Boolean | Text


def number(value) -> Number:
    return Number(Fraction(value))


@dataclass(frozen=True)
class Item:
    value: Value
    origin: str | None = None


def _sort_key(item: Item) -> tuple:
    v = item.value
    kind = type(v).__name__
    if isinstance(v, Number):
        payload: tuple = (float(v.value), str(v.value))
    elif isinstance(v, Entity):
        payload = (0.0, v.id)
    elif isinstance(v, Text):
        payload = (0.0, v.value)
    else:
        payload = (0.0, str(v.value))
    return (kind, payload, item.origin or "")


@dataclass(frozen=True)
class ProvenancedSet:
    """A set of values with optional per-item origin entity.

    Unordered sets are kept in a canonical order for deterministic output;
    SORT results set ``ordered`` and preserve their sequence.
    """

    items: tuple[Item, ...]
    ordered: bool = False

    @classmethod
    def of(cls, items, ordered: bool = False) -> "ProvenancedSet":
        seen = set()
        deduped = []
        for item in items:
            if item not in seen:
                seen.add(item)
                deduped.append(item)
        if not ordered:
            deduped.sort(key=_sort_key)
        return cls(items=tuple(deduped), ordered=ordered)

    def values(self) -> list[Value]:
        return [item.value for item in self.items]

    def value_set(self) -> frozenset[Value]:
        return frozenset(item.value for item in self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


EMPTY_SET = ProvenancedSet(items=())


class ExecutorError(Exception):
    pass


class NoRelationError(ExecutorError):
    def __init__(self, phrase: str):
        super().__init__(f"no KB relation matches {phrase!r}")
        self.phrase = phrase


class MissingProvenanceError(ExecutorError):
    pass


class ArityMismatchError(ExecutorError):
    pass


class QdmrTypeError(ExecutorError):
    pass


class NonSingletonError(ExecutorError):
    def __init__(self, op: Operator, size: int):
        super().__init__(f"{op.value} needs singleton inputs, got a set of size {size}")
        self.op = op
        self.size = size


class StepEvaluationError(ExecutorError):
    def __init__(self, step_index: int, cause: Exception):
        super().__init__(f"step {step_index}: {cause}")
        self.step_index = step_index
        self.cause = cause


_ARTICLE_RE = re.compile(r"^(?:the|a|an)\s+")


def singularize(word: str) -> str:
    """Naive singular form: strip es after sibilants, else a trailing s."""
    if len(word) > 3 and word.endswith(("ses", "xes", "zes", "ches", "shes")):
        return word[:-2]
    if len(word) > 2 and word.endswith("s") and not word.endswith("ss"):
        return word[:-1]
    return word


def normalize_phrase(text: str) -> str:
    """Grounding normalization: lowercase, drop leading articles, singularize."""
    tokens = strip_articles(tuple(tokenize(text.lower())))
    return " ".join(singularize(t) for t in tokens)


@dataclass(frozen=True)
class KnowledgeBase:
    """Immutable triple store with entity surface phrases."""

    triples: tuple[tuple[str, str, Value], ...]
    entity_names: dict

    @classmethod
    def build(cls, triples, entity_names=None) -> "KnowledgeBase":
        names: dict[str, set[str]] = {}
        normalized = []
        for subject, relation, obj in triples:
            normalized.append((subject, relation.lower(), obj))
            names.setdefault(subject, set()).add(subject.replace("_", " "))
            if isinstance(obj, Entity):
                names.setdefault(obj.id, set()).add(obj.id.replace("_", " "))
        for entity, aliases in (entity_names or {}).items():
            names.setdefault(entity, set()).add(entity.replace("_", " "))
            names[entity].update(aliases)
        return cls(
            triples=tuple(sorted(set(normalized), key=lambda t: (t[0], t[1], _sort_key(Item(t[2]))))),
            entity_names={e: frozenset(a) for e, a in names.items()},
        )

    @property
    def relations(self) -> frozenset[str]:
        return frozenset(r for _, r, _ in self.triples)

    def holds(self, relation: str, x: Value, y: Value) -> bool:
        if not isinstance(x, Entity):
            return False
        return (x.id, relation, y) in self.triples

    def objects(self, subject: str, relation: str) -> list[Value]:
        return [o for s, r, o in self.triples if s == subject and r == relation]

    def primary_name(self, entity_id: str) -> str:
        """The id-derived surface form; aliases are secondary names."""
        derived = entity_id.replace("_", " ")
        names = self.entity_names.get(entity_id)
        if not names:
            return derived
        return derived if derived in names else min(names)


def load_kb(path: str) -> KnowledgeBase:
    with open(path, encoding="utf-8") as f:
        return parse_kb_text(f.read())


def parse_kb_text(text: str) -> KnowledgeBase:
    """Parse the triple file format: ``subject<TAB>relation<TAB>object`` per
    line, ``#`` comments. Objects are typed by prefix (int:/num:/bool:/str:)
    or are bare entity ids; the ``alias`` pseudo-relation adds a surface
    phrase to its subject."""
    triples: list[tuple[str, str, Value]] = []
    aliases: dict[str, set[str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            raise ValueError(f"KB line {lineno}: expected 3 tab-separated fields")
        subject, relation, obj_text = (p.strip() for p in parts)
        if relation.lower() == "alias":
            aliases.setdefault(subject, set()).add(obj_text)
            continue
        triples.append((subject, relation, _parse_object(obj_text, lineno)))
    return KnowledgeBase.build(triples, aliases)


def _parse_object(text: str, lineno: int) -> Value:
    if text.startswith("int:"):
        return Number(Fraction(int(text[4:])))
    if text.startswith("num:"):
        return Number(Fraction(text[4:]))
    if text.startswith("bool:"):
        flag = text[5:].lower()
        if flag not in ("true", "false"):
            raise ValueError(f"KB line {lineno}: bad boolean {text!r}")
        return Boolean(flag == "true")
    if text.startswith("str:"):
        return Text(text[4:])
    return Entity(text)


def ground_entities(kb: KnowledgeBase, w: str) -> ProvenancedSet:
    """All entities with a surface phrase matching w under normalization."""
    target = normalize_phrase(w)
    if not target:
        return EMPTY_SET
    hits = [
        Item(Entity(entity_id))
        for entity_id, names in kb.entity_names.items()
        if any(normalize_phrase(name) == target for name in names)
    ]
    return ProvenancedSet.of(hits)


def ground_relation(kb: KnowledgeBase, w: str) -> str:
    """The KB relation whose name is the longest normalized sub-phrase of w."""
    tokens = normalize_phrase(w).split()
    best: tuple[int, int, str] | None = None
    for relation in kb.relations:
        rel_tokens = normalize_phrase(relation).split()
        width = len(rel_tokens)
        if width == 0:
            continue
        for start in range(len(tokens) - width + 1):
            if tokens[start : start + width] == rel_tokens:
                candidate = (width, len(relation), relation)
                if best is None or candidate > best:
                    best = candidate
                break
    if best is None:
        raise NoRelationError(w)
    return best[2]


def map_k(s_e: ProvenancedSet, s_o: ProvenancedSet) -> frozenset[tuple[str, Value]]:
    """The entity-to-object pairing, realized via stored provenance.

    Every item of s_o must carry an origin present in s_e.
    """
    entity_ids = {item.value.id for item in s_e if isinstance(item.value, Entity)}
    pairs = set()
    for item in s_o:
        if item.origin is None or item.origin not in entity_ids:
            raise MissingProvenanceError(f"item {item.value!r} has no origin in the key set")
        pairs.add((item.origin, item.value))
    return frozenset(pairs)


def _provenance_pairs(keys: ProvenancedSet, values: ProvenancedSet) -> list[tuple[Item, Item]]:
    """Key/value pairs via provenance, resolved in either direction."""
    pairs = []
    for key in keys:
        key_id = key.value.id if isinstance(key.value, Entity) else None
        for val in values:
            forward = key_id is not None and val.origin == key_id
            backward = (
                key.origin is not None
                and isinstance(val.value, Entity)
                and key.origin == val.value.id
            )
            if forward or backward:
                pairs.append((key, val))
    return pairs


def _entity_keyed(keys: ProvenancedSet, values: ProvenancedSet) -> list[tuple[str, list[Item], list[Item]]]:
    """Group the keying set by distinct entity value.

    Returns (entity id, key items holding it, matched value items); keys are
    entity sets per the operator signatures, so non-entity items are skipped.
    """
    pairs = _provenance_pairs(keys, values)
    grouped: dict[str, tuple[list[Item], list[Item]]] = {}
    order: list[str] = []
    for item in keys:
        if not isinstance(item.value, Entity):
            continue
        if item.value.id not in grouped:
            grouped[item.value.id] = ([], [])
            order.append(item.value.id)
        grouped[item.value.id][0].append(item)
    for key_item, val_item in pairs:
        bucket = grouped.get(key_item.value.id)
        if bucket is not None and val_item not in bucket[1]:
            bucket[1].append(val_item)
    return [(eid, grouped[eid][0], grouped[eid][1]) for eid in order]


_RELATION_HEAD_WORDS = (
    "from", "to", "in", "on", "at", "with", "that", "of", "by", "for",
    "than", "about", "besides", "playing", "during",
)


def split_filter_condition(w: str) -> tuple[str, str]:
    """Split a filter condition into (relation phrase, entity phrase): the
    first relation-heading function word heads the relation; the rest is the
    entity phrase. Falls back to the whole phrase as relation."""
    tokens = tokenize(w.lower())
    for i, token in enumerate(tokens):
        if token in _RELATION_HEAD_WORDS:
            return token, " ".join(tokens[i + 1 :])
    return w, ""


def _strip_relation_tokens(w: str, relation: str) -> str:
    """Drop the relation's (normalized) token span from a condition phrase."""
    tokens = [singularize(t) for t in strip_articles(tuple(tokenize(w.lower())))]
    rel_tokens = normalize_phrase(relation).split()
    width = len(rel_tokens)
    for start in range(len(tokens) - width + 1):
        if tokens[start : start + width] == rel_tokens:
            return " ".join(tokens[:start] + tokens[start + width :])
    return " ".join(tokens)


def _require_arity(inst: OperatorInstance, inputs, arity: int):
    if len(inputs) != arity:
        raise ArityMismatchError(f"{inst.op.value} expects {arity} inputs, got {len(inputs)}")


def _require_numbers(values, op: Operator) -> list[Fraction]:
    numbers = []
    for v in values:
        if not isinstance(v, Number):
            raise QdmrTypeError(f"{op.value} needs numbers, got {v!r}")
        numbers.append(v.value)
    return numbers


def _aggregate(symbol: str, values: list[Fraction]) -> Fraction:
    if symbol == "sum":
        return Fraction(sum(values))
    if symbol == "avg":
        return Fraction(sum(values)) / len(values)
    if symbol == "max":
        return max(values)
    if symbol == "min":
        return min(values)
    raise QdmrTypeError(f"unknown aggregate symbol {symbol!r}")


_COMPARATORS = {
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def _singleton(inst: OperatorInstance, s: ProvenancedSet) -> Value:
    if len(s) != 1:
        raise NonSingletonError(inst.op, len(s))
    return s.items[0].value


def evaluate_operator(
    kb: KnowledgeBase,
    inst: OperatorInstance,
    inputs: list[ProvenancedSet],
    lexicon: KeywordLexicon | None = None,
) -> ProvenancedSet:
    """Apply one operator to already-resolved inputs."""
    lex = lexicon or default_keyword_lexicon()
    op = inst.op

    if op is Operator.SELECT:
        _require_arity(inst, inputs, 0)
        return ground_entities(kb, inst.constant("w") or "")

    if op is Operator.FILTER:
        _require_arity(inst, inputs, 1)
        w = inst.constant("w") or ""
        head, entity_phrase = split_filter_condition(w)
        try:
            relation = ground_relation(kb, head)
        except NoRelationError:
            # No relation-heading function word matched a KB relation; fall
            # back to the longest relation sub-phrase of the whole condition.
            relation = ground_relation(kb, w)
            entity_phrase = _strip_relation_tokens(w, relation)
        entities = ground_entities(kb, entity_phrase) if entity_phrase else EMPTY_SET
        kept = [
            item
            for item in inputs[0]
            if any(kb.holds(relation, e.value, item.value) for e in entities)
        ]
        return ProvenancedSet.of(kept)

    if op is Operator.PROJECT:
        _require_arity(inst, inputs, 1)
        relation = ground_relation(kb, inst.constant("w") or "")
        out = []
        for item in inputs[0]:
            if not isinstance(item.value, Entity):
                continue
            for obj in kb.objects(item.value.id, relation):
                out.append(Item(obj, origin=item.value.id))
        return ProvenancedSet.of(out)

    if op is Operator.AGGREGATE:
        _require_arity(inst, inputs, 1)
        symbol = resolve_keyword("agg", inst.constant("w_agg") or "", lex)
        if symbol == "count":
            return ProvenancedSet.of([Item(number(len(inputs[0])))])
        values = _require_numbers(inputs[0].values(), op)
        if not values and symbol == "sum":
            return ProvenancedSet.of([Item(number(0))])
        if not values:
            raise QdmrTypeError(f"{symbol} of an empty set")
        return ProvenancedSet.of([Item(Number(_aggregate(symbol, values)))])

    if op is Operator.GROUP:
        _require_arity(inst, inputs, 2)
        values_set, keys_set = inputs
        symbol = resolve_keyword("agg", inst.constant("w_agg") or "", lex)
        out = []
        for entity_id, _, matched in _entity_keyed(keys_set, values_set):
            if symbol == "count":
                out.append(Item(number(len(matched)), origin=entity_id))
                continue
            numbers = _require_numbers([m.value for m in matched], op)
            if not numbers and symbol == "sum":
                out.append(Item(number(0), origin=entity_id))
                continue
            if not numbers:
                continue  # max/min/avg undefined on an empty group
            out.append(Item(Number(_aggregate(symbol, numbers)), origin=entity_id))
        return ProvenancedSet.of(out)

    if op is Operator.SUPERLATIVE:
        _require_arity(inst, inputs, 2)
        entities, numbers_set = inputs
        symbol = resolve_keyword("sup", inst.constant("w_sup") or "", lex)
        scored = []
        for _, key_items, matched in _entity_keyed(entities, numbers_set):
            for n in _require_numbers([m.value for m in matched], op):
                scored.append((n, key_items))
        if not scored:
            return EMPTY_SET
        best = max(n for n, _ in scored) if symbol == "argmax" else min(n for n, _ in scored)
        winners = [item for n, key_items in scored if n == best for item in key_items]
        return ProvenancedSet.of(winners)

    if op is Operator.COMPARATIVE:
        _require_arity(inst, inputs, 2)
        entities, numbers_set = inputs
        symbol = resolve_keyword("com", inst.constant("w_com") or "", lex)
        threshold = Fraction(inst.constant("n") or "0")
        compare = _COMPARATORS[symbol]
        winners = []
        for _, key_items, matched in _entity_keyed(entities, numbers_set):
            numbers = _require_numbers([m.value for m in matched], op)
            if any(compare(n, threshold) for n in numbers):
                winners.extend(key_items)
        return ProvenancedSet.of(winners)

    if op is Operator.UNION:
        if len(inputs) < 2:
            raise ArityMismatchError(f"UNION expects >= 2 inputs, got {len(inputs)}")
        out = [item for s in inputs for item in s]
        return ProvenancedSet.of(out)

    if op is Operator.DISCARD:
        _require_arity(inst, inputs, 2)
        removed = inputs[1].value_set()
        return ProvenancedSet.of([item for item in inputs[0] if item.value not in removed])

    if op is Operator.INTERSECTION:
        _require_arity(inst, inputs, 2)
        relation = ground_relation(kb, inst.constant("w") or "")
        common = inputs[0].value_set() & inputs[1].value_set()
        out = []
        for value in common:
            if not isinstance(value, Entity):
                continue
            for obj in kb.objects(value.id, relation):
                out.append(Item(obj, origin=value.id))
        return ProvenancedSet.of(out)

    if op is Operator.SORT:
        _require_arity(inst, inputs, 2)
        entities, numbers_set = inputs
        ranked = []
        for entity_id, key_items, matched in _entity_keyed(entities, numbers_set):
            numbers = _require_numbers([m.value for m in matched], op)
            rank = (0, min(numbers)) if numbers else (1, Fraction(0))
            ranked.append((rank, kb.primary_name(entity_id), key_items))
        ranked.sort(key=lambda t: (t[0][0], t[0][1], t[1]))
        ordered = [item for _, _, key_items in ranked for item in sorted(key_items, key=_sort_key)]
        return ProvenancedSet.of(ordered, ordered=True)

    if op is Operator.BOOLEAN:
        _require_arity(inst, inputs, 2)
        left = _singleton(inst, inputs[0])
        right = _singleton(inst, inputs[1])
        w = inst.constant("w") or ""
        com_symbol = _scan_condition_comparator(w, lex)
        if com_symbol is not None:
            if com_symbol in ("=", "!="):
                result = (left == right) if com_symbol == "=" else (left != right)
            else:
                numbers = _require_numbers([left, right], op)
                result = _COMPARATORS[com_symbol](numbers[0], numbers[1])
            return ProvenancedSet.of([Item(Boolean(result))])
        relation = ground_relation(kb, w)
        return ProvenancedSet.of([Item(Boolean(kb.holds(relation, left, right)))])

    if op is Operator.ARITHMETIC:
        _require_arity(inst, inputs, 2)
        symbol = resolve_keyword("ari", inst.constant("w_ari") or "", lex)
        left, right = (
            _require_numbers([_singleton(inst, inputs[0])], op)[0],
            _require_numbers([_singleton(inst, inputs[1])], op)[0],
        )
        if symbol == "+":
            result = left + right
        elif symbol == "-":
            result = left - right
        elif symbol == "*":
            result = left * right
        else:
            if right == 0:
                raise QdmrTypeError("division by zero")
            result = left / right
        return ProvenancedSet.of([Item(Number(result))])

    raise ArityMismatchError(f"unhandled operator {op}")


def _scan_condition_comparator(w: str, lexicon: KeywordLexicon) -> str | None:
    tokens = tuple(tokenize(w.lower()))
    best: tuple[int, str] | None = None
    for phrase in lexicon.phrases("com"):
        width = len(phrase)
        for start in range(len(tokens) - width + 1):
            if tokens[start : start + width] == phrase:
                if best is None or width > best[0]:
                    best = (width, " ".join(phrase))
                break
    return lexicon.resolve("com", best[1]) if best else None


def evaluate_qdmr(
    kb: KnowledgeBase,
    d: Qdmr,
    mode: QdmrMode | None = None,
    lexicon: KeywordLexicon | None = None,
) -> ProvenancedSet:
    """Evaluate steps in index order, memoizing results; the last step's
    result is the answer. Step errors carry their step index."""
    instances = classify_qdmr(d, mode or d.mode, lexicon)
    results: dict[int, ProvenancedSet] = {}
    for step, inst in zip(d.steps, instances):
        inputs = [results[ref] for ref in inst.refs]
        try:
            results[step.index] = evaluate_operator(kb, inst, inputs, lexicon)
        except ExecutorError as err:
            raise StepEvaluationError(step.index, err) from err
    return results[len(d.steps)]
