"""Multi-hop question answering over high-level decompositions.

Walks the steps in order with a pluggable single-hop answerer: SELECT steps
ask the answerer directly, PROJECT steps substitute the referenced step's
top answer into the text first, FILTER steps ask a normalized question and
intersect with the referenced answer (INTERSECTION steps likewise, against
both references), and comparison steps (superlative or threshold) compare the
numbers returned by the referenced steps discretely. Other operators are
unsupported by design.

Two answerers ship: a deterministic oracle over the executor's knowledge
base (grounds the step text), and a bigram tf-idf retriever over a small
document set with an exact-match extraction stub.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol

from qdmr.core import Qdmr, QdmrMode, QdmrStep, is_ref, tokenize
from qdmr.executor import (
    Boolean,
    Entity,
    KnowledgeBase,
    NoRelationError,
    Number,
    Text,
    ground_entities,
    ground_relation,
    split_filter_condition,
)
from qdmr.opident import Operator, classify_qdmr, default_keyword_lexicon

logger = logging.getLogger(__name__)

NORMALIZED_QUESTION_HEAD = "which entities"


class BreakRcError(Exception):
    pass


class UnsupportedOperatorError(BreakRcError):
    def __init__(self, op: Operator, step_index: int):
        super().__init__(f"step {step_index}: operator {op.value} is not handled")
        self.op = op
        self.step_index = step_index


class AnswererFailureError(BreakRcError):
    def __init__(self, step_index: int, cause: Exception):
        super().__init__(f"step {step_index}: answerer failed: {cause}")
        self.step_index = step_index
        self.cause = cause


class NonNumericAnswerError(BreakRcError):
    pass


@dataclass(frozen=True)
class AnswerCandidate:
    text: str
    probability: float
    subject: str | None = None


@dataclass(frozen=True)
class AnswerDistribution:
    candidates: tuple[AnswerCandidate, ...] = ()
    retrieved: tuple[str, ...] = ()
    no_overlap: bool = False

    def __post_init__(self):
        total = 0.0
        for candidate in self.candidates:
            if not (0.0 <= candidate.probability <= 1.0):
                raise BreakRcError(f"probability out of range: {candidate!r}")
            total += candidate.probability
        if total > 1.0 + 1e-9:
            raise BreakRcError(f"probabilities sum to {total}, above 1")

    @property
    def top(self) -> AnswerCandidate | None:
        return self.candidates[0] if self.candidates else None

    def texts(self) -> set[str]:
        return {c.text for c in self.candidates}


def uniform_distribution(texts, retrieved=(), subjects=None) -> AnswerDistribution:
    items = sorted(set(texts))
    if not items:
        return AnswerDistribution(retrieved=tuple(retrieved))
    p = 1.0 / len(items)
    subjects = subjects or {}
    return AnswerDistribution(
        candidates=tuple(
            AnswerCandidate(text=t, probability=p, subject=subjects.get(t)) for t in items
        ),
        retrieved=tuple(retrieved),
    )


class Answerer(Protocol):
    def answer(self, question: str) -> AnswerDistribution: ...


def _normalize_answer_text(text: str) -> str:
    return " ".join(text.lower().split())


def extract_question(step: QdmrStep) -> str:
    """Normalized question for a filter-style step: the single reference is
    replaced by the interrogative head."""
    refs = [t for t in step.tokens if is_ref(t)]
    if len(refs) != 1:
        raise BreakRcError(
            f"normalized question needs exactly one reference, step has {len(refs)}"
        )
    words = [NORMALIZED_QUESTION_HEAD if is_ref(t) else t for t in step.tokens]
    return " ".join(words)


def intersect_answers(a: AnswerDistribution, b: AnswerDistribution) -> AnswerDistribution:
    """Candidates present in both, probabilities multiplied and renormalized;
    an empty overlap is flagged rather than an error. The result keeps the
    first argument's retrieved contexts (the current step's own IR call)."""
    b_by_text = {_normalize_answer_text(c.text): c for c in b.candidates}
    merged = []
    for candidate in a.candidates:
        other = b_by_text.get(_normalize_answer_text(candidate.text))
        if other is None:
            continue
        merged.append(
            AnswerCandidate(
                text=candidate.text,
                probability=candidate.probability * other.probability,
                subject=candidate.subject or other.subject,
            )
        )
    retrieved = a.retrieved
    if not merged:
        return AnswerDistribution(retrieved=retrieved, no_overlap=True)
    total = sum(c.probability for c in merged)
    normalized = tuple(
        AnswerCandidate(text=c.text, probability=c.probability / total, subject=c.subject)
        for c in sorted(merged, key=lambda c: (-c.probability, c.text))
    )
    return AnswerDistribution(candidates=normalized, retrieved=retrieved)


_MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6,
    "july": 7, "august": 8, "september": 9, "october": 10, "november": 11, "december": 12,
}

_DATE_RE = re.compile(r"^(\d{1,2})\s+([a-z]+)\s+(\d{4})$")


def parse_comparable(text: str) -> tuple[int, int, int]:
    """Numbers and dates on a shared comparable scale: integers and 4-digit
    years become (n, 0, 0); "day month year" dates become (year, month, day)."""
    cleaned = _normalize_answer_text(text)
    if re.fullmatch(r"\d+", cleaned):
        return (int(cleaned), 0, 0)
    match = _DATE_RE.match(cleaned)
    if match and match.group(2) in _MONTHS:
        return (int(match.group(3)), _MONTHS[match.group(2)], int(match.group(1)))
    raise NonNumericAnswerError(f"cannot compare answer {text!r}")


_SUBJECT_LEAD = {
    "when", "what", "which", "who", "where", "how", "why", "return",
    "is", "are", "was", "were", "did", "does", "do",
}
_SUBJECT_STOP = {"is", "are", "was", "were", "did", "does", "do"}


def extract_subject(step_text: str) -> str:
    """The entity a step asks about: its tokens minus the interrogative lead
    and anything from the finite verb on ("when X was released" -> "X")."""
    tokens = tokenize(step_text.lower())
    while tokens and tokens[0] in _SUBJECT_LEAD:
        tokens = tokens[1:]
    kept = []
    for token in tokens:
        if token in _SUBJECT_STOP and kept:
            break
        kept.append(token)
    return " ".join(kept).strip() or step_text.strip()


def compare_steps(
    refs, d: Qdmr, ansrs: dict[int, AnswerDistribution], keyword: str, threshold: str | None = None
) -> AnswerDistribution:
    """Discrete comparison of the numbers returned by the referenced steps.

    Superlative flavor (argmin/argmax keyword): each referenced step
    contributes its top answer's number; the winning steps' subjects share the
    probability evenly. Threshold flavor (comparison keyword + constant):
    candidates of the second referenced step pass the comparison and their
    subjects are intersected with the first referenced answer.
    """
    lexicon = default_keyword_lexicon()
    try:
        symbol = lexicon.resolve("sup", keyword)
        flavor = "sup"
    except Exception:
        symbol = lexicon.resolve("com", keyword)
        flavor = "com"

    if flavor == "sup":
        scored = []
        for ref in refs:
            dist = ansrs[ref]
            top = dist.top
            if top is None:
                raise NonNumericAnswerError(f"step {ref} returned no answer to compare")
            value = parse_comparable(top.text)
            subject = top.subject or extract_subject(d.steps[ref - 1].text)
            scored.append((value, subject))
        best = max(v for v, _ in scored) if symbol == "argmax" else min(v for v, _ in scored)
        winners = sorted({subject for value, subject in scored if value == best})
        return uniform_distribution(winners)

    entity_ref, number_ref = refs[0], refs[1]
    if threshold is None:
        raise BreakRcError("threshold comparison needs a constant")
    bound = (int(Fraction(threshold)), 0, 0)
    compare = {
        ">": lambda a, b: a > b,
        ">=": lambda a, b: a >= b,
        "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b,
        "=": lambda a, b: a == b,
        "!=": lambda a, b: a != b,
    }[symbol]
    passing = set()
    for candidate in ansrs[number_ref].candidates:
        if candidate.subject is None:
            raise NonNumericAnswerError(
                "threshold comparison needs per-candidate subjects from the answerer"
            )
        if compare(parse_comparable(candidate.text), bound):
            passing.add(candidate.subject)
    entity_texts = {_normalize_answer_text(t) for t in ansrs[entity_ref].texts()}
    winners = sorted(s for s in passing if _normalize_answer_text(s) in entity_texts)
    return uniform_distribution(winners)


_SUPPORTED = {
    Operator.SELECT,
    Operator.PROJECT,
    Operator.FILTER,
    Operator.INTERSECTION,
    Operator.SUPERLATIVE,
    Operator.COMPARATIVE,
}


@dataclass
class BreakRcRun:
    step_answers: dict[int, AnswerDistribution] = field(default_factory=dict)

    @property
    def final(self) -> AnswerDistribution:
        return self.step_answers[max(self.step_answers)]


def run_break_rc(d: Qdmr, answerer: Answerer) -> BreakRcRun:
    """Execute the full walk, keeping every step's answer distribution."""
    if d.mode is not QdmrMode.HIGH_LEVEL:
        raise BreakRcError("break_rc expects a high-level decomposition")
    instances = classify_qdmr(d, QdmrMode.HIGH_LEVEL)
    run = BreakRcRun()
    for step, inst in zip(d.steps, instances):
        if inst.op not in _SUPPORTED:
            raise UnsupportedOperatorError(inst.op, step.index)
        try:
            if inst.op is Operator.SELECT:
                ans = answerer.answer(step.text)
            elif inst.op is Operator.PROJECT:
                previous = run.step_answers[inst.refs[0]]
                top = previous.top
                if top is None:
                    ans = AnswerDistribution(no_overlap=previous.no_overlap)
                else:
                    substituted = " ".join(
                        top.text if is_ref(t) else t for t in step.tokens
                    )
                    ans = answerer.answer(substituted)
            elif inst.op is Operator.FILTER:
                normalized = extract_question(step)
                tmp = answerer.answer(normalized)
                ans = intersect_answers(tmp, run.step_answers[inst.refs[0]])
            elif inst.op is Operator.INTERSECTION:
                normalized = f"{NORMALIZED_QUESTION_HEAD} {inst.constant('w') or ''}".strip()
                tmp = answerer.answer(normalized)
                for ref in inst.refs:
                    tmp = intersect_answers(tmp, run.step_answers[ref])
                ans = tmp
            else:  # SUPERLATIVE or COMPARATIVE: discrete comparison
                keyword = inst.constant("w_sup") or inst.constant("w_com") or ""
                ans = compare_steps(
                    list(inst.refs), d, run.step_answers, keyword, inst.constant("n")
                )
        except BreakRcError:
            raise
        except Exception as err:
            raise AnswererFailureError(step.index, err) from err
        run.step_answers[step.index] = ans
    return run


def break_rc(d: Qdmr, answerer: Answerer) -> AnswerDistribution:
    """Answer a multi-hop question by walking its decomposition."""
    return run_break_rc(d, answerer).final


def combined_retrieve(d: Qdmr, answerer: Answerer, top_k: int = 10) -> list[str]:
    """Retrieval-only mode: run the walk, pool every retrieved context id by
    rank, deduplicate, and keep the first top_k."""
    run = run_break_rc(d, answerer)
    pooled: list[tuple[int, int, str]] = []
    for step_index in sorted(run.step_answers):
        for rank, context_id in enumerate(run.step_answers[step_index].retrieved):
            pooled.append((rank, step_index, context_id))
    pooled.sort()
    out: list[str] = []
    for _, _, context_id in pooled:
        if context_id not in out:
            out.append(context_id)
        if len(out) == top_k:
            break
    if not out:
        logger.warning("no contexts retrieved: the answerer does not expose retrieval")
    return out


# ---------------------------------------------------------------------------
# Shipped answerers


class KbOracleAnswerer:
    """Deterministic single-hop answerer over a knowledge base.

    Grounds the question text: a normalized "which entities <condition>"
    question runs the condition against the whole KB; otherwise the text
    grounds as entities directly, or as a relation plus anchor entities (each
    candidate then carries its anchor as subject).
    """

    def __init__(self, kb: KnowledgeBase):
        self.kb = kb

    def _render(self, value) -> str:
        if isinstance(value, Entity):
            return self.kb.primary_name(value.id)
        if isinstance(value, Number):
            frac = value.value
            return str(frac.numerator) if frac.denominator == 1 else f"{frac.numerator}/{frac.denominator}"
        if isinstance(value, Boolean):
            return "true" if value.value else "false"
        if isinstance(value, Text):
            return value.value
        raise AssertionError(f"unrenderable {value!r}")

    def answer(self, question: str) -> AnswerDistribution:
        text = _normalize_answer_text(question)
        if text.startswith(NORMALIZED_QUESTION_HEAD):
            condition = text[len(NORMALIZED_QUESTION_HEAD) :].strip()
            return self._answer_condition(condition)
        entities = ground_entities(self.kb, text)
        if len(entities) > 0:
            return uniform_distribution(self._render(item.value) for item in entities)
        return self._answer_relation(text)

    def _answer_condition(self, condition: str) -> AnswerDistribution:
        head, entity_phrase = split_filter_condition(condition)
        try:
            relation = ground_relation(self.kb, head)
        except NoRelationError:
            return self._answer_relation(condition)
        anchors = ground_entities(self.kb, entity_phrase) if entity_phrase else ()
        texts = []
        for anchor in anchors:
            for obj in self.kb.objects(anchor.value.id, relation):
                texts.append(self._render(obj))
        return uniform_distribution(texts)

    def _answer_relation(self, text: str) -> AnswerDistribution:
        try:
            relation = ground_relation(self.kb, text)
        except NoRelationError:
            return AnswerDistribution()
        remainder = _strip_phrase(text, relation)
        anchors = ground_entities(self.kb, remainder) if remainder else ()
        rendered: dict[str, str] = {}
        texts = []
        for anchor in anchors:
            for obj in self.kb.objects(anchor.value.id, relation):
                rendered_text = self._render(obj)
                texts.append(rendered_text)
                rendered.setdefault(rendered_text, self._render(anchor.value))
        return uniform_distribution(texts, subjects=rendered)


_CONDITION_HEAD_WORDS = (
    "of", "in", "from", "to", "on", "at", "with", "by", "for", "that", "the", "a", "an",
)


def _strip_phrase(text: str, phrase: str) -> str:
    """Remove the phrase's tokens from the text, then any leading link words."""
    tokens = text.split()
    phrase_tokens = phrase.lower().split()
    for start in range(len(tokens) - len(phrase_tokens) + 1):
        window = [t.lower() for t in tokens[start : start + len(phrase_tokens)]]
        if window == phrase_tokens:
            tokens = tokens[:start] + tokens[start + len(phrase_tokens) :]
            break
    while tokens and tokens[0].lower() in _CONDITION_HEAD_WORDS:
        tokens = tokens[1:]
    return " ".join(tokens)


class TfIdfCorpusAnswerer:
    """Bigram tf-idf retrieval over a small document set with an exact-match
    extraction stub: the answer is what follows the question's content tokens
    inside a retrieved document."""

    def __init__(self, documents: list[tuple[str, str]], top_k: int = 10):
        self.documents = list(documents)
        self.top_k = top_k
        self._doc_vectors: list[dict[str, float]] = []
        df: Counter = Counter()
        grams_per_doc = []
        for _, text in self.documents:
            grams = _grams(text)
            grams_per_doc.append(grams)
            df.update(set(grams))
        n_docs = len(self.documents)
        self._idf = {
            gram: math.log((1 + n_docs) / (1 + count)) + 1.0 for gram, count in df.items()
        }
        for grams in grams_per_doc:
            counts = Counter(grams)
            vector = {g: counts[g] * self._idf[g] for g in counts}
            norm = math.sqrt(sum(w * w for w in vector.values())) or 1.0
            self._doc_vectors.append({g: w / norm for g, w in vector.items()})

    def retrieve(self, question: str) -> list[tuple[str, float]]:
        counts = Counter(_grams(question))
        vector = {g: counts[g] * self._idf.get(g, 0.0) for g in counts}
        norm = math.sqrt(sum(w * w for w in vector.values())) or 1.0
        scores = []
        for (doc_id, _), doc_vector in zip(self.documents, self._doc_vectors):
            score = sum(w / norm * doc_vector.get(g, 0.0) for g, w in vector.items())
            if score > 0:
                scores.append((doc_id, score))
        scores.sort(key=lambda pair: (-pair[1], pair[0]))
        return scores[: self.top_k]

    def answer(self, question: str) -> AnswerDistribution:
        ranked = self.retrieve(question)
        by_id = dict(self.documents)
        content = _content_tokens(question)
        candidates = []
        for doc_id, score in ranked:
            span = _extract_after(by_id[doc_id], content)
            if span:
                candidates.append((span, score, doc_id))
        retrieved = tuple(doc_id for doc_id, _ in ranked)
        if not candidates:
            return AnswerDistribution(retrieved=retrieved)
        total = sum(score for _, score, _ in candidates)
        dist = tuple(
            AnswerCandidate(text=span, probability=score / total)
            for span, score, _ in sorted(candidates, key=lambda c: (-c[1], c[0]))
        )
        return AnswerDistribution(candidates=dist, retrieved=retrieved)


def _grams(text: str) -> list[str]:
    tokens = tokenize(text.lower())
    words = [t for t in tokens if any(ch.isalnum() for ch in t)]
    bigrams = [f"{a} {b}" for a, b in zip(words, words[1:])]
    return words + bigrams


_QUESTION_LEAD = {
    "which", "entities", "what", "when", "where", "who", "how", "why", "return",
}

_ANSWER_TRIM = {"in", "on", "at", "the", "of", "was", "is", "were", "are", "a", "an"}


def _content_tokens(question: str) -> list[str]:
    tokens = tokenize(question.lower())
    while tokens and tokens[0] in _QUESTION_LEAD:
        tokens = tokens[1:]
    return [t for t in tokens if any(ch.isalnum() for ch in t)]


def _extract_after(doc_text: str, content: list[str]) -> str | None:
    if not content:
        return None
    words = tokenize(doc_text.lower())
    width = len(content)
    for start in range(len(words) - width + 1):
        if words[start : start + width] == content:
            remainder = words[start + width :]
            while remainder and remainder[0] in _ANSWER_TRIM:
                remainder = remainder[1:]
            if remainder:
                return " ".join(remainder)
            prefix = words[:start]
            return " ".join(prefix) if prefix else None
    return None


def load_corpus(path: str) -> list[tuple[str, str]]:
    """One document per line: ``doc_id<TAB>text``."""
    documents = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t", 1)
            if len(parts) != 2:
                raise BreakRcError(f"corpus line {lineno}: expected doc_id<TAB>text")
            documents.append((parts[0].strip(), parts[1].strip()))
    return documents
