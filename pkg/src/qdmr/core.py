"""Core QDMR domain types, the textual format, and the closed annotation lexicon.

A decomposition is an ordered list of natural-language steps. Step tokens are
plain lowercase strings in canonical form; a reference token ``#k`` names the
result of step ``k`` and must point strictly backwards. The textual format is
the dataset's ``;``-separated step list (``[SEP]`` accepted as an alias
separator), each step opening with the delimiter word "return", which is
stripped on parse and re-emitted on serialize.

All types are immutable values; all operations are pure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterable

REF_PREFIX = "#"
REF_PLACEHOLDER = "#REF"
STEP_DELIMITER_WORD = "return"

_TOKEN_RE = re.compile(r"#\w+|\d+(?:\.\d+)?|\w+(?:['-]\w+)*|[^\w\s]")
_REF_RE = re.compile(r"^#(\d+)$")
_SEPARATOR_RE = re.compile(r";|\[sep\]", re.IGNORECASE)

_ARTICLES = ("the", "a", "an")


class QdmrMode(Enum):
    """Granularity of a decomposition: one operator per step, or merged steps."""

    STANDARD = "standard"
    HIGH_LEVEL = "high_level"


class Split(Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


class SourceDataset(Enum):
    """The ten origin QA datasets."""

    ACADEMIC = "academic"
    ATIS = "atis"
    GEOQUERY = "geoquery"
    SPIDER = "spider"
    CLEVR = "clevr"
    NLVR2 = "nlvr2"
    COMQA = "comqa"
    CWQ = "cwq"
    DROP = "drop"
    HOTPOTQA = "hotpotqa"


class QdmrError(Exception):
    """Base class for QDMR parsing and validation failures."""


class EmptyStepError(QdmrError):
    def __init__(self, step_index: int):
        super().__init__(f"step {step_index} is empty")
        self.step_index = step_index


class ForwardReferenceError(QdmrError):
    def __init__(self, step_index: int, ref: int):
        super().__init__(f"step {step_index} references step {ref} (must be < {step_index})")
        self.step_index = step_index
        self.ref = ref


class MalformedRefError(QdmrError):
    def __init__(self, step_index: int, token: str):
        super().__init__(f"step {step_index} contains malformed reference {token!r}")
        self.step_index = step_index
        self.token = token


def is_ref(token: str) -> bool:
    return _REF_RE.match(token) is not None


def ref_index(token: str) -> int:
    """The step index named by a reference token. Raises ValueError on non-refs."""
    m = _REF_RE.match(token)
    if m is None:
        raise ValueError(f"not a reference token: {token!r}")
    return int(m.group(1))


def ref_token(index: int) -> str:
    return f"{REF_PREFIX}{index}"


def tokenize(text: str) -> list[str]:
    """Whitespace and punctuation splitting; keeps ``#k`` refs, numbers,
    hyphenated and apostrophized words intact."""
    return _TOKEN_RE.findall(text)


@dataclass(frozen=True)
class QdmrStep:
    """One decomposition step: a nonempty token sequence at a 1-based position."""

    tokens: tuple[str, ...]
    index: int

    def __post_init__(self):
        if not self.tokens:
            raise EmptyStepError(self.index)

    @property
    def refs(self) -> tuple[int, ...]:
        """Referenced step indices, in token order, duplicates preserved."""
        return tuple(ref_index(t) for t in self.tokens if is_ref(t))

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def normalized_tokens(self) -> tuple[str, ...]:
        """Tokens with references collapsed to a shared placeholder."""
        return tuple(REF_PLACEHOLDER if is_ref(t) else t for t in self.tokens)


@dataclass(frozen=True)
class Qdmr:
    """An ordered decomposition; the last step's result answers the question."""

    steps: tuple[QdmrStep, ...]
    mode: QdmrMode = QdmrMode.STANDARD

    def __post_init__(self):
        if not self.steps:
            raise QdmrError("a decomposition needs at least one step")
        for step in self.steps:
            for ref in step.refs:
                if ref >= step.index:
                    raise ForwardReferenceError(step.index, ref)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def step_texts(self) -> tuple[str, ...]:
        return tuple(step.text for step in self.steps)


def _canonical_step_tokens(raw: str, step_index: int) -> tuple[str, ...]:
    tokens = tokenize(raw.lower())
    if tokens and tokens[0] == STEP_DELIMITER_WORD:
        tokens = tokens[1:]
    if not tokens:
        raise EmptyStepError(step_index)
    for token in tokens:
        if token.startswith(REF_PREFIX) and not is_ref(token):
            raise MalformedRefError(step_index, token)
        if is_ref(token) and ref_index(token) == 0:
            raise MalformedRefError(step_index, token)
    return tuple(tokens)


def parse_step(text: str, index: int) -> QdmrStep:
    """Canonicalize one step at the given 1-based position; reference
    validity (k < index) is checked against that position."""
    step = QdmrStep(tokens=_canonical_step_tokens(text, index), index=index)
    for ref in step.refs:
        if ref >= index:
            raise ForwardReferenceError(index, ref)
    return step


def parse_qdmr(text: str, mode: QdmrMode = QdmrMode.STANDARD) -> Qdmr:
    """Parse the ``;``/``[SEP]``-separated step list into canonical form.

    Raises EmptyStepError, MalformedRefError, or ForwardReferenceError.
    """
    if not text or not text.strip():
        raise EmptyStepError(1)
    steps = []
    for i, raw in enumerate(_SEPARATOR_RE.split(text), start=1):
        if not raw.strip():
            raise EmptyStepError(i)
        steps.append(QdmrStep(tokens=_canonical_step_tokens(raw, i), index=i))
    return Qdmr(steps=tuple(steps), mode=mode)


def serialize_qdmr(d: Qdmr, separator: str = ";") -> str:
    """Render canonical text; parse_qdmr(serialize_qdmr(d)) == d."""
    if separator not in (";", "[SEP]"):
        raise ValueError(f"unsupported separator {separator!r}")
    rendered = [f"{STEP_DELIMITER_WORD} {step.text}" for step in d.steps]
    if separator == ";":
        return " ;".join(rendered)
    return " [SEP] ".join(rendered)


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    source_dataset: SourceDataset | None = None
    split: Split | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise QdmrError(f"question {self.id!r} has empty text")


def _load_function_word_file(lines: Iterable[str]) -> tuple[str, ...]:
    words = []
    for line in lines:
        entry = line.strip()
        if not entry or entry.startswith("#"):
            continue
        words.append(entry.lower())
    return tuple(words)


def load_function_words(path: str | None = None) -> tuple[str, ...]:
    """Load the closed function-word list (one entry per line, ``#`` comments).

    Without a path, the packaged 66-entry file is used.
    """
    if path is None:
        text = resources.files("qdmr.data").joinpath("function_words.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    return _load_function_word_file(text.splitlines())


def inflections(word: str) -> set[str]:
    """Rule-based English inflection closure of a single lowercase word.

    Suffix rules only (+-s/es, +-ing, +-ed, +-er/est, y->ies); deliberately
    over-generates rather than consulting a morphology resource.
    """
    if not word.isalpha():
        return {word}
    bases = {word}
    for suffix in ("ies", "ing", "est", "ed", "er", "es", "s"):
        if word.endswith(suffix) and len(word) > len(suffix) + 1:
            stem = word[: -len(suffix)]
            bases.add(stem)
            if suffix == "ies":
                bases.add(stem + "y")
            if suffix in ("ing", "ed", "er", "est"):
                bases.add(stem + "e")
    out = set(bases)
    for base in bases:
        out.add(base + "s")
        out.add(base + "es")
        out.add(base + "ed")
        out.add(base + "er")
        out.add(base + "est")
        out.add(base + "ing")
        if base.endswith("e"):
            out.add(base[:-1] + "ing")
            out.add(base + "d")
            out.add(base + "r")
            out.add(base + "st")
        if base.endswith("y") and len(base) > 2:
            out.add(base[:-1] + "ies")
    return out


@dataclass(frozen=True)
class Lexicon:
    """The closed per-question vocabulary allowed in decomposition steps."""

    question_words: frozenset[str]
    function_words: tuple[str, ...]
    ref_tokens: frozenset[str]
    _function_phrases: tuple[tuple[str, ...], ...] = field(init=False, repr=False)
    _function_singles: frozenset[str] = field(init=False, repr=False)

    def __post_init__(self):
        phrases = []
        singles = set()
        for entry in self.function_words:
            parts = tuple(entry.split())
            if len(parts) > 1:
                phrases.append(parts)
            else:
                singles.add(entry)
        phrases.sort(key=len, reverse=True)
        object.__setattr__(self, "_function_phrases", tuple(phrases))
        object.__setattr__(self, "_function_singles", frozenset(singles))

    def allows_word(self, token: str) -> bool:
        return token in self.question_words or token in self._function_singles

    def covered_positions(self, tokens: tuple[str, ...]) -> set[int]:
        """0-based token positions allowed by the lexicon.

        Multi-word function entries cover their full span when the token
        sequence matches (longest phrase first).
        """
        covered: set[int] = set()
        for i, token in enumerate(tokens):
            if token in self.ref_tokens or is_ref(token) or self.allows_word(token):
                covered.add(i)
        for phrase in self._function_phrases:
            width = len(phrase)
            for start in range(len(tokens) - width + 1):
                if tuple(tokens[start : start + width]) == phrase:
                    covered.update(range(start, start + width))
        return covered


@dataclass(frozen=True)
class Violation:
    """A step token outside the lexicon. Positions are 1-based over the
    rendered step including its leading "return" delimiter."""

    token: str
    position: int


def build_lexicon(q: Question, n_max: int = 20, function_words: tuple[str, ...] | None = None) -> Lexicon:
    """Assemble the closed vocabulary for one question: its words plus their
    rule-based inflections, the fixed function words, and ``#1..#n_max``."""
    if function_words is None:
        function_words = load_function_words()
    words: set[str] = set()
    for token in tokenize(q.text.lower()):
        if is_ref(token) or not re.search(r"\w", token):
            continue
        words |= inflections(token)
    refs = frozenset(ref_token(k) for k in range(1, n_max + 1))
    return Lexicon(question_words=frozenset(words), function_words=function_words, ref_tokens=refs)


def check_lexicon(step: QdmrStep, lex: Lexicon) -> list[Violation]:
    """Every step token outside the lexicon, in order; empty iff valid."""
    covered = lex.covered_positions(step.tokens)
    return [
        Violation(token=token, position=i + 2)
        for i, token in enumerate(step.tokens)
        if i not in covered
    ]


def strip_articles(tokens: tuple[str, ...]) -> tuple[str, ...]:
    """Drop leading articles (the/a/an)."""
    i = 0
    while i < len(tokens) and tokens[i] in _ARTICLES:
        i += 1
    return tokens[i:]
