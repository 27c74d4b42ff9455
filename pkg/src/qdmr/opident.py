"""Template-based identification of step operators and pseudo-logical forms.

Each step is matched against the operator templates in a fixed precedence
order (most lexically specific first): BOOLEAN, ARITHMETIC, GROUP,
SUPERLATIVE, COMPARATIVE, AGGREGATE, SORT, DISCARD, INTERSECTION, UNION,
PROJECT, FILTER, SELECT. The first matching template wins, which makes a
(tokens, mode) pair classify deterministically; a reference-free step always
classifies as SELECT.

In high-level mode the merged steps keep their surface shape: ref-free merged
steps are SELECT, a leading reference plus a condition is FILTER, and an
embedded (non-leading) reference is PROJECT regardless of an "of" marker.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from importlib import resources

from qdmr.core import Qdmr, QdmrMode, QdmrStep, is_ref, ref_index, strip_articles


class Operator(Enum):
    SELECT = "SELECT"
    FILTER = "FILTER"
    PROJECT = "PROJECT"
    AGGREGATE = "AGGREGATE"
    GROUP = "GROUP"
    SUPERLATIVE = "SUPERLATIVE"
    COMPARATIVE = "COMPARATIVE"
    UNION = "UNION"
    INTERSECTION = "INTERSECTION"
    DISCARD = "DISCARD"
    SORT = "SORT"
    BOOLEAN = "BOOLEAN"
    ARITHMETIC = "ARITHMETIC"


class OpidentError(Exception):
    pass


class NoTemplateMatchError(OpidentError):
    def __init__(self, step: QdmrStep):
        super().__init__(f"no operator template matches step {step.index}: {step.text!r}")
        self.step = step


class UnknownKeywordError(OpidentError):
    def __init__(self, keyword_class: str, phrase: str):
        super().__init__(f"unknown {keyword_class} keyword {phrase!r}")
        self.keyword_class = keyword_class
        self.phrase = phrase


class ClassificationError(OpidentError):
    """Raised by batch classification; carries every failed (step index, error)."""

    def __init__(self, failures: list[tuple[int, OpidentError]]):
        detail = "; ".join(f"step {i}: {e}" for i, e in failures)
        super().__init__(f"{len(failures)} step(s) failed to classify: {detail}")
        self.failures = failures


@dataclass(frozen=True, eq=True)
class OperatorInstance:
    """A step's identified operator with its reference and constant arguments."""

    op: Operator
    refs: tuple[int, ...] = ()
    constants: tuple[tuple[str, str], ...] = ()

    @property
    def constant_map(self) -> dict[str, str]:
        return dict(self.constants)

    def constant(self, name: str) -> str | None:
        return self.constant_map.get(name)


@dataclass(frozen=True)
class KeywordLexicon:
    """Grounding keyword maps: phrase -> symbol, one map per class."""

    agg_map: tuple[tuple[str, str], ...]
    sup_map: tuple[tuple[str, str], ...]
    com_map: tuple[tuple[str, str], ...]
    ari_map: tuple[tuple[str, str], ...]
    _maps: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        maps = {}
        for name, entries in (
            ("agg", self.agg_map),
            ("sup", self.sup_map),
            ("com", self.com_map),
            ("ari", self.ari_map),
        ):
            table = {}
            for phrase, symbol in entries:
                if phrase in table:
                    raise ValueError(f"duplicate {name} phrase {phrase!r}")
                table[phrase] = symbol
            maps[name] = table
        object.__setattr__(self, "_maps", maps)

    def phrases(self, keyword_class: str) -> list[tuple[str, ...]]:
        """Token tuples of the class's phrases, longest first."""
        table = self._maps[keyword_class]
        return sorted((tuple(p.split()) for p in table), key=len, reverse=True)

    def resolve(self, keyword_class: str, phrase: str) -> str:
        if keyword_class not in self._maps:
            raise UnknownKeywordError(keyword_class, phrase)
        table = self._maps[keyword_class]
        key = " ".join(phrase.lower().split())
        if key not in table:
            raise UnknownKeywordError(keyword_class, phrase)
        return table[key]


def load_keyword_lexicon(path: str | None = None) -> KeywordLexicon:
    """Load the keyword file (``class<TAB>phrase<TAB>symbol`` rows, ``#`` comments)."""
    if path is None:
        text = resources.files("qdmr.data").joinpath("keywords.tsv").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    rows: dict[str, list[tuple[str, str]]] = {"agg": [], "sup": [], "com": [], "ari": []}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            raise ValueError(f"keyword file line {lineno}: expected 3 tab-separated fields")
        cls, phrase, symbol = parts
        if cls not in rows:
            raise ValueError(f"keyword file line {lineno}: unknown class {cls!r}")
        rows[cls].append((phrase.strip().lower(), symbol.strip()))
    return KeywordLexicon(
        agg_map=tuple(rows["agg"]),
        sup_map=tuple(rows["sup"]),
        com_map=tuple(rows["com"]),
        ari_map=tuple(rows["ari"]),
    )


_DEFAULT_LEXICON: KeywordLexicon | None = None


def default_keyword_lexicon() -> KeywordLexicon:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = load_keyword_lexicon()
    return _DEFAULT_LEXICON


def resolve_keyword(keyword_class: str, phrase: str, lexicon: KeywordLexicon | None = None) -> str:
    """Map an aggregate/superlative/comparison/arithmetic phrase to its symbol."""
    if not phrase:
        raise UnknownKeywordError(keyword_class, phrase)
    lex = lexicon or default_keyword_lexicon()
    return lex.resolve(keyword_class, phrase)


_SPELLED_NUMBERS = {"zero": "0", "one": "1", "two": "2", "hundred": "100"}
_NUMBER_RE = re.compile(r"^\d+(?:\.\d+)?$")

_UNION_SEPARATORS = {",", "and", "or"}
_DISCARD_KEYWORDS = (("other", "than"), ("besides",))
_SUP_COMPARISON_FILLER = {"which", "is", "are", "the", "of", ",", "and", "or"}


def parse_number(token: str) -> str | None:
    """Canonical numeric string for a digit or spelled-number token, else None."""
    if _NUMBER_RE.match(token):
        return token
    return _SPELLED_NUMBERS.get(token)


def format_number(value: str) -> str:
    frac = Fraction(value)
    return str(frac.numerator) if frac.denominator == 1 else f"{frac.numerator}/{frac.denominator}"


def _ref_positions(tokens: tuple[str, ...]) -> list[tuple[int, int]]:
    return [(pos, ref_index(t)) for pos, t in enumerate(tokens) if is_ref(t)]


def _find_phrase(tokens: tuple[str, ...], phrase: tuple[str, ...], start: int = 0) -> int:
    """Index of the first occurrence of the phrase token sequence, or -1."""
    width = len(phrase)
    for i in range(start, len(tokens) - width + 1):
        if tuple(tokens[i : i + width]) == phrase:
            return i
    return -1


def _scan_keyword(
    tokens: tuple[str, ...], keyword_class: str, lexicon: KeywordLexicon, start: int = 0, end: int | None = None
) -> tuple[int, int, str] | None:
    """Leftmost longest keyword span of the class in tokens[start:end].

    Returns (span_start, span_end, phrase) with end exclusive, or None.
    """
    window = tokens[: end if end is not None else len(tokens)]
    best: tuple[int, int, str] | None = None
    for phrase in lexicon.phrases(keyword_class):
        pos = _find_phrase(window, phrase, start)
        if pos < 0:
            continue
        span = (pos, pos + len(phrase), " ".join(phrase))
        if best is None or span[0] < best[0] or (span[0] == best[0] and span[1] > best[1]):
            best = span
    return best


def _non_ref_text(tokens: tuple[str, ...], skip_positions: set[int] = frozenset()) -> str:
    return " ".join(
        t for i, t in enumerate(tokens) if not is_ref(t) and i not in skip_positions
    )


def _match_boolean(tokens, refs, mode, lexicon):
    if not refs or tokens[0] not in ("if", "is"):
        return None
    w = " ".join(t for t in tokens[1:] if not is_ref(t))
    if not w:
        return None
    return OperatorInstance(
        op=Operator.BOOLEAN,
        refs=tuple(k for _, k in refs),
        constants=(("w", w),),
    )


def _match_arithmetic(tokens, refs, mode, lexicon):
    # Shape: the [ari] of [ref1] and [ref2]; refs joined only by and/commas,
    # which keeps single-ref "sum of #k" (AGGREGATE) and "sum ... for each"
    # (GROUP) out of reach.
    if len(refs) < 2:
        return None
    span = _scan_keyword(tokens, "ari", lexicon)
    if span is None or refs[0][0] < span[1]:
        return None
    for (p_prev, _), (p_next, _) in zip(refs, refs[1:]):
        if any(t not in ("and", ",") for t in tokens[p_prev + 1 : p_next]):
            return None
    return OperatorInstance(
        op=Operator.ARITHMETIC,
        refs=tuple(k for _, k in refs),
        constants=(("w_ari", span[2]),),
    )


def _match_group(tokens, refs, mode, lexicon):
    anchor = _find_phrase(tokens, ("for", "each"))
    if anchor < 0:
        return None
    agg = _scan_keyword(tokens, "agg", lexicon, end=anchor)
    if agg is None:
        return None
    values = [k for pos, k in refs if pos < anchor]
    keys = [k for pos, k in refs if pos >= anchor + 2]
    if not values or not keys:
        return None
    return OperatorInstance(
        op=Operator.GROUP,
        refs=(values[-1], keys[0]),
        constants=(("w_agg", agg[2]),),
    )


def _match_superlative(tokens, refs, mode, lexicon):
    # Standard shape: [ref1] where [ref2] is [sup].
    if len(refs) == 2:
        (p1, r1), (p2, r2) = refs
        where = _find_phrase(tokens, ("where",))
        if p1 < where < p2:
            span = _scan_keyword(tokens, "sup", lexicon, start=p2 + 1)
            com = _scan_keyword(tokens, "com", lexicon, start=p2 + 1)
            # A sup word embedded in a longer comparison phrase ("at least")
            # belongs to COMPARATIVE.
            overlapped = com is not None and span is not None and (
                com[0] < span[1] and span[0] < com[1] and (com[1] - com[0]) > (span[1] - span[0])
            )
            if span is not None and not overlapped:
                return OperatorInstance(
                    op=Operator.SUPERLATIVE, refs=(r1, r2), constants=(("w_sup", span[2]),)
                )
    # Merged comparison shape: [which is] the [sup] of [ref1] , [ref2] ...
    if len(refs) >= 2:
        span = _scan_keyword(tokens, "sup", lexicon)
        if span is not None and refs[0][0] > span[1]:
            span_positions = set(range(span[0], span[1]))
            filler = [
                t
                for i, t in enumerate(tokens)
                if i not in span_positions and not is_ref(t)
            ]
            if all(t in _SUP_COMPARISON_FILLER for t in filler):
                return OperatorInstance(
                    op=Operator.SUPERLATIVE,
                    refs=tuple(k for _, k in refs),
                    constants=(("w_sup", span[2]),),
                )
    return None


def _match_comparative(tokens, refs, mode, lexicon):
    if len(refs) != 2:
        return None
    (p1, r1), (p2, r2) = refs
    where = _find_phrase(tokens, ("where",))
    if not (p1 < where < p2):
        return None
    span = _scan_keyword(tokens, "com", lexicon, start=p2 + 1)
    if span is None:
        return None
    for token in tokens[span[1] :]:
        number = parse_number(token)
        if number is not None:
            return OperatorInstance(
                op=Operator.COMPARATIVE,
                refs=(r1, r2),
                constants=(("w_com", span[2]), ("n", number)),
            )
    return None


def _match_aggregate(tokens, refs, mode, lexicon):
    if len(refs) != 1:
        return None
    stripped = strip_articles(tokens)
    span = _scan_keyword(stripped, "agg", lexicon)
    if span is None or span[0] != 0:
        return None
    rest = list(stripped[span[1] :])
    if rest and rest[0] == "of":
        rest = rest[1:]
    if len(rest) != 1 or not is_ref(rest[0]):
        return None
    return OperatorInstance(
        op=Operator.AGGREGATE, refs=(refs[0][1],), constants=(("w_agg", span[2]),)
    )


def _match_sort(tokens, refs, mode, lexicon):
    anchor = _find_phrase(tokens, ("sorted", "by"))
    if anchor < 0:
        return None
    before = [k for pos, k in refs if pos < anchor]
    after = [k for pos, k in refs if pos >= anchor + 2]
    if not before or not after:
        return None
    return OperatorInstance(op=Operator.SORT, refs=tuple(before + after))


def _match_discard(tokens, refs, mode, lexicon):
    for keyword in _DISCARD_KEYWORDS:
        anchor = _find_phrase(tokens, keyword)
        if anchor < 0:
            continue
        before = [k for pos, k in refs if pos < anchor]
        after = [k for pos, k in refs if pos >= anchor + len(keyword)]
        if before and after:
            return OperatorInstance(op=Operator.DISCARD, refs=(before[-1], after[0]))
    return None


def _match_intersection(tokens, refs, mode, lexicon):
    anchor = _find_phrase(tokens, ("both",))
    if anchor < 0:
        return None
    after = [k for pos, k in refs if pos > anchor]
    if len(after) < 2 or any(pos <= anchor for pos, _ in refs):
        return None
    head = list(tokens[:anchor])
    if head and head[-1] == "in":
        head = head[:-1]
    w = " ".join(head)
    if not w:
        return None
    return OperatorInstance(
        op=Operator.INTERSECTION, refs=tuple(after), constants=(("w", w),)
    )


def _match_union(tokens, refs, mode, lexicon):
    if len(refs) < 2:
        return None
    if all(is_ref(t) or t in _UNION_SEPARATORS for t in tokens):
        return OperatorInstance(op=Operator.UNION, refs=tuple(k for _, k in refs))
    return None


def _match_project(tokens, refs, mode, lexicon):
    if len(refs) != 1:
        return None
    pos, k = refs[0]
    stripped = strip_articles(tokens)
    if pos == 0 or (stripped and is_ref(stripped[0])):
        return None
    if mode is QdmrMode.STANDARD and tokens[pos - 1] != "of":
        return None
    return OperatorInstance(
        op=Operator.PROJECT, refs=(k,), constants=(("w", _non_ref_text(tokens)),)
    )


def _match_filter(tokens, refs, mode, lexicon):
    if not refs:
        return None
    first_pos = refs[0][0]
    w = " ".join(t for i, t in enumerate(tokens) if i != first_pos)
    if not w.strip():
        return None
    return OperatorInstance(
        op=Operator.FILTER, refs=tuple(k for _, k in refs), constants=(("w", w),)
    )


def _match_select(tokens, refs, mode, lexicon):
    if refs:
        return None
    return OperatorInstance(op=Operator.SELECT, constants=(("w", " ".join(tokens)),))


_MATCHERS = (
    _match_boolean,
    _match_arithmetic,
    _match_group,
    _match_superlative,
    _match_comparative,
    _match_aggregate,
    _match_sort,
    _match_discard,
    _match_intersection,
    _match_union,
    _match_project,
    _match_filter,
    _match_select,
)


def identify_operator(
    step: QdmrStep, mode: QdmrMode = QdmrMode.STANDARD, lexicon: KeywordLexicon | None = None
) -> OperatorInstance:
    """Identify the step's operator and arguments by template precedence.

    Raises NoTemplateMatchError when nothing applies (e.g. a bare reference
    with no condition).
    """
    lex = lexicon or default_keyword_lexicon()
    refs = _ref_positions(step.tokens)
    for matcher in _MATCHERS:
        instance = matcher(step.tokens, refs, mode, lex)
        if instance is not None:
            return instance
    raise NoTemplateMatchError(step)


def classify_qdmr(
    d: Qdmr, mode: QdmrMode | None = None, lexicon: KeywordLexicon | None = None
) -> list[OperatorInstance]:
    """Elementwise identify_operator over the decomposition.

    Raises ClassificationError carrying every failed step.
    """
    mode = mode or d.mode
    results: list[OperatorInstance] = []
    failures: list[tuple[int, OpidentError]] = []
    for step in d.steps:
        try:
            results.append(identify_operator(step, mode, lexicon))
        except OpidentError as err:
            failures.append((step.index, err))
    if failures:
        raise ClassificationError(failures)
    return results


_RESOLVED_CONSTANT_CLASSES = {"w_agg": "agg", "w_sup": "sup", "w_com": "com", "w_ari": "ari"}


def serialize_instance(inst: OperatorInstance, lexicon: KeywordLexicon | None = None) -> str:
    """Canonical node syntax ``OP[constants](refs)``.

    Aggregate/superlative/comparison/arithmetic keywords are rendered as their
    resolved symbols; free phrase constants are rendered verbatim.
    """
    lex = lexicon or default_keyword_lexicon()
    rendered: list[str] = []
    for name, value in inst.constants:
        if name in _RESOLVED_CONSTANT_CLASSES:
            rendered.append(resolve_keyword(_RESOLVED_CONSTANT_CLASSES[name], value, lex))
        elif name == "n":
            rendered.append(format_number(value))
        else:
            rendered.append(value)
    refs = ",".join(f"#{k}" for k in inst.refs)
    return f"{inst.op.value}[{','.join(rendered)}]({refs})"


@dataclass(frozen=True)
class PseudoLogicalForm:
    """One operator node per step, with the canonical line-per-node rendering."""

    nodes: tuple[tuple[int, OperatorInstance], ...]
    serialized: tuple[str, ...]

    @property
    def text(self) -> str:
        return "\n".join(self.serialized)


def compile_pseudo_lf(
    d: Qdmr, mode: QdmrMode | None = None, lexicon: KeywordLexicon | None = None
) -> PseudoLogicalForm:
    """Compile every step into its pseudo-logical form node, atomically.

    Propagates ClassificationError (with step indices) if any step fails
    identification or keyword resolution.
    """
    lex = lexicon or default_keyword_lexicon()
    instances = classify_qdmr(d, mode, lex)
    serialized: list[str] = []
    failures: list[tuple[int, OpidentError]] = []
    for step, inst in zip(d.steps, instances):
        try:
            serialized.append(serialize_instance(inst, lex))
        except OpidentError as err:
            failures.append((step.index, err))
    if failures:
        raise ClassificationError(failures)
    return PseudoLogicalForm(
        nodes=tuple((step.index, inst) for step, inst in zip(d.steps, instances)),
        serialized=tuple(serialized),
    )
