"""Ingest decomposition CSV files and compute corpus statistics.

The loader is strict about accounting: every input row lands either in the
accepted records or in the reject report with its row number and reason, and
loading aborts when more than 5% of rows reject. Declared operator columns
are never trusted; the template classifier is the authority and mismatches
are surfaced by cross_check_operators.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

from qdmr.core import Qdmr, QdmrError, QdmrMode, Question, SourceDataset, Split, parse_qdmr
from qdmr.opident import ClassificationError, Operator, classify_qdmr

REJECT_QUOTA = 0.05

LENGTH_BUCKETS = ("1-2", "3-4", "5-6", "7-8", "9+")


class DatasetError(Exception):
    pass


class EmptyCorpusError(DatasetError):
    pass


class RejectQuotaError(DatasetError):
    def __init__(self, rejected: int, total: int):
        super().__init__(
            f"{rejected}/{total} rows rejected, above the {REJECT_QUOTA:.0%} abort quota"
        )
        self.rejected = rejected
        self.total = total


@dataclass(frozen=True)
class BreakRecord:
    question: Question
    decomposition: Qdmr
    mode: QdmrMode
    declared_operators: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Reject:
    row: int
    reason: str
    raw: dict


@dataclass
class LoadResult:
    records: list[BreakRecord] = field(default_factory=list)
    rejects: list[Reject] = field(default_factory=list)

    @property
    def total_rows(self) -> int:
        return len(self.records) + len(self.rejects)


_HEADER_ALIASES = {
    "question_id": "question_id",
    "id": "question_id",
    "question_text": "question_text",
    "question": "question_text",
    "decomposition": "decomposition",
    "qdmr": "decomposition",
    "operators": "operators",
    "split": "split",
}

_DATASET_PREFIXES = {
    "academic": SourceDataset.ACADEMIC,
    "atis": SourceDataset.ATIS,
    "geo": SourceDataset.GEOQUERY,
    "geoquery": SourceDataset.GEOQUERY,
    "spider": SourceDataset.SPIDER,
    "clevr": SourceDataset.CLEVR,
    "nlvr2": SourceDataset.NLVR2,
    "comqa": SourceDataset.COMQA,
    "cwq": SourceDataset.CWQ,
    "drop": SourceDataset.DROP,
    "hotpot": SourceDataset.HOTPOTQA,
    "hotpotqa": SourceDataset.HOTPOTQA,
}


def _normalize_headers(fieldnames: list[str]) -> dict[str, str]:
    mapping = {}
    for name in fieldnames:
        key = name.strip().lower()
        if key in _HEADER_ALIASES:
            mapping[_HEADER_ALIASES[key]] = name
    missing = {"question_id", "question_text", "decomposition"} - set(mapping)
    if missing:
        raise DatasetError(f"CSV is missing required columns: {sorted(missing)}")
    return mapping


def _infer_source(question_id: str) -> SourceDataset | None:
    prefix = question_id.split("_", 1)[0].lower()
    return _DATASET_PREFIXES.get(prefix)


def _infer_split(question_id: str, declared: str | None) -> Split | None:
    if declared:
        try:
            return Split(declared.strip().lower())
        except ValueError:
            return None
    for part in question_id.lower().split("_"):
        if part in ("train", "dev", "test"):
            return Split(part)
    return None


def _infer_mode(question_id: str, path: str) -> QdmrMode:
    # The high-level files tag either the id ("..._high") or the filename.
    basename = os.path.basename(path).lower()
    if question_id.lower().endswith("_high") or "high" in basename:
        return QdmrMode.HIGH_LEVEL
    return QdmrMode.STANDARD


def load_break_csv(path: str, mode: QdmrMode | None = None) -> LoadResult:
    """Parse a decomposition CSV. Malformed rows go to the reject report;
    loading aborts (RejectQuotaError) past the 5% quota."""
    try:
        handle = open(path, encoding="utf-8", newline="")
    except OSError as err:
        raise DatasetError(f"cannot read {path}: {err}") from err
    result = LoadResult()
    with handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise DatasetError(f"{path} has no header row")
        columns = _normalize_headers(list(reader.fieldnames))
        for row_number, row in enumerate(reader, start=2):
            raw = {k: (v or "") for k, v in row.items() if k is not None}
            question_id = raw.get(columns["question_id"], "").strip()
            question_text = raw.get(columns["question_text"], "").strip()
            decomposition_text = raw.get(columns["decomposition"], "").strip()
            row_mode = mode or _infer_mode(question_id, path)
            try:
                if not question_id:
                    raise QdmrError("missing question id")
                if not question_text:
                    raise QdmrError("missing question text")
                decomposition = parse_qdmr(decomposition_text, row_mode)
                question = Question(
                    id=question_id,
                    text=question_text,
                    source_dataset=_infer_source(question_id),
                    split=_infer_split(question_id, raw.get(columns.get("split", ""), "")),
                )
            except QdmrError as err:
                result.rejects.append(Reject(row=row_number, reason=str(err), raw=raw))
                continue
            declared = None
            if "operators" in columns and raw.get(columns["operators"], "").strip():
                declared = tuple(
                    op.strip().upper()
                    for op in raw[columns["operators"]].split(";")
                    if op.strip()
                )
            result.records.append(
                BreakRecord(
                    question=question,
                    decomposition=decomposition,
                    mode=row_mode,
                    declared_operators=declared,
                )
            )
    if result.total_rows and len(result.rejects) / result.total_rows > REJECT_QUOTA:
        raise RejectQuotaError(len(result.rejects), result.total_rows)
    return result


def classify_records(records: list[BreakRecord]) -> tuple[list[tuple[BreakRecord, list]], list[tuple[BreakRecord, ClassificationError]]]:
    """Classify each record's steps; returns (classified, failures)."""
    classified = []
    failures = []
    for record in records:
        try:
            classified.append((record, classify_qdmr(record.decomposition, record.mode)))
        except ClassificationError as err:
            failures.append((record, err))
    return classified, failures


def operator_prevalence(records: list[BreakRecord]) -> dict[Operator, float]:
    """Fraction of decompositions containing each operator at least once."""
    if not records:
        raise EmptyCorpusError("no records")
    classified, _ = classify_records(records)
    if not classified:
        raise EmptyCorpusError("no record classified successfully")
    counts = {op: 0 for op in Operator}
    for _, instances in classified:
        for op in {inst.op for inst in instances}:
            counts[op] += 1
    return {op: counts[op] / len(classified) for op in Operator}


def compile_rate(records: list[BreakRecord]) -> float:
    """Fraction of decompositions whose steps all classify into operators."""
    if not records:
        raise EmptyCorpusError("no records")
    classified, _ = classify_records(records)
    return len(classified) / len(records)


def length_bucket(n_steps: int) -> str:
    if n_steps <= 2:
        return "1-2"
    if n_steps <= 4:
        return "3-4"
    if n_steps <= 6:
        return "5-6"
    if n_steps <= 8:
        return "7-8"
    return "9+"


def length_distribution(records: list[BreakRecord]) -> dict[str, float]:
    """Bucketed fractions over decomposition lengths; sums to 1."""
    if not records:
        raise EmptyCorpusError("no records")
    counts = {bucket: 0 for bucket in LENGTH_BUCKETS}
    for record in records:
        counts[length_bucket(len(record.decomposition))] += 1
    return {bucket: counts[bucket] / len(records) for bucket in LENGTH_BUCKETS}


def cross_check_operators(records: list[BreakRecord]) -> list[tuple[str, tuple[str, ...], tuple[str, ...]]]:
    """Mismatches between declared operator columns and the classifier:
    (question id, declared, classified). Declared columns are reported
    against, never trusted."""
    mismatches = []
    classified, _ = classify_records(records)
    for record, instances in classified:
        if record.declared_operators is None:
            continue
        computed = tuple(inst.op.value for inst in instances)
        if computed != record.declared_operators:
            mismatches.append((record.question.id, record.declared_operators, computed))
    return mismatches


def render_operator_table(prevalence: dict[Operator, float]) -> str:
    """TSV mirroring the operator-prevalence table, highest first."""
    lines = ["operator\tprevalence"]
    ordered = sorted(prevalence.items(), key=lambda kv: (-kv[1], kv[0].value))
    for op, fraction in ordered:
        lines.append(f"{op.value}\t{fraction:.1%}")
    return "\n".join(lines)


def render_length_table(distribution: dict[str, float]) -> str:
    lines = ["steps\tfraction"]
    for bucket in LENGTH_BUCKETS:
        lines.append(f"{bucket}\t{distribution[bucket]:.1%}")
    return "\n".join(lines)
