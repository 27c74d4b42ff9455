from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from qdmr.core import QdmrMode, SourceDataset, Split
from qdmr.dataset import (
    DatasetError,
    EmptyCorpusError,
    RejectQuotaError,
    compile_rate,
    cross_check_operators,
    length_distribution,
    load_break_csv,
    operator_prevalence,
    render_length_table,
    render_operator_table,
)
from qdmr.opident import Operator


def fixture_path() -> str:
    return str(resources.files("qdmr.data").joinpath("break_fixture_50.csv"))


# Derived by construction of the shipped fixture (tests/make_fixture.py
# asserts the classifier agrees with every row's intended operators).
EXPECTED_LENGTHS = {"1-2": 0.16, "3-4": 0.44, "5-6": 0.24, "7-8": 0.10, "9+": 0.06}
EXPECTED_PREVALENCE = {
    Operator.SELECT: 1.00,
    Operator.PROJECT: 0.68,
    Operator.FILTER: 0.28,
    Operator.AGGREGATE: 0.28,
    Operator.GROUP: 0.20,
    Operator.SUPERLATIVE: 0.18,
    Operator.COMPARATIVE: 0.10,
    Operator.UNION: 0.08,
    Operator.BOOLEAN: 0.08,
    Operator.ARITHMETIC: 0.08,
    Operator.INTERSECTION: 0.06,
    Operator.SORT: 0.06,
    Operator.DISCARD: 0.04,
}


@pytest.fixture(scope="module")
def fixture_records():
    return load_break_csv(fixture_path()).records


def test_fixture_loads_cleanly(fixture_records):
    result = load_break_csv(fixture_path())
    assert len(result.records) == 50
    assert result.rejects == []


def test_fixture_metadata(fixture_records):
    by_id = {r.question.id: r for r in fixture_records}
    assert by_id["ATIS_train_1"].question.source_dataset is SourceDataset.ATIS
    assert by_id["ATIS_train_1"].question.split is Split.TRAIN
    assert by_id["GEO_test_23"].question.split is Split.TEST
    assert all(r.mode is QdmrMode.STANDARD for r in fixture_records)


def test_well_formed_rows_fixture(tmp_path):
    path = tmp_path / "mini.csv"
    path.write_text(
        "question_id,question_text,decomposition,operators,split\n"
        'A_train_1,q one,return flights,SELECT,train\n'
        'A_train_2,q two,"return flights ;return #1 from denver",SELECT;FILTER,train\n'
        'A_dev_3,q three,return colorado,SELECT,dev\n',
        encoding="utf-8",
    )
    result = load_break_csv(str(path))
    assert len(result.records) == 3
    assert result.rejects == []


def test_forward_reference_row_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    rows = [f'A_train_{i},q,return flights,SELECT,train' for i in range(1, 40)]
    rows.append('A_train_99,q bad,"return a ;return #2",SELECT,train')
    path.write_text(
        "question_id,question_text,decomposition,operators,split\n" + "\n".join(rows) + "\n",
        encoding="utf-8",
    )
    result = load_break_csv(str(path))
    assert len(result.rejects) == 1
    assert result.rejects[0].raw["question_id"] == "A_train_99"
    assert "references step" in result.rejects[0].reason


def test_reject_quota_aborts(tmp_path):
    path = tmp_path / "broken.csv"
    path.write_text(
        "question_id,question_text,decomposition,operators,split\n"
        'A_train_1,q,return flights,SELECT,train\n'
        'A_train_2,q,"return a ;return #5",,train\n',
        encoding="utf-8",
    )
    with pytest.raises(RejectQuotaError):
        load_break_csv(str(path))


def test_high_suffix_routes_mode(tmp_path):
    path = tmp_path / "rows.csv"
    path.write_text(
        "question_id,question_text,decomposition,operators,split\n"
        'HOTPOTQA_train_1_high,q,return the actress that played pearl,,train\n'
        'ATIS_train_2,q,return flights,,train\n',
        encoding="utf-8",
    )
    result = load_break_csv(str(path))
    modes = {r.question.id: r.mode for r in result.records}
    assert modes["HOTPOTQA_train_1_high"] is QdmrMode.HIGH_LEVEL
    assert modes["ATIS_train_2"] is QdmrMode.STANDARD


def test_missing_columns_rejected(tmp_path):
    path = tmp_path / "cols.csv"
    path.write_text("question_id,split\nA_1,train\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        load_break_csv(str(path))


def test_missing_file():
    with pytest.raises(DatasetError):
        load_break_csv("/nonexistent/break.csv")


def test_select_prevalence_is_total(fixture_records):
    prevalence = operator_prevalence(fixture_records)
    assert prevalence[Operator.SELECT] == 1.0


def test_fixture_prevalence_matches_construction(fixture_records):
    prevalence = operator_prevalence(fixture_records)
    for op, expected in EXPECTED_PREVALENCE.items():
        assert prevalence[op] == pytest.approx(expected, abs=1e-12), op


def test_single_comparative_corpus_prevalence():
    import tempfile, os

    text = (
        "question_id,question_text,decomposition,operators,split\n"
        'A_train_1,q,"return authors ;return papers of #1 '
        ';return the number of #2 for each of #1 ;return #1 where #3 is more than 500",,train\n'
    )
    with tempfile.NamedTemporaryFile("w", suffix=".csv", delete=False) as f:
        f.write(text)
        path = f.name
    try:
        records = load_break_csv(path).records
        prevalence = operator_prevalence(records)
        expected_full = {Operator.SELECT, Operator.PROJECT, Operator.GROUP, Operator.COMPARATIVE}
        for op in Operator:
            assert prevalence[op] == (1.0 if op in expected_full else 0.0)
    finally:
        os.unlink(path)


def test_empty_corpus_errors():
    with pytest.raises(EmptyCorpusError):
        operator_prevalence([])
    with pytest.raises(EmptyCorpusError):
        length_distribution([])


def test_length_distribution_fixture(fixture_records):
    distribution = length_distribution(fixture_records)
    assert distribution == pytest.approx(EXPECTED_LENGTHS, abs=1e-12)
    assert abs(sum(distribution.values()) - 1.0) <= 1e-9


def test_length_distribution_two_extremes(tmp_path):
    path = tmp_path / "two.csv"
    path.write_text(
        "question_id,question_text,decomposition,operators,split\n"
        'A_1,q,"return a ;return b of #1",,train\n'
        'A_2,q,"' + " ;".join(["return w0"] + [f"return x{i} of #{i}" for i in range(1, 9)]) + '",,train\n',
        encoding="utf-8",
    )
    records = load_break_csv(str(path)).records
    distribution = length_distribution(records)
    assert distribution["1-2"] == 0.5
    assert distribution["9+"] == 0.5


def test_fixture_fully_compiles(fixture_records):
    assert compile_rate(fixture_records) == 1.0


def test_declared_operators_cross_check(fixture_records):
    assert cross_check_operators(fixture_records) == []


def test_cross_check_reports_mismatch(tmp_path):
    path = tmp_path / "mismatch.csv"
    path.write_text(
        "question_id,question_text,decomposition,operators,split\n"
        'A_1,q,return flights,FILTER,train\n',
        encoding="utf-8",
    )
    records = load_break_csv(str(path)).records
    mismatches = cross_check_operators(records)
    assert mismatches == [("A_1", ("FILTER",), ("SELECT",))]


def test_stats_tables_render(fixture_records):
    table = render_operator_table(operator_prevalence(fixture_records))
    assert table.splitlines()[0] == "operator\tprevalence"
    assert "SELECT\t100.0%" in table
    lengths = render_length_table(length_distribution(fixture_records))
    assert "3-4\t44.0%" in lengths
