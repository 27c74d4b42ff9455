from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from qdmr.core import Qdmr, QdmrMode, QdmrStep, parse_qdmr
from qdmr.opident import (
    ClassificationError,
    NoTemplateMatchError,
    Operator,
    UnknownKeywordError,
    classify_qdmr,
    compile_pseudo_lf,
    identify_operator,
    resolve_keyword,
)

HIGH = QdmrMode.HIGH_LEVEL


def step(text: str, index: int = 9) -> QdmrStep:
    """Build a lone canonical step with a synthetic (late) index."""
    from qdmr.core import parse_step

    return parse_step(text, index)


def ident(text: str, mode: QdmrMode = QdmrMode.STANDARD):
    return identify_operator(step(text), mode)


def test_select_touchdowns():
    inst = ident("return touchdowns")
    assert inst.op is Operator.SELECT
    assert inst.refs == ()
    assert inst.constant("w") == "touchdowns"


def test_group_number_for_each():
    inst = ident("return the number of #2 for each #1")
    assert inst.op is Operator.GROUP
    assert inst.refs == (2, 1)
    assert inst.constant("w_agg") == "number of"


def test_group_for_each_of():
    inst = ident("return the number of #2 for each of #1")
    assert inst.op is Operator.GROUP
    assert inst.refs == (2, 1)


def test_comparative_more_than():
    inst = ident("return #1 where #3 is more than 500")
    assert inst.op is Operator.COMPARATIVE
    assert inst.refs == (1, 3)
    assert inst.constant("w_com") == "more than"
    assert inst.constant("n") == "500"


def test_comparative_spelled_number():
    inst = ident("return #1 where #2 is at least two")
    assert inst.op is Operator.COMPARATIVE
    assert inst.constant("n") == "2"


def test_union_ref_list():
    inst = ident("return #4 , #5 , #3")
    assert inst.op is Operator.UNION
    assert inst.refs == (4, 5, 3)


def test_boolean_same_as():
    inst = ident("return if #3 is the same as #4")
    assert inst.op is Operator.BOOLEAN
    assert inst.refs == (3, 4)
    assert inst.constant("w") == "is the same as"


def test_aggregate_number_of():
    inst = ident("return the number of #2")
    assert inst.op is Operator.AGGREGATE
    assert inst.refs == (2,)
    assert inst.constant("w_agg") == "number of"


def test_superlative_where_highest():
    inst = ident("return #2 where #3 is highest")
    assert inst.op is Operator.SUPERLATIVE
    assert inst.refs == (2, 3)
    assert inst.constant("w_sup") == "highest"


def test_superlative_merged_comparison():
    inst = ident("return which is the lowest of #1 , #2", HIGH)
    assert inst.op is Operator.SUPERLATIVE
    assert inst.refs == (1, 2)
    assert inst.constant("w_sup") == "lowest"


def test_arithmetic_difference():
    inst = ident("return the difference of #3 and #4")
    assert inst.op is Operator.ARITHMETIC
    assert inst.refs == (3, 4)
    assert inst.constant("w_ari") == "difference"


def test_arithmetic_does_not_steal_group():
    assert ident("return the sum of #2 for each #1").op is Operator.GROUP


def test_sort():
    inst = ident("return #2 sorted by #3")
    assert inst.op is Operator.SORT
    assert inst.refs == (2, 3)


def test_discard():
    inst = ident("return #1 besides #2")
    assert inst.op is Operator.DISCARD
    assert inst.refs == (1, 2)


def test_intersection():
    inst = ident("return parties in both #2 and #3")
    assert inst.op is Operator.INTERSECTION
    assert inst.refs == (2, 3)
    assert inst.constant("w") == "parties"


def test_project_of_ref():
    inst = ident("return the head coach of #1")
    assert inst.op is Operator.PROJECT
    assert inst.refs == (1,)


def test_filter_leading_ref():
    inst = ident("return #1 from toronto")
    assert inst.op is Operator.FILTER
    assert inst.refs == (1,)
    assert inst.constant("w") == "from toronto"


def test_high_level_bridge_is_project():
    inst = ident("return sitcom that #1 acted as a mother in", HIGH)
    assert inst.op is Operator.PROJECT
    assert inst.refs == (1,)


def test_high_level_leading_ref_is_filter():
    inst = ident("return #1 that plays its home matches at anfield", HIGH)
    assert inst.op is Operator.FILTER


def test_high_level_ref_free_merged_step_is_select():
    text = "return the actress that played pearl gallagher on the tv sitcom different strokes"
    assert ident(text, HIGH).op is Operator.SELECT


def test_standard_embedded_ref_without_of_is_filter():
    assert ident("return flights from #1").op is Operator.FILTER


def test_no_template_match_for_bare_ref():
    with pytest.raises(NoTemplateMatchError):
        ident("return #1")


def test_resolve_keyword_examples():
    assert resolve_keyword("agg", "number of") == "count"
    assert resolve_keyword("sup", "highest") == "argmax"
    assert resolve_keyword("ari", "difference") == "-"
    with pytest.raises(UnknownKeywordError):
        resolve_keyword("com", "sideways of")
    with pytest.raises(UnknownKeywordError):
        resolve_keyword("agg", "")


TABLE_ROWS = [
    ("Select", "return touchdowns ;return the number of #1", 1, Operator.SELECT),
    (
        "Filter",
        "return flights ;return #1 from toronto ;return #2 to san diego",
        2,
        Operator.FILTER,
    ),
    (
        "Project",
        "return the los angeles lakers ;return the head coach of #1",
        2,
        Operator.PROJECT,
    ),
    (
        "Aggregate",
        "return colorado ;return border states of #1 ;return the number of #2",
        3,
        Operator.AGGREGATE,
    ),
    (
        "Group",
        "return clubs ;return female students of #1 ;return the number of #2 for each #1",
        3,
        Operator.GROUP,
    ),
    (
        "Superlative",
        "return papers ;return keywords of #1 ;return the number of #1 for each #2 "
        ";return #2 where #3 is highest",
        4,
        Operator.SUPERLATIVE,
    ),
    (
        "Comparative",
        "return authors ;return papers of #1 ;return the number of #2 for each of #1 "
        ";return #1 where #3 is more than 500",
        4,
        Operator.COMPARATIVE,
    ),
    (
        "Union",
        "return the president ;return the vice-president ;return #1 , #2",
        3,
        Operator.UNION,
    ),
    (
        "Intersection",
        "return representatives ;return #1 in new york state ;return #1 in pennsylvania state "
        ";return parties in both #2 and #3",
        4,
        Operator.INTERSECTION,
    ),
    (
        "Discard",
        "return professors ;return #1 playing canoeing ;return #1 besides #2",
        3,
        Operator.DISCARD,
    ),
    (
        "Sort",
        "return students ;return addresses of #1 ;return monthly rental of #2 "
        ";return #2 sorted by #3",
        4,
        Operator.SORT,
    ),
    (
        "Boolean",
        "return scott derrickson ;return ed wood ;return the nationality of #1 "
        ";return the nationality of #2 ;return if #3 is the same as #4",
        5,
        Operator.BOOLEAN,
    ),
    (
        "Arithmetic",
        "return red objects ;return blue objects ;return the number of #1 "
        ";return the number of #2 ;return the difference of #3 and #4",
        5,
        Operator.ARITHMETIC,
    ),
]


@pytest.mark.parametrize("name,text,highlight,expected", TABLE_ROWS, ids=[r[0] for r in TABLE_ROWS])
def test_operator_golden_rows(name, text, highlight, expected):
    d = parse_qdmr(text)
    ops = classify_qdmr(d)
    assert ops[highlight - 1].op is expected


def test_classify_intersection_row_sequence():
    d = parse_qdmr(
        "return representatives ;return #1 in new york state ;return #1 in pennsylvania state "
        ";return parties in both #2 and #3"
    )
    assert [i.op for i in classify_qdmr(d)] == [
        Operator.SELECT,
        Operator.FILTER,
        Operator.FILTER,
        Operator.INTERSECTION,
    ]


def test_classify_sort_row_sequence():
    d = parse_qdmr(
        "return students ;return addresses of #1 ;return monthly rental of #2 "
        ";return #2 sorted by #3"
    )
    assert [i.op for i in classify_qdmr(d)] == [
        Operator.SELECT,
        Operator.PROJECT,
        Operator.PROJECT,
        Operator.SORT,
    ]


def test_classify_single_select():
    assert [i.op for i in classify_qdmr(parse_qdmr("return colorado"))] == [Operator.SELECT]


def test_classify_collects_failures():
    d = parse_qdmr("return a ;return #1")
    with pytest.raises(ClassificationError) as exc:
        classify_qdmr(d)
    assert [i for i, _ in exc.value.failures] == [2]


def test_compile_comparative_row():
    d = parse_qdmr(
        "return authors ;return papers of #1 ;return the number of #2 for each of #1 "
        ";return #1 where #3 is more than 500"
    )
    lf = compile_pseudo_lf(d)
    assert lf.serialized == (
        "SELECT[authors]()",
        "PROJECT[papers of](#1)",
        "GROUP[count](#2,#1)",
        "COMPARATIVE[>,500](#1,#3)",
    )


def test_compile_single_select():
    lf = compile_pseudo_lf(parse_qdmr("return colorado"))
    assert lf.serialized == ("SELECT[colorado]()",)


def test_compile_fails_atomically():
    with pytest.raises(ClassificationError):
        compile_pseudo_lf(parse_qdmr("return a ;return #1 ;return #2"))


def test_first_step_always_select_on_table_rows():
    for _, text, _, _ in TABLE_ROWS:
        ops = classify_qdmr(parse_qdmr(text))
        assert ops[0].op is Operator.SELECT


def test_no_dropped_reference_arguments():
    for _, text, _, _ in TABLE_ROWS:
        d = parse_qdmr(text)
        for s, inst in zip(d.steps, classify_qdmr(d)):
            assert set(s.refs) == set(inst.refs)


def test_reference_arity_per_signature():
    multi_ref_ops = {
        Operator.UNION,
        Operator.DISCARD,
        Operator.INTERSECTION,
        Operator.SORT,
        Operator.BOOLEAN,
        Operator.ARITHMETIC,
    }
    for _, text, _, _ in TABLE_ROWS:
        for inst in classify_qdmr(parse_qdmr(text)):
            if inst.op is Operator.SELECT:
                assert inst.refs == ()
            elif inst.op in multi_ref_ops:
                assert len(inst.refs) >= 2, inst


_word = st.sampled_from(
    ["flights", "papers", "authors", "cities", "red", "small", "objects", "from", "denver"]
)


@given(st.lists(_word, min_size=1, max_size=6))
def test_ref_free_steps_classify_select(words):
    s = QdmrStep(tokens=tuple(words), index=1)
    assert identify_operator(s).op is Operator.SELECT


@given(st.lists(_word, min_size=1, max_size=4), st.booleans())
def test_determinism(words, high):
    s = QdmrStep(tokens=tuple(words) + ("#1",), index=5)
    mode = HIGH if high else QdmrMode.STANDARD
    first = identify_operator(s, mode)
    assert identify_operator(s, mode) == first
