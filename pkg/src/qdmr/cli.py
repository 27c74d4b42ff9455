"""Command-line entry point.

Subcommands: parse, validate, compile, exec, eval, decompose, stats, breakrc,
serve. Commands are pure pipelines over files (same inputs, byte-identical
outputs). Exit codes: 0 success, 1 validation failures (diagnostics on
stderr), 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from qdmr.core import (
    QdmrError,
    QdmrMode,
    Question,
    build_lexicon,
    check_lexicon,
    parse_qdmr,
    serialize_qdmr,
)


def _mode(name: str) -> QdmrMode:
    return QdmrMode.HIGH_LEVEL if name == "high" else QdmrMode.STANDARD


def _read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f if line.strip()]


def _fail(message: str) -> int:
    print(message, file=sys.stderr)
    return 1


def cmd_parse(args) -> int:
    failures = 0
    for row, line in enumerate(_read_lines(args.infile), start=1):
        try:
            d = parse_qdmr(line, _mode(args.mode))
        except QdmrError as err:
            print(f"row {row}: {err}", file=sys.stderr)
            failures += 1
            continue
        print(serialize_qdmr(d, separator=args.sep))
    return 1 if failures else 0


def cmd_validate(args) -> int:
    from qdmr.graph import to_graph, validate

    questions = _read_lines(args.questions)
    rows = _read_lines(args.infile)
    if len(questions) != len(rows):
        return _fail(f"{args.infile} has {len(rows)} rows but {args.questions} has {len(questions)}")
    failures = 0
    for row, (line, question_line) in enumerate(zip(rows, questions), start=1):
        text = question_line.split("\t", 1)[-1]
        try:
            d = parse_qdmr(line, _mode(args.mode))
        except QdmrError as err:
            print(f"row {row}: {err}", file=sys.stderr)
            failures += 1
            continue
        lexicon = build_lexicon(Question(id=str(row), text=text))
        for step in d.steps:
            for violation in check_lexicon(step, lexicon):
                print(
                    f"row {row} step {step.index}: {violation.token}@{violation.position} not in lexicon",
                    file=sys.stderr,
                )
                failures += 1
        for issue in validate(to_graph(d)):
            print(f"row {row}: warning: {issue.kind}: {issue.detail}", file=sys.stderr)
    return 1 if failures else 0


def cmd_compile(args) -> int:
    from qdmr.opident import ClassificationError, compile_pseudo_lf

    rows = _read_lines(args.infile)
    blocks = []
    failures = 0
    for row, line in enumerate(rows, start=1):
        try:
            lf = compile_pseudo_lf(parse_qdmr(line, _mode(args.mode)))
        except (QdmrError, ClassificationError) as err:
            print(f"row {row}: {err}", file=sys.stderr)
            failures += 1
            continue
        blocks.append(lf.text)
    output = "\n\n".join(blocks) if len(rows) > 1 else (blocks[0] if blocks else "")
    if output:
        print(output)
    return 1 if failures else 0


def _render_value(kb, value) -> str:
    from qdmr.executor import Boolean, Entity, Number, Text

    if isinstance(value, Entity):
        return kb.primary_name(value.id)
    if isinstance(value, Number):
        frac = value.value
        return str(frac.numerator) if frac.denominator == 1 else f"{frac.numerator}/{frac.denominator}"
    if isinstance(value, Boolean):
        return "true" if value.value else "false"
    if isinstance(value, Text):
        return value.value
    raise AssertionError(f"unrenderable {value!r}")


def cmd_exec(args) -> int:
    from qdmr.executor import ExecutorError, evaluate_qdmr, load_kb

    kb = load_kb(args.kb)
    with open(args.qdmr, encoding="utf-8") as f:
        text = f.read().strip()
    try:
        result = evaluate_qdmr(kb, parse_qdmr(text, _mode(args.mode)))
    except (QdmrError, ExecutorError) as err:
        return _fail(str(err))
    rendered = [_render_value(kb, item.value) for item in result.items]
    if result.ordered:
        print("[" + ", ".join(rendered) + "]")
    else:
        print("{" + ", ".join(sorted(rendered)) + "}")
    return 0


def cmd_eval(args) -> int:
    from qdmr.metrics import score_pair, summarize

    gold_rows = _read_lines(args.gold)
    pred_rows = _read_lines(args.pred)
    question_rows = _read_lines(args.questions)
    if not (len(gold_rows) == len(pred_rows) == len(question_rows)):
        return _fail("gold, pred, and question files must have the same number of rows")
    reports = []
    lines = ["id\tem\tsari\tged\tged_plus"]
    failures = 0
    for row, (gold_text, pred_text, question_line) in enumerate(
        zip(gold_rows, pred_rows, question_rows), start=1
    ):
        parts = question_line.split("\t", 1)
        row_id, question = (parts[0], parts[1]) if len(parts) == 2 else (str(row), parts[0])
        try:
            gold = parse_qdmr(gold_text, _mode(args.mode))
            pred = parse_qdmr(pred_text, _mode(args.mode))
        except QdmrError as err:
            print(f"row {row}: {err}", file=sys.stderr)
            failures += 1
            continue
        report = score_pair(question, gold, pred, node_limit=args.node_limit)
        reports.append(report)
        plus = "" if report.ged_plus is None else f"{report.ged_plus:.6f}"
        lines.append(
            f"{row_id}\t{report.exact_match}\t{report.sari:.6f}\t{report.ged:.6f}\t{plus}"
        )
    if failures:
        return 1
    summary = summarize(reports)
    plus = "" if summary["ged_plus"] is None else f"{summary['ged_plus']:.6f}"
    lines.append(
        f"mean\t{summary['exact_match']:.6f}\t{summary['sari']:.6f}\t{summary['ged']:.6f}\t{plus}"
    )
    tsv = "\n".join(lines)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(tsv + "\n")
    else:
        print(tsv)
    summary_bits = [
        f"em={summary['exact_match']:.3f}",
        f"sari={summary['sari']:.3f}",
        f"ged={summary['ged']:.3f}",
    ]
    if summary["ged_plus"] is not None:
        summary_bits.append(f"ged_plus={summary['ged_plus']:.3f}")
    print(" ".join(summary_bits))
    return 0


def cmd_decompose(args) -> int:
    from qdmr.rulebased import RulebasedError, decompose, load_dep_tree

    try:
        tree = load_dep_tree(args.dep, args.coref)
        steps = decompose(tree)
    except RulebasedError as err:
        return _fail(str(err))
    for step in steps:
        print(step)
    return 0


def cmd_stats(args) -> int:
    from qdmr.dataset import (
        DatasetError,
        compile_rate,
        length_distribution,
        load_break_csv,
        operator_prevalence,
        render_length_table,
        render_operator_table,
    )

    mode = _mode(args.mode) if args.mode else None
    try:
        result = load_break_csv(args.infile, mode)
        print(render_operator_table(operator_prevalence(result.records)))
        print()
        print(render_length_table(length_distribution(result.records)))
        print()
        print(f"compile_rate\t{compile_rate(result.records):.1%}")
        print(f"rows\t{result.total_rows}\trejected\t{len(result.rejects)}")
    except DatasetError as err:
        return _fail(str(err))
    for reject in result.rejects:
        print(f"rejected row {reject.row}: {reject.reason}", file=sys.stderr)
    return 0


def cmd_breakrc(args) -> int:
    from qdmr.breakrc import (
        BreakRcError,
        KbOracleAnswerer,
        TfIdfCorpusAnswerer,
        combined_retrieve,
        load_corpus,
        run_break_rc,
    )

    if bool(args.kb) == bool(args.corpus):
        return _fail("exactly one of --kb or --corpus is required")
    if args.kb:
        from qdmr.executor import load_kb

        answerer = KbOracleAnswerer(load_kb(args.kb))
    else:
        answerer = TfIdfCorpusAnswerer(load_corpus(args.corpus))
    with open(args.qdmr, encoding="utf-8") as f:
        text = f.read().strip()
    try:
        d = parse_qdmr(text, QdmrMode.HIGH_LEVEL)
        run = run_break_rc(d, answerer)
    except (QdmrError, BreakRcError) as err:
        return _fail(str(err))
    for index in sorted(run.step_answers):
        answer = run.step_answers[index]
        print(
            json.dumps(
                {
                    "step": index,
                    "text": d.steps[index - 1].text,
                    "answers": [[c.text, c.probability] for c in answer.candidates],
                    "retrieved": list(answer.retrieved),
                }
            )
        )
    final = run.final
    payload = {"final": [[c.text, c.probability] for c in final.candidates]}
    if args.combined:
        payload["combined_contexts"] = combined_retrieve(d, answerer)
    print(json.dumps(payload))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from qdmr.annotate_api import create_app
    from qdmr.dataset import load_break_csv

    questions = []
    if args.questions:
        questions = [r.question for r in load_break_csv(args.questions).records]
    app = create_app(
        questions=questions,
        store_path=args.store,
        reviewer_secret=args.reviewer_secret,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdmr", description=__doc__)
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized helpers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse and canonicalize decompositions, one per line")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--mode", choices=["standard", "high"], default="standard")
    p.add_argument("--sep", choices=[";", "[SEP]"], default=";")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("validate", help="check lexicon and reference validity per row")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--questions", required=True, help="aligned question file (id<TAB>text or text)")
    p.add_argument("--mode", choices=["standard", "high"], default="standard")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compile", help="compile decompositions to pseudo-logical forms")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--mode", choices=["standard", "high"], default="standard")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("exec", help="execute a decomposition against a KB file")
    p.add_argument("--kb", required=True)
    p.add_argument("--qdmr", required=True)
    p.add_argument("--mode", choices=["standard", "high"], default="standard")
    p.set_defaults(func=cmd_exec)

    p = sub.add_parser("eval", help="score predictions against gold decompositions")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--questions", required=True)
    p.add_argument("--mode", choices=["standard", "high"], default="standard")
    p.add_argument("--node-limit", type=int, default=8)
    p.add_argument("--out", default=None, help="write the per-example TSV here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("decompose", help="rule-based decomposition of a dependency tree")
    p.add_argument("--dep", required=True)
    p.add_argument("--coref", default=None)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("stats", help="corpus statistics for a decomposition CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--mode", choices=["standard", "high"], default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("breakrc", help="answer a multi-hop decomposition step by step")
    p.add_argument("--qdmr", required=True)
    p.add_argument("--kb", default=None)
    p.add_argument("--corpus", default=None)
    p.add_argument("--combined", action="store_true", help="also emit pooled retrieval contexts")
    p.set_defaults(func=cmd_breakrc)

    p = sub.add_parser("serve", help="start the annotation HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--store", default="annotations.jsonl")
    p.add_argument("--questions", default=None, help="CSV of questions to annotate")
    p.add_argument("--reviewer-secret", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None:
        random.seed(args.seed)
    try:
        return args.func(args)
    except OSError as err:
        return _fail(str(err))


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
