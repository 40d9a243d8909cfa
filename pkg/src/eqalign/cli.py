"""Command-line surface: align one pair, batch-evaluate a corpus, benchmark
self-alignment runtime, and generate test corpora.

Exit codes: 0 success (including a not-aligned verdict), 1 internal error,
2 usage or input error.
"""

import argparse
import csv
import io
import json
import sys
import time
from multiprocessing import Pool
from pathlib import Path
from typing import List, Optional, Tuple

from . import corpusgen, deps, oracle
from .align import (AlignResult, align_analyzed, align_functions,
                    result_to_json, result_to_text)
from .analyze import analyze_source
from .cfront import SubsetError, list_functions
from .infer import AlignOptions
from .lemmas import lemmas_to_json

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        return args.func(args)
    except (SubsetError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqalign",
        description="Instruction-level equivalence alignments for C functions.")
    sub = parser.add_subparsers(dest="command")
    parser.set_defaults(command=None)

    p_align = sub.add_parser("align", help="align two functions")
    p_align.add_argument("a", help="first function as path.c or path.c::name")
    p_align.add_argument("b", help="second function as path.c or path.c::name")
    _add_option_flags(p_align)
    p_align.add_argument("--format", choices=("json", "text"), default="text")
    p_align.add_argument("--dump", choices=("ssa", "cdg", "lemmas", "proof", "trace"),
                         action="append", default=[])
    p_align.add_argument("--oracle", action="store_true",
                         help="also run the interpreter oracle and report precision")
    p_align.add_argument("--seed", type=int, default=0, help="oracle sampling seed")
    p_align.add_argument("--out", help="write the report here instead of stdout")
    p_align.set_defaults(func=cmd_align)

    p_batch = sub.add_parser("batch", help="evaluate a JSONL corpus of pairs")
    p_batch.add_argument("corpus", help="JSONL file: {id, prediction, reference, function?}")
    _add_option_flags(p_batch)
    p_batch.add_argument("--jobs", type=int, default=1)
    p_batch.add_argument("--out", help="write the JSON report here")
    p_batch.set_defaults(func=cmd_batch)

    p_bench = sub.add_parser("bench", help="time self-alignment over a directory of C files")
    p_bench.add_argument("corpus_dir")
    p_bench.add_argument("--out", help="write the CSV here instead of stdout")
    p_bench.set_defaults(func=cmd_bench)

    p_gen = sub.add_parser("corpusgen", help="generate labeled function pairs")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--count", type=int, default=100)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--max-stmts", type=int, default=12)
    p_gen.set_defaults(func=cmd_corpusgen)
    return parser


def _add_option_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--partial-loops", action="store_true",
                        help="keep loop assumptions; loop prefixes may align")
    parser.add_argument("--no-control-deps", action="store_true",
                        help="align with data-flow dependencies only")


def _options_from(args) -> AlignOptions:
    return AlignOptions(partial_loop=args.partial_loops,
                        use_control_deps=not args.no_control_deps)


def _split_target(target: str) -> Tuple[str, Optional[str]]:
    if "::" in target:
        path, _, name = target.rpartition("::")
        return path, name
    return target, None


def _emit(text: str, out_path: Optional[str]):
    if out_path:
        Path(out_path).write_text(text)
    else:
        print(text)


####################
#      align       #
####################


def cmd_align(args) -> int:
    path_a, name_a = _split_target(args.a)
    path_b, name_b = _split_target(args.b)
    source_a = Path(path_a).read_text()
    source_b = Path(path_b).read_text()
    options = _options_from(args)
    result = align_functions(source_a, source_b, name_a, name_b, options)

    for dump in args.dump:
        _print_dump(dump, result)

    report = result_to_json(result)
    if args.oracle:
        report["oracle"] = _run_oracle(result, args.seed)

    if args.format == "json":
        _emit(json.dumps(report, indent=2, sort_keys=True), args.out)
    else:
        text = result_to_text(result)
        if args.oracle:
            text += f"\noracle precision: {report['oracle']['precision']}"
        _emit(text, args.out)
    return EXIT_OK


def _print_dump(kind: str, result: AlignResult):
    if kind == "ssa":
        print(result.fa.cfg.dump())
        print()
        print(result.fb.cfg.dump())
    elif kind == "cdg":
        print(deps.graphviz(result.fa.cfg, result.fa.cdg))
        print(deps.graphviz(result.fb.cfg, result.fb.cdg))
    elif kind == "lemmas":
        lemma_list, _ = _regenerate_lemmas(result)
        print(json.dumps(lemmas_to_json(lemma_list), indent=2))
    elif kind == "proof":
        print(json.dumps(result.graph.to_json(), indent=2, sort_keys=True))
    elif kind == "trace":
        inputs = oracle.default_inputs(result.fa, result.fb)
        for fn in (result.fa, result.fb):
            try:
                trace = oracle.run_on_inputs(fn, inputs)
            except oracle.InterpError as exc:
                print(f"trace unavailable for {fn.name}: {exc}", file=sys.stderr)
                continue
            print(oracle.trace_to_jsonl(fn, trace), end="")


def _regenerate_lemmas(result: AlignResult):
    from .lemmas import generate_lemmas
    return generate_lemmas(result.fa, result.fb, result.alignment.options)


def _run_oracle(result: AlignResult, seed: int) -> dict:
    inputs = oracle.default_inputs(result.fa, result.fb, seed=seed)
    try:
        reference = oracle.oracle_align(result.fa, result.fb, inputs)
    except oracle.InterpError as exc:
        return {"precision": None, "error": str(exc), "inputs": len(inputs)}
    score = oracle.precision(result.alignment, reference)
    return {"precision": score, "inputs": len(inputs),
            "oracle_pairs": len(reference)}


####################
#      batch       #
####################


def _evaluate_record(payload: Tuple[int, dict, bool, bool]) -> dict:
    index, record, partial, no_ctrl = payload
    options = AlignOptions(partial_loop=partial, use_control_deps=not no_ctrl)
    record_id = record.get("id", index)
    name = record.get("function")
    try:
        result = align_functions(record["prediction"], record["reference"],
                                 name, name, options)
    except SubsetError as exc:
        return {"id": record_id, "status": "invalid",
                "error": f"{exc.kind.value}: {exc.message}"}
    except KeyError as exc:
        return {"id": record_id, "status": "invalid",
                "error": f"missing field {exc}"}
    return {
        "id": record_id,
        "status": "ok",
        "perfectly_aligned": result.verdict.perfectly_aligned,
        "name_accuracy": result.verdict.name_accuracy,
        "aligned_pairs": len(result.alignment),
        "unaligned_f": len(result.verdict.f_unaligned),
        "unaligned_g": len(result.verdict.g_unaligned),
        "variable_map": [[a, b] for a, b in sorted(result.variable_map)],
    }


def evaluate_batch(records: List[dict], options: AlignOptions,
                   jobs: int = 1) -> dict:
    """Evaluate every record; never abort the batch on a record failure.

    Percentages are over all records; name accuracy averages only records
    that aligned successfully and produced a nonempty variable map.
    """
    payloads = [(i, rec, options.partial_loop, not options.use_control_deps)
                for i, rec in enumerate(records)]
    if jobs > 1:
        with Pool(jobs) as pool:
            results = pool.map(_evaluate_record, payloads)
    else:
        results = [_evaluate_record(p) for p in payloads]

    total = len(results)
    perfect = sum(1 for r in results if r.get("perfectly_aligned"))
    invalid = sum(1 for r in results if r["status"] == "invalid")
    accuracies = [r["name_accuracy"] for r in results
                  if r["status"] == "ok" and r["name_accuracy"] is not None]
    aggregates = {
        "records": total,
        "perfectly_aligned_pct": round(100.0 * perfect / total, 1) if total else 0.0,
        "invalid_pct": round(100.0 * invalid / total, 1) if total else 0.0,
        "mean_name_accuracy": (sum(accuracies) / len(accuracies)) if accuracies else None,
    }
    return {"records": results, "aggregates": aggregates}


def cmd_batch(args) -> int:
    records = []
    with open(args.corpus) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    report = evaluate_batch(records, _options_from(args), jobs=args.jobs)
    _emit(json.dumps(report, indent=2, sort_keys=True), args.out)
    return EXIT_OK


####################
#      bench       #
####################


def bench_directory(corpus_dir: str) -> List[dict]:
    """Self-align every function in every .c file; one row per function."""
    rows: List[dict] = []
    for path in sorted(Path(corpus_dir).glob("*.c")):
        source = path.read_text()
        try:
            functions = list_functions(source)
        except SubsetError as exc:
            rows.append({"function": path.name, "lines": len(source.splitlines()),
                         "seconds": None, "reason": f"{exc.kind.value}: {exc.message}"})
            continue
        for ast in functions:
            line_count = len(source.splitlines())
            try:
                start = time.perf_counter()
                fn = analyze_source(source, ast.name)
                align_analyzed(fn, fn)
                elapsed = time.perf_counter() - start
            except SubsetError as exc:
                rows.append({"function": f"{path.name}::{ast.name}", "lines": line_count,
                             "seconds": None, "reason": f"{exc.kind.value}: {exc.message}"})
                continue
            rows.append({"function": f"{path.name}::{ast.name}", "lines": line_count,
                         "seconds": round(elapsed, 6), "reason": ""})
    return rows


def bench_csv(rows: List[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["function", "lines", "seconds", "reason"])
    for row in rows:
        writer.writerow([row["function"], row["lines"],
                         "" if row["seconds"] is None else row["seconds"],
                         row["reason"]])
    return buffer.getvalue()


def cmd_bench(args) -> int:
    rows = bench_directory(args.corpus_dir)
    _emit(bench_csv(rows), args.out)
    skipped = [r for r in rows if r["seconds"] is None]
    if skipped:
        for row in skipped:
            print(f"skipped {row['function']}: {row['reason']}", file=sys.stderr)
    return EXIT_OK


####################
#    corpusgen     #
####################


def cmd_corpusgen(args) -> int:
    labels = corpusgen.write_corpus(args.out, args.seed, args.count,
                                    max_stmts=args.max_stmts)
    print(f"wrote {len(labels)} pairs to {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
