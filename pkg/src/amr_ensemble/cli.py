"""Command-line interface: validate, smatch, merge, select, evaluate, split.

Exit codes: 0 on success, 1 on operational failure (including `validate
--strict` over a corrupted corpus), 2 on usage or input parse errors.  The
environment variable AMR_ENSEMBLE_SCORER_CMD supplies a default scorer
command for the perplexity strategies.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from amr_ensemble.corpus import (
    CorpusEntry,
    CorpusFormatError,
    load_multi_system,
    kfold_split,
    pair_entries,
    read_corpus,
    write_corpus,
)
from amr_ensemble.evaluate import (
    STRATEGY_NAMES,
    evaluate,
    render_table,
    report_document,
)
from amr_ensemble.graph import PenmanSyntaxError
from amr_ensemble.merging import MergeConfig, graphene_base, graphene_smatch
from amr_ensemble.scorers import FileScorer, ScorerError, SubprocessScorer
from amr_ensemble.selection import (
    select_ppl_avg,
    select_ppl_zero,
    select_smatch_avg,
)
from amr_ensemble.smatch import (
    AlignmentSizeError,
    BREAKDOWN_METRICS,
    SmatchScore,
    best_alignment_exact,
    compute_breakdown,
    compute_smatch,
)
from amr_ensemble.validation import validate_graph

__all__ = ["main", "cli_dispatch", "build_parser"]

SCORER_ENV_VAR = "AMR_ENSEMBLE_SCORER_CMD"


def _system_names(paths: list[str]) -> list[str]:
    names: list[str] = []
    for path in paths:
        base = Path(path).stem
        name = base
        suffix = 1
        while name in names:
            name = f"{base}#{suffix}"
            suffix += 1
        names.append(name)
    return names


def _strategy_list(text: str) -> list[str]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    unknown = [n for n in names if n not in STRATEGY_NAMES]
    if unknown or not names:
        raise argparse.ArgumentTypeError(
            f"unknown strategies {unknown}; choose from {', '.join(STRATEGY_NAMES)}"
        )
    return names


def _build_scorer(args: argparse.Namespace, parser: argparse.ArgumentParser):
    if getattr(args, "scores", None):
        return FileScorer(args.scores)
    command = getattr(args, "scorer_cmd", None) or os.environ.get(SCORER_ENV_VAR)
    if command:
        return SubprocessScorer(command)
    parser.error(
        "a scorer is required: pass --scores FILE or --scorer-cmd CMD "
        f"(or set {SCORER_ENV_VAR})"
    )


def _close_scorer(scorer) -> None:
    close = getattr(scorer, "close", None)
    if close is not None:
        close()


def _pct(value: float) -> str:
    return f"{value * 100:.1f}"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    entries = read_corpus(args.file)
    records = []
    corrupted = 0
    for entry in entries:
        report = validate_graph(entry.graph)
        if report:
            corrupted += 1
            print(f"{entry.id}: {len(report)} violation(s)")
            for violation in report:
                print(f"  {violation}")
        records.append(
            {
                "id": entry.id,
                "violations": [
                    {
                        "kind": v.kind.value,
                        "variable": v.variable.name,
                        "role": v.role.label if v.role else None,
                        "message": v.message,
                    }
                    for v in report
                ],
            }
        )
    print(f"corrupted {corrupted} of {len(entries)}")
    if args.report:
        document = {"total": len(entries), "corrupted": corrupted, "entries": records}
        Path(args.report).write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    if args.strict and corrupted:
        return 1
    return 0


def cmd_smatch(args: argparse.Namespace) -> int:
    pred = read_corpus(args.pred_file)
    gold = read_corpus(args.gold_file)
    pairs = pair_entries(pred, gold)

    def total(scores: list[SmatchScore]) -> SmatchScore:
        return SmatchScore(
            sum(s.matched for s in scores),
            sum(s.candidate_total for s in scores),
            sum(s.reference_total for s in scores),
        )

    if args.exact:
        mains = [best_alignment_exact(p.graph, g.graph)[1] for p, g in pairs]
    else:
        mains = [
            compute_smatch(p.graph, g.graph, restarts=args.restarts, seed=args.seed)
            for p, g in pairs
        ]
    overall = total(mains)
    print(f"Precision: {_pct(overall.precision)}")
    print(f"Recall:    {_pct(overall.recall)}")
    print(f"F1:        {_pct(overall.f1)}")

    if args.breakdown:
        per_entry = [
            compute_breakdown(p.graph, g.graph, restarts=args.restarts, seed=args.seed)
            for p, g in pairs
        ]
        print()
        print(f"{'Metric':14s} {'P':>6s} {'R':>6s} {'F1':>6s}")
        for name in BREAKDOWN_METRICS:
            agg = total([scores.as_dict()[name] for scores in per_entry])
            print(
                f"{name:14s} {_pct(agg.precision):>6s} {_pct(agg.recall):>6s} "
                f"{_pct(agg.f1):>6s}"
            )
    return 0


def _merge_config(args: argparse.Namespace) -> MergeConfig:
    return MergeConfig(
        vote_threshold=args.threshold,
        keep_ties=not args.no_keep_ties,
        smatch_restarts=args.restarts,
        seed=args.seed,
    )


def cmd_merge(args: argparse.Namespace) -> int:
    if len(args.files) < 2:
        args.parser.error("merge needs at least two prediction files")
    corpora = [(name, read_corpus(path)) for name, path in zip(_system_names(args.files), args.files)]
    multi = load_multi_system(corpora)
    config = _merge_config(args)
    merge = graphene_base if args.strategy == "graphene-base" else graphene_smatch

    outputs: list[CorpusEntry] = []
    for entry_id in multi.ids:
        candidates = [multi.graphs[entry_id][s] for s in multi.systems]
        merged = merge(candidates, config)
        sentence = multi.sentences.get(entry_id, "")
        metadata = [("id", entry_id)] + ([("snt", sentence)] if sentence else [])
        outputs.append(
            CorpusEntry(entry_id, sentence, merged, tuple(metadata))
        )
    write_corpus(outputs, args.out)
    print(f"merged {len(outputs)} entries from {len(multi.systems)} systems -> {args.out}")
    return 0


def cmd_select(args: argparse.Namespace) -> int:
    corpora = [(name, read_corpus(path)) for name, path in zip(_system_names(args.files), args.files)]
    multi = load_multi_system(corpora)

    scorer = None
    if args.strategy in ("ppl-zero", "ppl-avg"):
        scorer = _build_scorer(args, args.parser)
    try:
        outputs: list[CorpusEntry] = []
        for entry_id in multi.ids:
            candidate_set = multi.candidate_set(entry_id)
            if args.strategy == "smatch-avg":
                result = select_smatch_avg(
                    candidate_set, restarts=args.restarts, seed=args.seed
                )
            elif args.strategy == "ppl-zero":
                result = select_ppl_zero(candidate_set, scorer)
            else:
                result = select_ppl_avg(candidate_set, [scorer])
            system_id, graph = candidate_set.candidates[result.chosen_index]
            sentence = candidate_set.sentence
            metadata = (
                [("id", entry_id)]
                + ([("snt", sentence)] if sentence else [])
                + [("chosen-system", system_id)]
            )
            outputs.append(CorpusEntry(entry_id, sentence, graph, tuple(metadata)))
    finally:
        if scorer is not None:
            _close_scorer(scorer)
    write_corpus(outputs, args.out)
    print(
        f"selected {len(outputs)} graphs by {args.strategy} "
        f"from {len(multi.systems)} systems -> {args.out}"
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    gold = read_corpus(args.gold)
    corpora = [(name, read_corpus(path)) for name, path in zip(_system_names(args.files), args.files)]
    multi = load_multi_system(corpora)

    scorer = None
    if any(s in ("ppl-zero", "ppl-avg") for s in args.strategies):
        scorer = _build_scorer(args, args.parser)
    try:
        rows = evaluate(
            multi,
            gold,
            args.strategies,
            scorer=scorer,
            restarts=args.restarts,
            seed=args.seed,
            jobs=args.jobs,
            merge_config=_merge_config(args),
            with_timing=not args.no_timing,
        )
    finally:
        if scorer is not None:
            _close_scorer(scorer)
    print(render_table(rows))
    if args.report:
        document = report_document(
            rows, corpus_size=len(multi), systems=multi.systems, seed=args.seed
        )
        Path(args.report).write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    entries = read_corpus(args.file)
    folds = kfold_split(entries, args.folds, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, (train, test) in enumerate(folds):
        write_corpus(train, out_dir / f"fold{i}.train.amr")
        write_corpus(test, out_dir / f"fold{i}.test.amr")
        print(f"fold {i}: train {len(train)}, test {len(test)}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amr-ensemble",
        description="Ensembling and evaluation toolkit for AMR graph predictions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common_search(p: argparse.ArgumentParser) -> None:
        p.add_argument("--restarts", type=int, default=8, help="alignment search restarts")
        p.add_argument("--seed", type=int, default=0, help="global random seed")

    p_validate = sub.add_parser("validate", help="check graphs for structural violations")
    p_validate.add_argument("file")
    p_validate.add_argument("--report", help="write a JSON violation report")
    p_validate.add_argument(
        "--strict", action="store_true", help="exit 1 if any graph is corrupted"
    )
    p_validate.set_defaults(func=cmd_validate)

    p_smatch = sub.add_parser("smatch", help="score predictions against gold")
    p_smatch.add_argument("pred_file")
    p_smatch.add_argument("gold_file")
    p_smatch.add_argument("--breakdown", action="store_true", help="print the full metric suite")
    p_smatch.add_argument(
        "--exact", action="store_true", help="use brute-force alignment (small graphs only)"
    )
    common_search(p_smatch)
    p_smatch.set_defaults(func=cmd_smatch)

    def merge_options(p: argparse.ArgumentParser) -> None:
        p.add_argument("--threshold", type=float, default=0.5, help="vote threshold")
        p.add_argument(
            "--no-keep-ties",
            action="store_true",
            help="keep a single winner on tied votes instead of all",
        )

    p_merge = sub.add_parser("merge", help="merge multi-system predictions")
    p_merge.add_argument(
        "--strategy", required=True, choices=["graphene-base", "graphene-smatch"]
    )
    p_merge.add_argument("--out", required=True)
    p_merge.add_argument("files", nargs="+", metavar="file")
    merge_options(p_merge)
    common_search(p_merge)
    p_merge.set_defaults(func=cmd_merge)

    def scorer_options(p: argparse.ArgumentParser) -> None:
        group = p.add_mutually_exclusive_group()
        group.add_argument(
            "--scorer-cmd",
            help=f"scorer child-process command (default: ${SCORER_ENV_VAR})",
        )
        group.add_argument(
            "--scores", help="precomputed score file (sentence_id<TAB>system_id<TAB>ppl)"
        )

    p_select = sub.add_parser("select", help="select one prediction per sentence")
    p_select.add_argument(
        "--strategy", required=True, choices=["smatch-avg", "ppl-zero", "ppl-avg"]
    )
    p_select.add_argument("--out", required=True)
    p_select.add_argument("files", nargs="+", metavar="file")
    scorer_options(p_select)
    common_search(p_select)
    p_select.set_defaults(func=cmd_select)

    p_eval = sub.add_parser("evaluate", help="full evaluation harness")
    p_eval.add_argument("--gold", required=True)
    p_eval.add_argument(
        "--strategies",
        type=_strategy_list,
        default=[],
        help=f"comma-separated subset of: {', '.join(STRATEGY_NAMES)}",
    )
    p_eval.add_argument("--report", help="write the JSON report here")
    p_eval.add_argument("--jobs", type=int, default=1, help="scoring worker processes")
    p_eval.add_argument(
        "--no-timing",
        action="store_true",
        help="omit wall times for byte-reproducible reports",
    )
    p_eval.add_argument("files", nargs="+", metavar="file")
    scorer_options(p_eval)
    merge_options(p_eval)
    common_search(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_split = sub.add_parser("split", help="seeded k-fold corpus split")
    p_split.add_argument("--folds", type=int, required=True)
    p_split.add_argument("--seed", type=int, default=0)
    p_split.add_argument("--out-dir", required=True)
    p_split.add_argument("file")
    p_split.set_defaults(func=cmd_split)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.parser = parser
    try:
        return args.func(args)
    except (CorpusFormatError, PenmanSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ScorerError, AlignmentSizeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def cli_dispatch(argv: list[str]) -> int:
    """main() with argparse's SystemExit folded into the return code."""
    try:
        return main(argv)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
