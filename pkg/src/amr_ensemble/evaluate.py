"""Corpus-level evaluation harness producing one row per system/strategy.

Each row carries the wall time of the strategy phase alone (file I/O and
score computation excluded), the count of structurally corrupted outputs,
and micro-averaged SMATCH plus breakdown scores: matched and total triple
counts are summed over the corpus before precision/recall/F1 are formed.
Scores are displayed on the conventional [0, 100] scale at one decimal.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from amr_ensemble.corpus import CorpusEntry, MultiSystemCorpus
from amr_ensemble.graph import AmrGraph
from amr_ensemble.merging import MergeConfig, graphene_base, graphene_smatch
from amr_ensemble.scorers import PerplexityScorer
from amr_ensemble.selection import (
    select_oracle_best,
    select_ppl_avg,
    select_ppl_zero,
    select_smatch_avg,
)
from amr_ensemble.smatch import (
    BREAKDOWN_METRICS,
    BreakdownScores,
    SmatchScore,
    compute_breakdown,
)
from amr_ensemble.validation import count_corrupted

__all__ = [
    "EvaluationRow",
    "STRATEGY_NAMES",
    "evaluate",
    "aggregate_breakdown",
    "render_table",
    "report_document",
]

STRATEGY_NAMES = (
    "graphene-base",
    "graphene-smatch",
    "smatch-avg",
    "ppl-zero",
    "ppl-avg",
    "oracle-best",
)


@dataclass(frozen=True)
class EvaluationRow:
    system_or_strategy: str
    time_seconds: float | None
    corrupted: int
    scores: BreakdownScores

    @property
    def smatch(self) -> SmatchScore:
        return self.scores.smatch

    def display_scores(self) -> dict[str, float]:
        """Scores on the [0, 100] scale rounded to one decimal."""
        return {
            name: round(score.f1 * 100, 1)
            for name, score in self.scores.as_dict().items()
        }


def aggregate_breakdown(per_entry: Sequence[BreakdownScores]) -> BreakdownScores:
    """Micro-average: sum matched/candidate/reference counts per metric over
    the corpus, then form a single score from the sums."""
    sums = {name: [0, 0, 0] for name in BREAKDOWN_METRICS}
    for scores in per_entry:
        for name, score in scores.as_dict().items():
            sums[name][0] += score.matched
            sums[name][1] += score.candidate_total
            sums[name][2] += score.reference_total
    return BreakdownScores(
        **{name: SmatchScore(*sums[name]) for name in BREAKDOWN_METRICS}
    )


def _score_pair(args: tuple[AmrGraph, AmrGraph, int, int]) -> BreakdownScores:
    output, gold, restarts, seed = args
    return compute_breakdown(output, gold, restarts=restarts, seed=seed)


def _score_outputs(
    outputs: Sequence[AmrGraph],
    golds: Sequence[AmrGraph],
    restarts: int,
    seed: int,
    jobs: int,
) -> BreakdownScores:
    work = [(out, gold, restarts, seed) for out, gold in zip(outputs, golds)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_entry = list(pool.map(_score_pair, work))
    else:
        per_entry = [_score_pair(item) for item in work]
    return aggregate_breakdown(per_entry)


def evaluate(
    corpus: MultiSystemCorpus,
    gold: Sequence[CorpusEntry],
    strategies: Sequence[str],
    *,
    scorer: PerplexityScorer | None = None,
    restarts: int = 8,
    seed: int = 0,
    jobs: int = 1,
    include_systems: bool = True,
    merge_config: MergeConfig | None = None,
    with_timing: bool = True,
) -> list[EvaluationRow]:
    """Produce one row per input system and per enabled strategy.

    The gold corpus must cover every corpus id.  Perplexity strategies
    require a scorer.  All randomness derives from (seed, graph content),
    so results are independent of worker count and run order; pass
    with_timing=False for byte-reproducible reports.
    """
    unknown = [s for s in strategies if s not in STRATEGY_NAMES]
    if unknown:
        raise ValueError(
            f"unknown strategies: {unknown}; expected any of {', '.join(STRATEGY_NAMES)}"
        )
    gold_by_id = {e.id: e for e in gold}
    missing = [i for i in corpus.ids if i not in gold_by_id]
    if missing:
        raise ValueError(f"gold corpus does not cover ids: {missing[:5]}")
    if any(s in ("ppl-zero", "ppl-avg") for s in strategies) and scorer is None:
        raise ValueError("perplexity strategies require a scorer")

    golds = [gold_by_id[i].graph for i in corpus.ids]
    merge_config = merge_config or MergeConfig(smatch_restarts=restarts, seed=seed)

    def strategy_outputs(name: str) -> Callable[[], list[AmrGraph]]:
        def merge(fn):
            return lambda: [
                fn([g for _s, g in corpus.candidate_set(i).candidates], merge_config)
                for i in corpus.ids
            ]

        def select(fn):
            return lambda: [
                corpus.candidate_set(i).candidates[fn(corpus.candidate_set(i))][1]
                for i in corpus.ids
            ]

        if name == "graphene-base":
            return merge(graphene_base)
        if name == "graphene-smatch":
            return merge(graphene_smatch)
        if name == "smatch-avg":
            return select(
                lambda cs: select_smatch_avg(cs, restarts=restarts, seed=seed).chosen_index
            )
        if name == "ppl-zero":
            return select(lambda cs: select_ppl_zero(cs, scorer).chosen_index)
        if name == "ppl-avg":
            return select(lambda cs: select_ppl_avg(cs, [scorer]).chosen_index)
        if name == "oracle-best":
            return select(
                lambda cs: select_oracle_best(
                    cs, gold_by_id[cs.sentence_id].graph, restarts=restarts, seed=seed
                ).chosen_index
            )
        raise AssertionError(name)

    rows: list[EvaluationRow] = []

    def add_row(label: str, producer: Callable[[], list[AmrGraph]]) -> None:
        begin = time.perf_counter()
        outputs = producer()
        elapsed = time.perf_counter() - begin
        rows.append(
            EvaluationRow(
                system_or_strategy=label,
                time_seconds=elapsed if with_timing else None,
                corrupted=count_corrupted(outputs),
                scores=_score_outputs(outputs, golds, restarts, seed, jobs),
            )
        )

    if include_systems:
        for system in corpus.systems:
            add_row(system, lambda s=system: [corpus.graphs[i][s] for i in corpus.ids])
    for name in strategies:
        add_row(name, strategy_outputs(name))
    return rows


_COLUMNS = (
    ("SMATCH", "smatch"),
    ("Unlabel", "unlabeled"),
    ("NoWSD", "no_wsd"),
    ("Conc.", "concepts"),
    ("NER", "ner"),
    ("Neg.", "negations"),
    ("Wiki", "wiki"),
    ("Reent.", "reentrancies"),
    ("SRL", "srl"),
)


def render_table(rows: Sequence[EvaluationRow]) -> str:
    """Plain-text table mirroring the report document."""
    header = ["Model", "Time(s)", "Corrupt."] + [label for label, _ in _COLUMNS]
    body: list[list[str]] = []
    for row in rows:
        display = row.display_scores()
        body.append(
            [
                row.system_or_strategy,
                "-" if row.time_seconds is None else f"{row.time_seconds:.2f}",
                str(row.corrupted),
            ]
            + [f"{display[key]:.1f}" for _label, key in _COLUMNS]
        )
    widths = [
        max(len(header[c]), *(len(line[c]) for line in body)) if body else len(header[c])
        for c in range(len(header))
    ]

    def fmt(line: list[str]) -> str:
        cells = [line[0].ljust(widths[0])] + [
            line[c].rjust(widths[c]) for c in range(1, len(line))
        ]
        return "  ".join(cells).rstrip()

    out = [fmt(header), fmt(["-" * w for w in widths])]
    out.extend(fmt(line) for line in body)
    return "\n".join(out)


def report_document(
    rows: Sequence[EvaluationRow],
    *,
    corpus_size: int,
    systems: Sequence[str],
    seed: int,
) -> dict:
    """Structured report with one record per row, scores in [0, 100]."""
    return {
        "corpus_size": corpus_size,
        "systems": list(systems),
        "seed": seed,
        "columns": ["system_or_strategy", "time_seconds", "corrupted"]
        + [key for _label, key in _COLUMNS],
        "rows": [
            {
                "system_or_strategy": row.system_or_strategy,
                "time_seconds": row.time_seconds,
                "corrupted": row.corrupted,
                **row.display_scores(),
            }
            for row in rows
        ],
    }
