"""Corpus-level evaluation harness: aggregation, rows, rendering, reports."""

from fractions import Fraction

import pytest

from amr_ensemble.corpus import CorpusEntry, load_multi_system
from amr_ensemble.evaluate import (
    STRATEGY_NAMES,
    EvaluationRow,
    aggregate_breakdown,
    evaluate,
    render_table,
    report_document,
)
from amr_ensemble.graph import parse_penman
from amr_ensemble.smatch import SmatchScore, compute_breakdown, compute_smatch

from conftest import GOLD_TEXT, PRED1_TEXT, PRED2_TEXT


def entry(entry_id: str, text: str) -> CorpusEntry:
    return CorpusEntry(entry_id, f"sentence {entry_id}", parse_penman(text),
                       (("id", entry_id), ("snt", f"sentence {entry_id}")))


@pytest.fixture
def premiere_corpus():
    return load_multi_system(
        [("sys_a", [entry("s1", PRED1_TEXT)]), ("sys_b", [entry("s1", PRED2_TEXT)])]
    )


@pytest.fixture
def premiere_gold():
    return [entry("s1", GOLD_TEXT)]


class TestAggregation:
    def test_micro_average_sums_counts(self):
        a = compute_breakdown(parse_penman(PRED1_TEXT), parse_penman(GOLD_TEXT))
        b = compute_breakdown(parse_penman(PRED2_TEXT), parse_penman(GOLD_TEXT))
        total = aggregate_breakdown([a, b])
        assert total.smatch.matched == a.smatch.matched + b.smatch.matched
        assert total.smatch.candidate_total == 16 + 17
        assert total.smatch.reference_total == 17 + 17
        assert total.smatch.f1_fraction == Fraction(2 * 29, 33 + 34)

    def test_single_entry_micro_equals_pairwise(self, premiere_corpus, premiere_gold):
        rows = evaluate(premiere_corpus, premiere_gold, [], with_timing=False)
        pairwise = compute_smatch(
            parse_penman(PRED1_TEXT), parse_penman(GOLD_TEXT)
        )
        assert rows[0].smatch.f1_fraction == pairwise.f1_fraction == Fraction(26, 33)


class TestRows:
    def test_exact_predictions_score_everything_perfect(self):
        corpus = load_multi_system(
            [("a", [entry("x", GOLD_TEXT)]), ("b", [entry("x", GOLD_TEXT)])]
        )
        rows = evaluate(corpus, [entry("x", GOLD_TEXT)],
                        ["graphene-base", "smatch-avg", "oracle-best"],
                        with_timing=False)
        for row in rows:
            assert row.corrupted == 0
            assert row.smatch.f1_fraction == 1
            assert set(row.display_scores().values()) == {100.0}

    def test_merged_row_can_be_corrupted_while_inputs_are_clean(
        self, premiere_corpus, premiere_gold
    ):
        rows = evaluate(premiere_corpus, premiere_gold, ["graphene-base"], with_timing=False)
        by_label = {row.system_or_strategy: row for row in rows}
        assert by_label["sys_a"].corrupted == 0
        assert by_label["sys_b"].corrupted == 0
        assert by_label["graphene-base"].corrupted == 1

    def test_oracle_best_dominates_every_system(self):
        texts = {
            "g1": "(w / want-01 :ARG0 (b / boy))",
            "g2": "(s / see-01 :ARG0 (p / person) :ARG1 (m / movie))",
            "g3": "(g / go-02 :ARG0 (d / dog))",
        }
        wrong = "(e / eat-01 :ARG0 (c / cat))"
        # system a is right on g1 only, system b on g2 only
        corpus = load_multi_system(
            [
                ("a", [entry("g1", texts["g1"]), entry("g2", wrong), entry("g3", wrong)]),
                ("b", [entry("g1", wrong), entry("g2", texts["g2"]), entry("g3", wrong)]),
            ]
        )
        gold = [entry(i, t) for i, t in texts.items()]
        rows = evaluate(corpus, gold, ["oracle-best"], with_timing=False)
        by_label = {row.system_or_strategy: row for row in rows}
        oracle = by_label["oracle-best"].smatch.f1_fraction
        assert oracle >= by_label["a"].smatch.f1_fraction
        assert oracle >= by_label["b"].smatch.f1_fraction
        assert oracle > max(
            by_label["a"].smatch.f1_fraction, by_label["b"].smatch.f1_fraction
        )

    def test_system_rows_can_be_skipped(self, premiere_corpus, premiere_gold):
        rows = evaluate(premiere_corpus, premiere_gold, ["smatch-avg"],
                        include_systems=False, with_timing=False)
        assert [row.system_or_strategy for row in rows] == ["smatch-avg"]

    def test_timing_flag(self, premiere_corpus, premiere_gold):
        timed = evaluate(premiere_corpus, premiere_gold, ["smatch-avg"])
        assert all(isinstance(row.time_seconds, float) for row in timed)
        untimed = evaluate(premiere_corpus, premiere_gold, ["smatch-avg"], with_timing=False)
        assert all(row.time_seconds is None for row in untimed)

    def test_worker_count_does_not_change_scores(self, premiere_corpus, premiere_gold):
        serial = evaluate(premiere_corpus, premiere_gold, ["graphene-base"],
                          jobs=1, with_timing=False)
        parallel = evaluate(premiere_corpus, premiere_gold, ["graphene-base"],
                            jobs=2, with_timing=False)
        assert serial == parallel


class TestErrors:
    def test_unknown_strategy(self, premiere_corpus, premiere_gold):
        with pytest.raises(ValueError):
            evaluate(premiere_corpus, premiere_gold, ["bogus"])

    def test_ppl_strategy_without_scorer(self, premiere_corpus, premiere_gold):
        with pytest.raises(ValueError):
            evaluate(premiere_corpus, premiere_gold, ["ppl-zero"])

    def test_gold_must_cover_corpus(self, premiere_corpus):
        with pytest.raises(ValueError):
            evaluate(premiere_corpus, [entry("other", GOLD_TEXT)], [])


class TestRendering:
    def test_table_header_columns(self, premiere_corpus, premiere_gold):
        rows = evaluate(premiere_corpus, premiere_gold, [], with_timing=False)
        table = render_table(rows)
        header = table.splitlines()[0]
        for column in ("Model", "Time(s)", "Corrupt.", "SMATCH", "Unlabel",
                       "NoWSD", "Conc.", "NER", "Neg.", "Wiki", "Reent.", "SRL"):
            assert column in header
        assert "sys_a" in table
        assert "78.8" in table  # 26/33 on the display scale

    def test_report_document_schema(self, premiere_corpus, premiere_gold):
        rows = evaluate(premiere_corpus, premiere_gold, ["graphene-base"], with_timing=False)
        document = report_document(
            rows, corpus_size=1, systems=premiere_corpus.systems, seed=0
        )
        assert document["corpus_size"] == 1
        assert document["systems"] == ["sys_a", "sys_b"]
        assert document["seed"] == 0
        assert document["columns"][0] == "system_or_strategy"
        merged_row = document["rows"][-1]
        assert merged_row["system_or_strategy"] == "graphene-base"
        assert merged_row["corrupted"] == 1
        assert merged_row["time_seconds"] is None
        assert merged_row["smatch"] == 86.5  # 32/37 on the display scale

    def test_strategy_name_listing_is_stable(self):
        assert STRATEGY_NAMES == (
            "graphene-base", "graphene-smatch", "smatch-avg",
            "ppl-zero", "ppl-avg", "oracle-best",
        )
