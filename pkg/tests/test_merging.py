"""Pivot-vote graph merging."""

import random
from fractions import Fraction

import pytest

from amr_ensemble.graph import (
    Concept,
    Variable,
    extract_triples,
    parse_penman,
    serialize_penman,
)
from amr_ensemble.merging import (
    MergeConfig,
    VoteTally,
    align_to_pivot,
    graphene_base,
    graphene_smatch,
    merge_with_pivot,
)
from amr_ensemble.smatch import best_alignment_exact, matched_count
from amr_ensemble.validation import validate_graph

from conftest import MERGED_TEXT, random_graph


def triple_strings(graph):
    return set(extract_triples(graph).as_strings())


class TestWorkedExample:
    def test_merge_reproduces_dual_edge_output(self, pred1_graph, pred2_graph, merged_graph):
        merged, support = merge_with_pivot(pred1_graph, [pred2_graph])
        assert triple_strings(merged) == triple_strings(merged_graph)
        assert support == Fraction(31, 38)

    def test_merged_output_keeps_both_tied_edges(self, pred1_graph, pred2_graph):
        merged, _ = merge_with_pivot(pred1_graph, [pred2_graph])
        edges = {(s.name, r.label, t.name) for s, r, t in merged.relations}
        assert ("z3", ":mod", "z4") in edges
        assert ("z3", ":ARG1", "z4") in edges
        times = {(s.name, r.label, v.value) for s, r, v in merged.attributes
                 if r.label == ":time"}
        assert times == {("z5", ":time", '"15:00"'), ("z5", ":time", '"3:00"')}

    def test_alignment_maps_pred2_onto_pred1(self, pred1_graph, pred2_graph):
        alignment = align_to_pivot(pred1_graph, pred2_graph, MergeConfig())
        count = matched_count(
            extract_triples(pred2_graph), extract_triples(pred1_graph), alignment
        )
        # root + five shared instances + four shared relations + two names
        assert count == 12
        _, oracle = best_alignment_exact(pred2_graph, pred1_graph)
        assert oracle.matched == 12

    def test_merge_output_is_corrupted_while_inputs_are_clean(
        self, pred1_graph, pred2_graph
    ):
        merged, _ = merge_with_pivot(pred1_graph, [pred2_graph])
        assert not validate_graph(pred1_graph)
        assert not validate_graph(pred2_graph)
        assert validate_graph(merged)

    def test_graphene_base_tie_goes_to_first_pivot(self, pred1_graph, pred2_graph, merged_graph):
        # both pivot choices yield the same support here; index 0 wins,
        # so the merged concept stays the pivot's "premiere"
        out = graphene_base([pred1_graph, pred2_graph])
        assert triple_strings(out) == triple_strings(merged_graph)
        assert out.instances[Variable("z3")] == Concept("premiere")

    def test_graphene_smatch_prefers_consensus_pivot(self, pred1_graph, pred2_graph):
        out = graphene_smatch([pred1_graph, pred2_graph])
        _, score = best_alignment_exact(out, parse_penman(MERGED_TEXT))
        assert score.f1_fraction == 1


class TestVoteSemantics:
    def test_consensus_is_idempotent(self):
        rng = random.Random(5)
        for _ in range(10):
            graph = random_graph(rng, max_vars=6)
            merged, support = merge_with_pivot(graph, [graph, graph])
            _, score = best_alignment_exact(merged, graph)
            assert score.f1_fraction == 1
            assert support == 1

    def test_majority_relabels_pivot_edge(self):
        pivot = parse_penman("(s / schedule-01 :mod (m / movie))")
        voter = parse_penman("(s / schedule-01 :ARG1 (m / movie))")
        merged, _ = merge_with_pivot(pivot, [voter, voter])
        edges = [(r.label) for _, r, _ in merged.relations]
        assert edges == [":ARG1"]

    def test_majority_edge_survives_any_pivot(self):
        texts = [
            "(s / schedule-01 :mod (m / movie))",
            "(s / schedule-01 :ARG1 (m / movie))",
            "(s / schedule-01 :ARG1 (m / movie))",
        ]
        graphs = [parse_penman(t) for t in texts]
        for pivot_index in range(3):
            others = [g for i, g in enumerate(graphs) if i != pivot_index]
            merged, _ = merge_with_pivot(graphs[pivot_index], others)
            labels = sorted(r.label for _, r, _ in merged.relations)
            assert labels == [":ARG1"], f"pivot {pivot_index}"

    def test_outvoted_node_is_deleted(self):
        pivot = parse_penman("(s / see-01 :ARG0 (b / boy) :time (n / now))")
        voter = parse_penman("(s / see-01 :ARG0 (b / boy))")
        merged, _ = merge_with_pivot(pivot, [voter, voter])
        concepts = {c.label for c in merged.instances.values()}
        assert concepts == {"see-01", "boy"}

    def test_supported_node_is_added(self):
        pivot = parse_penman("(s / see-01 :ARG0 (b / boy))")
        voter = parse_penman("(s / see-01 :ARG0 (b / boy) :time (n / now))")
        merged, _ = merge_with_pivot(pivot, [voter, voter])
        concepts = {c.label for c in merged.instances.values()}
        assert concepts == {"see-01", "boy", "now"}
        edge_labels = sorted(r.label for _, r, _ in merged.relations)
        assert edge_labels == [":ARG0", ":time"]

    def test_minority_node_is_not_added(self):
        pivot = parse_penman("(s / see-01 :ARG0 (b / boy))")
        voter = parse_penman("(s / see-01 :ARG0 (b / boy) :time (n / now))")
        other = parse_penman("(s / see-01 :ARG0 (b / boy))")
        merged, _ = merge_with_pivot(pivot, [voter, other])
        concepts = {c.label for c in merged.instances.values()}
        assert concepts == {"see-01", "boy"}

    def test_concept_correction_by_majority(self):
        pivot = parse_penman("(s / see-01 :ARG0 (b / boy))")
        voter = parse_penman("(s / see-01 :ARG0 (b / girl))")
        merged, _ = merge_with_pivot(pivot, [voter, voter])
        concepts = {c.label for c in merged.instances.values()}
        assert concepts == {"see-01", "girl"}

    def test_concept_tie_keeps_pivot_choice(self):
        pivot = parse_penman("(s / see-01 :ARG0 (b / boy))")
        voter = parse_penman("(s / see-01 :ARG0 (b / girl))")
        merged, _ = merge_with_pivot(pivot, [voter])
        concepts = {c.label for c in merged.instances.values()}
        assert concepts == {"see-01", "boy"}

    def test_root_is_never_deleted(self):
        pivot = parse_penman("(s / see-01 :ARG0 (b / boy))")
        voter = parse_penman("(w / want-01 :ARG0 (b / boy))")
        merged, _ = merge_with_pivot(pivot, [voter, voter])
        # root concept corrected by the majority, node itself retained
        assert merged.instances[merged.root] == Concept("want-01")

    def test_partial_overlap_keeps_graph_connected(self):
        pivot = parse_penman("(s / schedule-01 :ARG1 (p / premiere :mod (m / movie)))")
        voter = parse_penman("(s / schedule-01 :ARG1 (p2 / plan-01 :ARG1 (m / movie)))")
        merged, _ = merge_with_pivot(pivot, [voter])
        serialize_penman(merged)  # never raises: output stays reachable
        assert len(merged.instances) == 3

    def test_attribute_value_competition(self):
        pivot = parse_penman('(d / date-entity :time "15:00")')
        voter = parse_penman('(d / date-entity :time "3:00")')
        merged, _ = merge_with_pivot(pivot, [voter, voter])
        values = [v.value for _, _, v in merged.attributes]
        assert values == ['"3:00"']


class TestConfig:
    def test_keep_ties_false_keeps_single_winner(self, pred1_graph, pred2_graph):
        merged, _ = merge_with_pivot(
            pred1_graph, [pred2_graph], MergeConfig(keep_ties=False)
        )
        z3_edges = [r.label for s, r, _ in merged.relations if s.name == "z3"]
        assert sorted(z3_edges) == [":mod", ":poss"]
        times = [v.value for _, r, v in merged.attributes if r.label == ":time"]
        assert times == ['"15:00"']

    def test_high_threshold_keeps_only_unanimous_elements(self, pred1_graph, pred2_graph):
        merged, _ = merge_with_pivot(
            pred1_graph, [pred2_graph], MergeConfig(vote_threshold=0.6)
        )
        strings = triple_strings(merged)
        assert '(z5, :time, "15:00")' not in strings
        assert '(z5, :time, "3:00")' not in strings
        # the movie node is unanimous, so the edge into it survives the
        # role vote to keep the node reachable
        assert "(z3, :mod, z4)" in strings

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            MergeConfig(vote_threshold=0.0)
        with pytest.raises(ValueError):
            MergeConfig(vote_threshold=1.2)
        with pytest.raises(ValueError):
            MergeConfig(smatch_restarts=0)

    def test_vote_tally_fraction(self):
        tally = VoteTally("element", 2, 4)
        assert tally.fraction == Fraction(1, 2)
        with pytest.raises(ValueError):
            VoteTally("element", 5, 4)


class TestEdgeCases:
    def test_empty_candidate_list_rejected(self):
        with pytest.raises(ValueError):
            graphene_base([])
        with pytest.raises(ValueError):
            graphene_smatch([])

    def test_single_candidate_passthrough_with_warning(self, gold_graph):
        with pytest.warns(UserWarning):
            out = graphene_base([gold_graph])
        assert out is gold_graph

    def test_no_others_rejected(self, gold_graph):
        with pytest.raises(ValueError):
            merge_with_pivot(gold_graph, [])

    def test_merged_variables_are_canonical(self, pred1_graph, pred2_graph):
        merged, _ = merge_with_pivot(pred1_graph, [pred2_graph])
        names = sorted(v.name for v in merged.instances)
        assert names == [f"z{i}" for i in range(len(names))]

    def test_disjoint_graphs_still_merge(self):
        pivot = parse_penman("(a / go-02 :ARG0 (b / boy))")
        other = parse_penman("(c / want-01 :ARG1 (d / movie))")
        merged, support = merge_with_pivot(pivot, [other])
        serialize_penman(merged)
        assert support <= 1

    def test_outputs_always_serialize(self):
        rng = random.Random(17)
        for _ in range(15):
            base = random_graph(rng, max_vars=7, min_vars=2)
            candidates = [base] + [
                parse_penman(serialize_penman(random_graph(rng, max_vars=7, min_vars=2)))
                for _ in range(2)
            ]
            merged = graphene_base(candidates)
            parse_penman(serialize_penman(merged))
