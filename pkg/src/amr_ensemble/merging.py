"""Pivot-vote graph merging (the Graphene-style ensemble baselines).

One candidate acts as the pivot; every other candidate is aligned to it and
votes on the pivot's nodes, edges and attributes.  Elements whose vote
fraction falls below the threshold are deleted (unless deletion would
disconnect the graph), better-supported labels replace outvoted ones, and
well-supported elements missing from the pivot are added.  With the default
threshold of 0.5 and two candidates, two competing edge labels each hold
exactly half the vote, so both are kept; this is the tie that produces
structurally corrupted merges out of clean inputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

from amr_ensemble.graph import (
    AmrGraph,
    Concept,
    Constant,
    Role,
    Variable,
    dfs_order,
    rename_variables,
)
from amr_ensemble.smatch import Alignment, compute_smatch, search_alignment

__all__ = [
    "MergeConfig",
    "VoteTally",
    "align_to_pivot",
    "merge_with_pivot",
    "graphene_base",
    "graphene_smatch",
]


@dataclass(frozen=True)
class MergeConfig:
    """Voting knobs; defaults reproduce the documented two-candidate tie."""

    vote_threshold: float = 0.5
    keep_ties: bool = True
    smatch_restarts: int = 8
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.vote_threshold <= 1):
            raise ValueError("vote_threshold must lie in (0, 1]")
        if self.smatch_restarts < 1:
            raise ValueError("smatch_restarts must be >= 1")


@dataclass(frozen=True)
class VoteTally:
    """Support bookkeeping for one element of the merged graph."""

    element: str
    support: int
    total_voters: int

    def __post_init__(self):
        if not (0 <= self.support <= self.total_voters):
            raise ValueError("support out of range")

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.support, self.total_voters)


def align_to_pivot(pivot: AmrGraph, other: AmrGraph, config: MergeConfig) -> Alignment:
    """Best found alignment from the other graph's variables to the pivot's."""
    alignment, _score = search_alignment(
        other, pivot, restarts=config.smatch_restarts, seed=config.seed
    )
    return alignment


class _PivotMerge:
    """Single-pivot merge pass; see merge_with_pivot for the contract."""

    def __init__(self, pivot: AmrGraph, others: list[AmrGraph], config: MergeConfig):
        self.pivot = pivot
        self.others = others
        self.config = config
        self.total = 1 + len(others)
        self.threshold = Fraction(config.vote_threshold)
        self.tallies: list[VoteTally] = []
        self.order = {v: i for i, v in enumerate(dfs_order(pivot))}
        # per other graph: pivot variable -> aligned other variable
        self.to_other: list[dict[Variable, Variable]] = []
        for other in others:
            alignment = align_to_pivot(pivot, other, config)
            self.to_other.append({p: o for o, p in alignment.pairs})

    def _passes(self, support: int) -> bool:
        return Fraction(support, self.total) >= self.threshold

    def _retain(self, element: str, support: int) -> None:
        self.tallies.append(VoteTally(element, support, self.total))

    # -- node phase --------------------------------------------------------

    def _node_votes(self) -> dict[Variable, int]:
        votes = {v: 1 for v in self.pivot.instances}
        for mapping in self.to_other:
            for p in mapping:
                votes[p] += 1
        return votes

    def _corrected_concept(self, p: Variable) -> Concept:
        counts: dict[Concept, int] = {}
        first_seen: dict[Concept, int] = {}
        pivot_concept = self.pivot.instances[p]
        for rank, concept in enumerate(
            [pivot_concept]
            + [
                other.instances[mapping[p]]
                for other, mapping in zip(self.others, self.to_other)
                if p in mapping
            ]
        ):
            counts[concept] = counts.get(concept, 0) + 1
            first_seen.setdefault(concept, rank)
        # highest count wins; the pivot's own concept breaks ties
        return max(
            counts,
            key=lambda c: (counts[c], c == pivot_concept, -first_seen[c]),
        )

    # -- reachability guard --------------------------------------------------

    @staticmethod
    def _reachable(
        root: Variable,
        nodes: set[Variable],
        relations: list[tuple[Variable, Role, Variable]],
    ) -> bool:
        children: dict[Variable, list[Variable]] = {v: [] for v in nodes}
        for src, _role, tgt in relations:
            children[src].append(tgt)
        seen = {root}
        stack = [root]
        while stack:
            for nxt in children[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen == nodes

    # -- merge ---------------------------------------------------------------

    def run(self) -> tuple[AmrGraph, Fraction]:
        pivot = self.pivot
        nodes = set(pivot.instances)
        relations = list(pivot.relations)

        node_votes = self._node_votes()
        for p in sorted(nodes, key=self.order.get):
            if p != pivot.root and not self._passes(node_votes[p]):
                trial_nodes = nodes - {p}
                trial_rels = [r for r in relations if r[0] != p and r[2] != p]
                if self._reachable(pivot.root, trial_nodes, trial_rels):
                    nodes, relations = trial_nodes, trial_rels
                    continue
            self._retain(f"node {p}", node_votes[p])

        # edge votes are grouped by ordered aligned endpoint pair; within a
        # group the role labels compete and the best-supported ones win
        edge_votes: dict[tuple[Variable, Variable], dict[Role, int]] = {}
        for src, role, tgt in pivot.relations:
            edge_votes.setdefault((src, tgt), {}).setdefault(role, 0)
            edge_votes[(src, tgt)][role] += 1
        for other, mapping in zip(self.others, self.to_other):
            from_other = {o: p for p, o in mapping.items()}
            for o_src, role, o_tgt in other.relations:
                p_src, p_tgt = from_other.get(o_src), from_other.get(o_tgt)
                if p_src is None or p_tgt is None:
                    continue
                edge_votes.setdefault((p_src, p_tgt), {}).setdefault(role, 0)
                edge_votes[(p_src, p_tgt)][role] += 1

        winners: dict[tuple[Variable, Variable], dict[Role, int]] = {}
        for pair, label_votes in edge_votes.items():
            if pair[0] not in nodes or pair[1] not in nodes:
                continue
            best = max(label_votes.values())
            passing = {
                role: n for role, n in label_votes.items() if self._passes(n)
            }
            if not passing:
                winners[pair] = {}
            elif self.config.keep_ties:
                winners[pair] = {r: n for r, n in passing.items() if n == best}
            else:
                pivot_labels = {
                    role for src, role, tgt in pivot.relations if (src, tgt) == pair
                }
                tied = sorted(
                    (r for r, n in passing.items() if n == best),
                    key=lambda r: (r not in pivot_labels, r.label),
                )
                winners[pair] = {tied[0]: best}

        kept_pivot: list[tuple[Variable, Role, Variable]] = []
        outvoted: list[tuple[Variable, Role, Variable]] = []
        for entry in relations:
            src, role, tgt = entry
            if role in winners.get((src, tgt), {}):
                kept_pivot.append(entry)
                self._retain(f"edge {src} {role} {tgt}", winners[(src, tgt)][role])
            else:
                outvoted.append(entry)

        present = {(src, tgt, role) for src, role, tgt in kept_pivot}
        additions: list[tuple[Variable, Role, Variable]] = []
        for pair in sorted(
            winners,
            key=lambda p: (self.order.get(p[0], 1 << 30), self.order.get(p[1], 1 << 30)),
        ):
            for role in sorted(winners[pair], key=lambda r: r.label):
                if (pair[0], pair[1], role) not in present:
                    additions.append((pair[0], role, pair[1]))
                    self._retain(
                        f"edge {pair[0]} {role} {pair[1]}", winners[pair][role]
                    )

        # deletions run against the working set that already includes the
        # additions, so relabeling an edge never trips the connectivity guard
        working = set(kept_pivot) | set(additions) | set(outvoted)
        for entry in outvoted:
            trial = list(working - {entry})
            if self._reachable(pivot.root, nodes, trial):
                working.remove(entry)
            else:
                src, role, tgt = entry
                self._retain(
                    f"edge {src} {role} {tgt}", edge_votes[(src, tgt)].get(role, 1)
                )
        relations = [e for e in relations if e in working] + additions

        # attributes: per (node, role) group the values compete
        attr_votes: dict[tuple[Variable, Role], dict[Constant, int]] = {}
        for src, role, value in pivot.attributes:
            attr_votes.setdefault((src, role), {}).setdefault(value, 0)
            attr_votes[(src, role)][value] += 1
        for other, mapping in zip(self.others, self.to_other):
            from_other = {o: p for p, o in mapping.items()}
            for o_src, role, value in other.attributes:
                p_src = from_other.get(o_src)
                if p_src is None:
                    continue
                attr_votes.setdefault((p_src, role), {}).setdefault(value, 0)
                attr_votes[(p_src, role)][value] += 1

        attr_winners: dict[tuple[Variable, Role], dict[Constant, int]] = {}
        for key, value_votes in attr_votes.items():
            if key[0] not in nodes:
                continue
            best = max(value_votes.values())
            passing = {v: n for v, n in value_votes.items() if self._passes(n)}
            if not passing:
                attr_winners[key] = {}
            elif self.config.keep_ties:
                attr_winners[key] = {v: n for v, n in passing.items() if n == best}
            else:
                pivot_values = {
                    value
                    for src, role, value in pivot.attributes
                    if (src, role) == key
                }
                tied = sorted(
                    (v for v, n in passing.items() if n == best),
                    key=lambda v: (v not in pivot_values, v.value),
                )
                attr_winners[key] = {tied[0]: best}

        attributes: list[tuple[Variable, Role, Constant]] = []
        for src, role, value in pivot.attributes:
            if src not in nodes:
                continue
            group = attr_winners.get((src, role), {})
            if value in group:
                attributes.append((src, role, value))
                self._retain(f"attribute {src} {role} {value}", group[value])
        for key in sorted(
            attr_winners, key=lambda k: (self.order.get(k[0], 1 << 30), k[1].label)
        ):
            present = {
                value for src, role, value in attributes if (src, role) == key
            }
            for value in sorted(attr_winners[key], key=lambda v: v.value):
                if value not in present:
                    attributes.append((key[0], key[1], value))
                    self._retain(
                        f"attribute {key[0]} {key[1]} {value}", attr_winners[key][value]
                    )

        # nodes present in other graphs but aligned to nothing in the pivot:
        # added when the same (concept, connecting role, aligned parent)
        # configuration is supported strongly enough on its own
        config_votes: dict[tuple[Variable, Role, Concept], int] = {}
        for other, mapping in zip(self.others, self.to_other):
            from_other = {o: p for p, o in mapping.items()}
            seen_configs: set[tuple[Variable, Role, Concept]] = set()
            for o_src, role, o_tgt in other.relations:
                if o_tgt in from_other:
                    continue
                parent = from_other.get(o_src)
                if parent is None or parent not in nodes:
                    continue
                cfg = (parent, role, other.instances[o_tgt])
                if cfg not in seen_configs:
                    seen_configs.add(cfg)
                    config_votes[cfg] = config_votes.get(cfg, 0) + 1

        instances = {v: self._corrected_concept(v) for v in pivot.instances if v in nodes}
        fresh = 0
        for cfg in sorted(
            config_votes,
            key=lambda c: (self.order.get(c[0], 1 << 30), c[1].label, c[2].label),
        ):
            if not self._passes(config_votes[cfg]):
                continue
            parent, role, concept = cfg
            while Variable(f"m{fresh}") in instances:
                fresh += 1
            new_var = Variable(f"m{fresh}")
            fresh += 1
            instances[new_var] = concept
            relations.append((parent, role, new_var))
            self._retain(f"node {new_var} ({concept})", config_votes[cfg])

        merged = AmrGraph(
            root=pivot.root,
            instances=instances,
            relations=tuple(relations),
            attributes=tuple(attributes),
        )
        support = (
            sum((t.fraction for t in self.tallies), Fraction(0)) / len(self.tallies)
            if self.tallies
            else Fraction(0)
        )
        return rename_variables(merged), support


def merge_with_pivot(
    pivot: AmrGraph, others: list[AmrGraph], config: MergeConfig | None = None
) -> tuple[AmrGraph, Fraction]:
    """Correct the pivot by votes from the other candidates.

    Every element (node, edge label between aligned endpoints, attribute
    value) is kept iff its vote fraction reaches the threshold; the pivot
    votes for its own elements and total voters = 1 + len(others).
    Competing labels between the same endpoints resolve by highest support,
    keeping all tied winners when keep_ties is set.  Supported elements
    missing from the pivot are added; deletions that would disconnect the
    graph are suppressed.  Returns the merged graph (variables canonically
    renamed) and the mean vote fraction of its retained elements.
    """
    if not others:
        raise ValueError("merge_with_pivot requires at least one other graph")
    return _PivotMerge(pivot, list(others), config or MergeConfig()).run()


def _merged_per_pivot(
    candidates: list[AmrGraph], config: MergeConfig
) -> list[tuple[AmrGraph, Fraction]]:
    return [
        merge_with_pivot(pivot, candidates[:i] + candidates[i + 1 :], config)
        for i, pivot in enumerate(candidates)
    ]


def _check_candidates(candidates: list[AmrGraph]) -> AmrGraph | None:
    if not candidates:
        raise ValueError("merging requires at least one candidate")
    if len(candidates) == 1:
        warnings.warn("single candidate: returning it unmerged", stacklevel=3)
        return candidates[0]
    return None


def graphene_base(
    candidates: list[AmrGraph], config: MergeConfig | None = None
) -> AmrGraph:
    """Merge with every candidate as pivot; return the modified pivot with
    the highest mean retained-element support (ties: lowest pivot index)."""
    passthrough = _check_candidates(candidates)
    if passthrough is not None:
        return passthrough
    config = config or MergeConfig()
    merged = _merged_per_pivot(list(candidates), config)
    best = max(range(len(merged)), key=lambda i: (merged[i][1], -i))
    return merged[best][0]


def graphene_smatch(
    candidates: list[AmrGraph], config: MergeConfig | None = None
) -> AmrGraph:
    """Merge with every candidate as pivot; return the modified pivot whose
    mean SMATCH F1 against all original candidates is highest (ties: lowest
    pivot index)."""
    passthrough = _check_candidates(candidates)
    if passthrough is not None:
        return passthrough
    config = config or MergeConfig()
    merged = _merged_per_pivot(list(candidates), config)

    def mean_f1(graph: AmrGraph) -> Fraction:
        scores = [
            compute_smatch(
                graph, other, restarts=config.smatch_restarts, seed=config.seed
            ).f1_fraction
            for other in candidates
        ]
        return sum(scores, Fraction(0)) / len(scores)

    best = max(range(len(merged)), key=lambda i: (mean_f1(merged[i][0]), -i))
    return merged[best][0]
