"""Selection ensembling: pick one candidate graph per sentence, unmodified.

Strategies: highest mean SMATCH against the other candidates, lowest
perplexity under an external scorer (with all candidates as conditioning
context, or averaged over several scorers conditioned on the sentence only),
and the oracle that peeks at the gold graph.  Selectors never synthesize
graphs, so they cannot introduce structural corruption that was not already
present among the candidates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from amr_ensemble.graph import AmrGraph, serialize_penman
from amr_ensemble.scorers import PerplexityScorer, ScorerRequest
from amr_ensemble.smatch import compute_smatch

__all__ = [
    "CandidateSet",
    "SelectionResult",
    "select_smatch_avg",
    "select_ppl_zero",
    "select_ppl_avg",
    "select_oracle_best",
]


@dataclass(frozen=True)
class CandidateSet:
    """Candidate graphs for one sentence, one per system, in system order.

    ``sentence`` may be empty for strategies that do not need it;
    ``sentence_id`` is routing metadata for offline scorers.
    """

    sentence: str
    candidates: tuple[tuple[str, AmrGraph], ...]
    sentence_id: str = ""

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("a candidate set needs at least one candidate")
        ids = [system_id for system_id, _ in self.candidates]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate system ids: {ids}")

    def __len__(self) -> int:
        return len(self.candidates)

    def graphs(self) -> list[AmrGraph]:
        return [graph for _sid, graph in self.candidates]


@dataclass(frozen=True)
class SelectionResult:
    chosen_index: int
    per_candidate_scores: tuple[float, ...]
    strategy: str

    def __post_init__(self):
        if not (0 <= self.chosen_index < len(self.per_candidate_scores)):
            raise ValueError("chosen_index out of range")


def _argmax(values: Sequence) -> int:
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def _argmin(values: Sequence) -> int:
    best = 0
    for i in range(1, len(values)):
        if values[i] < values[best]:
            best = i
    return best


def select_smatch_avg(
    candidate_set: CandidateSet, restarts: int = 8, seed: int = 0
) -> SelectionResult:
    """Choose the candidate with the highest mean SMATCH F1 against all the
    other candidates; ties go to the lowest index.  A single candidate is
    chosen with score 1.0 by convention."""
    graphs = candidate_set.graphs()
    if len(graphs) == 1:
        return SelectionResult(0, (1.0,), "smatch-avg")
    means: list[Fraction] = []
    for i, candidate in enumerate(graphs):
        total = sum(
            (
                compute_smatch(candidate, other, restarts=restarts, seed=seed).f1_fraction
                for j, other in enumerate(graphs)
                if j != i
            ),
            Fraction(0),
        )
        means.append(total / (len(graphs) - 1))
    chosen = _argmax(means)
    return SelectionResult(chosen, tuple(float(m) for m in means), "smatch-avg")


def _require_sentence(candidate_set: CandidateSet, strategy: str) -> None:
    if not candidate_set.sentence:
        raise ValueError(f"{strategy} requires the source sentence")


def select_ppl_zero(
    candidate_set: CandidateSet, scorer: PerplexityScorer
) -> SelectionResult:
    """Choose the candidate with the lowest perplexity when every candidate
    is provided as conditioning context; ties go to the lowest index."""
    _require_sentence(candidate_set, "ppl-zero")
    context = tuple(serialize_penman(g) for g in candidate_set.graphs())
    requests = [
        ScorerRequest(
            request_id=f"c{i}",
            sentence=candidate_set.sentence,
            context_graphs=context,
            target_graph=context[i],
            sentence_id=candidate_set.sentence_id,
            system_id=system_id,
        )
        for i, (system_id, _graph) in enumerate(candidate_set.candidates)
    ]
    scores = [s.value for s in scorer.score(requests)]
    return SelectionResult(_argmin(scores), tuple(scores), "ppl-zero")


def select_ppl_avg(
    candidate_set: CandidateSet, scorers: Sequence[PerplexityScorer]
) -> SelectionResult:
    """Choose the candidate with the lowest mean perplexity over the scorers,
    each conditioned on the sentence only; ties go to the lowest index.
    Any scorer failure aborts the selection."""
    if not scorers:
        raise ValueError("ppl-avg requires at least one scorer")
    _require_sentence(candidate_set, "ppl-avg")
    requests = [
        ScorerRequest(
            request_id=f"c{i}",
            sentence=candidate_set.sentence,
            context_graphs=(),
            target_graph=serialize_penman(graph),
            sentence_id=candidate_set.sentence_id,
            system_id=system_id,
        )
        for i, (system_id, graph) in enumerate(candidate_set.candidates)
    ]
    per_scorer = [[s.value for s in scorer.score(requests)] for scorer in scorers]
    means = [
        sum(column) / len(per_scorer)
        for column in zip(*per_scorer)
    ]
    return SelectionResult(_argmin(means), tuple(means), "ppl-avg")


def select_oracle_best(
    candidate_set: CandidateSet, gold: AmrGraph, restarts: int = 8, seed: int = 0
) -> SelectionResult:
    """Choose the candidate with the highest SMATCH F1 against the gold
    graph; ties go to the lowest index.  This is the ceiling any selection
    strategy can reach on the same candidates."""
    scores = [
        compute_smatch(graph, gold, restarts=restarts, seed=seed).f1_fraction
        for graph in candidate_set.graphs()
    ]
    chosen = _argmax(scores)
    return SelectionResult(chosen, tuple(float(s) for s in scores), "oracle-best")
