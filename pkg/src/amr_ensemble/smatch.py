"""SMATCH graph similarity: alignment search, exact oracle, breakdown metrics.

SMATCH is the F1 over the maximum triple overlap between two graphs, where
the maximum is taken over injective alignments of candidate variables to
reference variables.  Finding the true maximum is NP-hard; `compute_smatch`
approximates it with restarted hill climbing while `best_alignment_exact`
enumerates every alignment for small graphs and serves as the oracle the
heuristic is validated against.

The breakdown suite re-runs the same matching machinery over transformed
triple sets (edge labels removed, sense suffixes stripped, role-filtered
subsets) to produce the customary fine-grained scores.
"""

from __future__ import annotations

import hashlib
import itertools
import random
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from amr_ensemble.graph import (
    AmrGraph,
    Concept,
    Role,
    Triple,
    TripleKind,
    TripleSet,
    Variable,
    extract_triples,
    instance_triple,
    relation_triple,
)

__all__ = [
    "Alignment",
    "SmatchScore",
    "BreakdownScores",
    "AlignmentSizeError",
    "matched_count",
    "best_alignment_exact",
    "compute_smatch",
    "search_alignment",
    "compute_breakdown",
    "BREAKDOWN_METRICS",
]


class AlignmentSizeError(ValueError):
    """Raised when a graph pair is too large for exact alignment enumeration."""


@dataclass(frozen=True)
class Alignment:
    """A partial injective map from candidate variables to reference variables."""

    pairs: tuple[tuple[Variable, Variable], ...]

    def __post_init__(self):
        sources = [s for s, _ in self.pairs]
        targets = [t for _, t in self.pairs]
        if len(set(sources)) != len(sources):
            raise ValueError("alignment maps a candidate variable twice")
        if len(set(targets)) != len(targets):
            raise ValueError("alignment is not injective")

    def as_dict(self) -> dict[Variable, Variable]:
        return dict(self.pairs)

    def get(self, var: Variable) -> Variable | None:
        return self.as_dict().get(var)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class SmatchScore:
    """Matched/total triple counts with derived precision, recall and F1.

    When both sides are empty the score is 1.0 by convention (nothing was
    required and nothing spurious produced); when exactly one side is empty
    every ratio is 0.0.
    """

    matched: int
    candidate_total: int
    reference_total: int

    def __post_init__(self):
        if not (0 <= self.matched <= max(self.candidate_total, self.reference_total)):
            raise ValueError("matched count out of range")
        if self.matched > min(self.candidate_total, self.reference_total):
            raise ValueError("matched exceeds a triple total")

    @property
    def _both_empty(self) -> bool:
        return self.candidate_total == 0 and self.reference_total == 0

    @property
    def precision(self) -> float:
        return float(self.precision_fraction)

    @property
    def recall(self) -> float:
        return float(self.recall_fraction)

    @property
    def f1(self) -> float:
        return float(self.f1_fraction)

    @property
    def precision_fraction(self) -> Fraction:
        if self._both_empty:
            return Fraction(1)
        if self.candidate_total == 0:
            return Fraction(0)
        return Fraction(self.matched, self.candidate_total)

    @property
    def recall_fraction(self) -> Fraction:
        if self._both_empty:
            return Fraction(1)
        if self.reference_total == 0:
            return Fraction(0)
        return Fraction(self.matched, self.reference_total)

    @property
    def f1_fraction(self) -> Fraction:
        # 2PR/(P+R) algebraically reduces to 2m/(ct+rt)
        if self._both_empty:
            return Fraction(1)
        if self.matched == 0:
            return Fraction(0)
        return Fraction(2 * self.matched, self.candidate_total + self.reference_total)

    def swapped(self) -> "SmatchScore":
        return SmatchScore(self.matched, self.reference_total, self.candidate_total)


@dataclass(frozen=True)
class BreakdownScores:
    """The fine-grained metric suite; every field is a SmatchScore."""

    smatch: SmatchScore
    unlabeled: SmatchScore
    no_wsd: SmatchScore
    concepts: SmatchScore
    ner: SmatchScore
    negations: SmatchScore
    wiki: SmatchScore
    reentrancies: SmatchScore
    srl: SmatchScore

    def as_dict(self) -> dict[str, SmatchScore]:
        return {name: getattr(self, name) for name in BREAKDOWN_METRICS}


BREAKDOWN_METRICS = (
    "smatch",
    "unlabeled",
    "no_wsd",
    "concepts",
    "ner",
    "negations",
    "wiki",
    "reentrancies",
    "srl",
)


def matched_count(
    candidate: TripleSet, reference: TripleSet, alignment: Alignment
) -> int:
    """Count candidate triples that equal a reference triple after mapping
    candidate variables through the alignment.

    This is the plain definitional counting path; the search internals keep
    an indexed equivalent and are checked against this in the test suite.
    """
    mapping = alignment.as_dict()
    ref_keys = {
        (t.kind, t.source, t.role, t.target) for t in reference
    }

    def mapped(v):
        return mapping.get(v) if isinstance(v, Variable) else v

    count = 0
    for t in candidate:
        src = mapped(t.source) if t.source is not None else None
        if t.source is not None and src is None:
            continue
        tgt = mapped(t.target)
        if isinstance(t.target, Variable) and tgt is None:
            continue
        if (t.kind, src, t.role, tgt) in ref_keys:
            count += 1
    return count


# ---------------------------------------------------------------------------
# Matching internals
# ---------------------------------------------------------------------------


class _MatchContext:
    """Indexed form of a (candidate, reference) triple-set pair.

    Variables become integer indices; per-pair unary scores (instances,
    attributes, the root correspondence) live in a dense matrix and relation
    correspondences in a pair table so assignments can be scored and move
    deltas evaluated without touching triple objects.
    """

    def __init__(self, candidate: TripleSet, reference: TripleSet):
        self.cand_vars = list(candidate.variables())
        self.ref_vars = list(reference.variables())
        self.cand_total = len(candidate)
        self.ref_total = len(reference)
        n, m = len(self.cand_vars), len(self.ref_vars)
        self.n, self.m = n, m
        cidx = {v: i for i, v in enumerate(self.cand_vars)}
        ridx = {v: j for j, v in enumerate(self.ref_vars)}

        self.unary = np.zeros((n, m), dtype=np.int32)

        def split(ts: TripleSet):
            root = None
            instances: dict[Variable, Concept] = {}
            relations: list[tuple[Variable, Role, Variable]] = []
            attributes: dict[Variable, set[tuple[Role, object]]] = {}
            for t in ts:
                if t.kind is TripleKind.ROOT:
                    root = t.target
                elif t.kind is TripleKind.INSTANCE:
                    instances[t.source] = t.target
                elif t.kind is TripleKind.RELATION:
                    relations.append((t.source, t.role, t.target))
                else:
                    attributes.setdefault(t.source, set()).add((t.role, t.target))
            return root, instances, relations, attributes

        c_root, c_inst, c_rels, c_attrs = split(candidate)
        r_root, r_inst, r_rels, r_attrs = split(reference)

        if n and m:
            if c_root is not None and r_root is not None:
                self.unary[cidx[c_root], ridx[r_root]] += 1
            for cv, cc in c_inst.items():
                for rv, rc in r_inst.items():
                    if cc == rc:
                        self.unary[cidx[cv], ridx[rv]] += 1
            for cv, cset in c_attrs.items():
                for rv, rset in r_attrs.items():
                    common = len(cset & rset)
                    if common:
                        self.unary[cidx[cv], ridx[rv]] += common

        by_role: dict[Role, list[tuple[int, int]]] = {}
        for rv_src, role, rv_tgt in r_rels:
            by_role.setdefault(role, []).append((ridx[rv_src], ridx[rv_tgt]))
        pairs: list[tuple[int, int, int, int]] = []
        for cv_src, role, cv_tgt in c_rels:
            for j, l in by_role.get(role, ()):
                pairs.append((cidx[cv_src], cidx[cv_tgt], j, l))
        self.rel_pairs = (
            np.asarray(pairs, dtype=np.int32)
            if pairs
            else np.zeros((0, 4), dtype=np.int32)
        )
        touching: list[list[int]] = [[] for _ in range(n)]
        for p, (i, k, _j, _l) in enumerate(pairs):
            touching[i].append(p)
            if k != i:
                touching[k].append(p)
        self.pairs_by_var = [np.asarray(t, dtype=np.int64) for t in touching]

    def score(self, assignment: np.ndarray) -> int:
        if self.n == 0 or self.m == 0:
            return 0
        assigned = assignment >= 0
        total = int(self.unary[np.nonzero(assigned)[0], assignment[assigned]].sum())
        if len(self.rel_pairs):
            p = self.rel_pairs
            sat = (assignment[p[:, 0]] == p[:, 2]) & (assignment[p[:, 1]] == p[:, 3])
            total += int(sat.sum())
        return total

    def score_batch(self, block: np.ndarray) -> np.ndarray:
        # block rows are total assignments of every candidate variable
        totals = self.unary[np.arange(self.n)[None, :], block].sum(axis=1)
        if len(self.rel_pairs):
            p = self.rel_pairs
            sat = (block[:, p[:, 0]] == p[None, :, 2]) & (
                block[:, p[:, 1]] == p[None, :, 3]
            )
            totals = totals + sat.sum(axis=1)
        return totals.astype(np.int64, copy=False)

    def _contribution(self, assignment: np.ndarray, vars_idx: list[int]) -> int:
        total = 0
        for i in vars_idx:
            if assignment[i] >= 0:
                total += int(self.unary[i, assignment[i]])
        if len(vars_idx) == 1:
            pair_idx = self.pairs_by_var[vars_idx[0]]
        else:
            pair_idx = np.union1d(*(self.pairs_by_var[i] for i in vars_idx))
        if len(pair_idx):
            p = self.rel_pairs[pair_idx]
            sat = (assignment[p[:, 0]] == p[:, 2]) & (assignment[p[:, 1]] == p[:, 3])
            total += int(sat.sum())
        return total

    def reassign_delta(self, assignment: np.ndarray, i: int, j: int) -> int:
        before = self._contribution(assignment, [i])
        old = assignment[i]
        assignment[i] = j
        after = self._contribution(assignment, [i])
        assignment[i] = old
        return after - before

    def swap_delta(self, assignment: np.ndarray, i: int, k: int) -> int:
        before = self._contribution(assignment, [i, k])
        assignment[i], assignment[k] = assignment[k], assignment[i]
        after = self._contribution(assignment, [i, k])
        assignment[i], assignment[k] = assignment[k], assignment[i]
        return after - before


def _climb(ctx: _MatchContext, assignment: np.ndarray) -> int:
    """Steepest-ascent local search; mutates assignment, returns its score.

    Moves are single reassignments to an unused reference variable and
    pairwise swaps of two candidates' images.  Ties break toward the move
    enumerated first (reassignments before swaps, lowest indices first), so
    a climb is fully determined by its start point.
    """
    current = ctx.score(assignment)
    n, m = ctx.n, ctx.m
    while True:
        best_delta = 0
        best_move = None
        used = {int(j) for j in assignment if j >= 0}
        free = [j for j in range(m) if j not in used]
        for i in range(n):
            for j in free:
                delta = ctx.reassign_delta(assignment, i, j)
                if delta > best_delta:
                    best_delta, best_move = delta, ("reassign", i, j)
        for i in range(n):
            for k in range(i + 1, n):
                if assignment[i] == assignment[k]:
                    continue
                delta = ctx.swap_delta(assignment, i, k)
                if delta > best_delta:
                    best_delta, best_move = delta, ("swap", i, k)
        if best_move is None:
            return current
        kind, a, b = best_move
        if kind == "reassign":
            assignment[a] = b
        else:
            assignment[a], assignment[b] = assignment[b], assignment[a]
        current += best_delta


def _greedy_init(ctx: _MatchContext, candidate: TripleSet, reference: TripleSet) -> np.ndarray:
    """Concept-match initialization: pair variables with equal concepts first,
    then fill remaining slots in order so the assignment is maximal."""
    cand_concepts: dict[Variable, Concept] = {}
    ref_concepts: dict[Variable, Concept] = {}
    for t in candidate:
        if t.kind is TripleKind.INSTANCE:
            cand_concepts[t.source] = t.target
    for t in reference:
        if t.kind is TripleKind.INSTANCE:
            ref_concepts[t.source] = t.target

    assignment = np.full(ctx.n, -1, dtype=np.int64)
    used: set[int] = set()
    for i, cv in enumerate(ctx.cand_vars):
        concept = cand_concepts.get(cv)
        if concept is None:
            continue
        for j, rv in enumerate(ctx.ref_vars):
            if j not in used and ref_concepts.get(rv) == concept:
                assignment[i] = j
                used.add(j)
                break
    free = iter([j for j in range(ctx.m) if j not in used])
    for i in range(ctx.n):
        if assignment[i] < 0:
            nxt = next(free, None)
            if nxt is None:
                break
            assignment[i] = nxt
    return assignment


def _random_init(ctx: _MatchContext, rng: random.Random) -> np.ndarray:
    assignment = np.full(ctx.n, -1, dtype=np.int64)
    if ctx.n <= ctx.m:
        images = rng.sample(range(ctx.m), ctx.n)
        assignment[:] = images
    else:
        slots = rng.sample(range(ctx.n), ctx.m)
        images = rng.sample(range(ctx.m), ctx.m)
        assignment[slots] = images
    return assignment


def _pair_seed(seed: int, candidate: TripleSet, reference: TripleSet, tag: str = "") -> int:
    """Derive a per-pair RNG seed from graph content.

    Hash-based (not `hash()`) so results are stable across processes, and
    content-based so parallel corpus scoring is order-independent.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(seed).encode())
    h.update(tag.encode())
    for t in candidate:
        h.update(b"\x00" + str(t).encode())
    h.update(b"\x01")
    for t in reference:
        h.update(b"\x00" + str(t).encode())
    return int.from_bytes(h.digest(), "big")


def _search_sets(
    candidate: TripleSet,
    reference: TripleSet,
    restarts: int,
    rng: random.Random,
) -> tuple[Alignment, SmatchScore]:
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    ctx = _MatchContext(candidate, reference)
    if ctx.n == 0 or ctx.m == 0:
        score = SmatchScore(0, ctx.cand_total, ctx.ref_total)
        return Alignment(()), score

    best_assignment: np.ndarray | None = None
    best = -1
    for attempt in range(restarts):
        if attempt == 0:
            assignment = _greedy_init(ctx, candidate, reference)
        else:
            assignment = _random_init(ctx, rng)
        score = _climb(ctx, assignment)
        if score > best:
            best = score
            best_assignment = assignment
    assert best_assignment is not None
    pairs = tuple(
        (ctx.cand_vars[i], ctx.ref_vars[int(j)])
        for i, j in enumerate(best_assignment)
        if j >= 0
    )
    return Alignment(pairs), SmatchScore(best, ctx.cand_total, ctx.ref_total)


def search_alignment(
    candidate: AmrGraph,
    reference: AmrGraph,
    restarts: int = 8,
    seed: int = 0,
) -> tuple[Alignment, SmatchScore]:
    """Hill-climbing alignment search returning the alignment with its score.

    One greedy concept-match start plus ``restarts - 1`` random starts; each
    start climbs to a local maximum.  Deterministic for fixed seed, and the
    per-pair RNG is derived from graph content so corpus-level parallelism
    cannot perturb results.
    """
    cand_ts = extract_triples(candidate)
    ref_ts = extract_triples(reference)
    rng = random.Random(_pair_seed(seed, cand_ts, ref_ts))
    return _search_sets(cand_ts, ref_ts, restarts, rng)


def compute_smatch(
    candidate: AmrGraph,
    reference: AmrGraph,
    restarts: int = 8,
    seed: int = 0,
) -> SmatchScore:
    """SMATCH score via hill-climbing alignment search (see search_alignment)."""
    _, score = search_alignment(candidate, reference, restarts=restarts, seed=seed)
    return score


# ---------------------------------------------------------------------------
# Exact oracle
# ---------------------------------------------------------------------------

_EXACT_CHUNK = 100_000


def _exact_search_sets(
    candidate: TripleSet, reference: TripleSet
) -> tuple[Alignment, SmatchScore]:
    ctx = _MatchContext(candidate, reference)
    if ctx.n == 0 or ctx.m == 0:
        return Alignment(()), SmatchScore(0, ctx.cand_total, ctx.ref_total)
    if ctx.n <= ctx.m:
        assignment, best = _enumerate_exact(ctx)
        pairs = tuple(
            (ctx.cand_vars[i], ctx.ref_vars[int(j)])
            for i, j in enumerate(assignment)
        )
    else:
        # enumerate the smaller (reference) side and invert; matching is
        # symmetric under inversion of a bijection-on-the-mapped-set
        swapped = _MatchContext(reference, candidate)
        assignment, best = _enumerate_exact(swapped)
        pairs = tuple(
            (ctx.cand_vars[int(j)], ctx.ref_vars[i])
            for i, j in enumerate(assignment)
        )
    return Alignment(pairs), SmatchScore(best, ctx.cand_total, ctx.ref_total)


def _enumerate_exact(ctx: _MatchContext) -> tuple[np.ndarray, int]:
    """Score every injective total assignment of the n candidate variables
    into the m >= n reference variables, in chunks; first maximum wins."""
    best_score = -1
    best_assignment: np.ndarray | None = None
    perms = itertools.permutations(range(ctx.m), ctx.n)
    while True:
        block = list(itertools.islice(perms, _EXACT_CHUNK))
        if not block:
            break
        arr = np.asarray(block, dtype=np.int64)
        scores = ctx.score_batch(arr)
        idx = int(np.argmax(scores))
        if int(scores[idx]) > best_score:
            best_score = int(scores[idx])
            best_assignment = arr[idx].copy()
    assert best_assignment is not None
    return best_assignment, best_score


def best_alignment_exact(
    candidate: AmrGraph,
    reference: AmrGraph,
    size_bound: int = 10,
) -> tuple[Alignment, SmatchScore]:
    """Brute-force optimal alignment; the validation oracle for the heuristic.

    Enumerates all injective maps over the smaller variable side (extending
    a partial map never lowers the matched count, so a total-on-the-smaller-
    side optimum always exists).  Refuses pairs whose smaller side exceeds
    size_bound; cost grows as P(larger, smaller).
    """
    cand_ts = extract_triples(candidate)
    ref_ts = extract_triples(reference)
    n = len(cand_ts.variables())
    m = len(ref_ts.variables())
    if min(n, m) > size_bound:
        raise AlignmentSizeError(
            f"exact alignment infeasible: min({n}, {m}) exceeds bound {size_bound}"
        )
    return _exact_search_sets(cand_ts, ref_ts)


# ---------------------------------------------------------------------------
# Breakdown metrics
# ---------------------------------------------------------------------------

_DUMMY_ROLE = Role(":dep")
_SENSE_SUFFIX = re.compile(r"-\d{2,3}$")
_SRL_ROLE = re.compile(r":ARG\d+(-of)?$")
_OP_ROLE = re.compile(r":op[1-9]\d*$")
_NAME_ROLE = Role(":name")
_POLARITY_ROLE = Role(":polarity")
_WIKI_ROLE = Role(":wiki")


def _dedupe(triples: list[Triple]) -> TripleSet:
    seen: dict[Triple, None] = {}
    for t in triples:
        seen.setdefault(t, None)
    return TripleSet(tuple(seen))


def _transform_unlabeled(graph: AmrGraph) -> TripleSet:
    out: list[Triple] = []
    for t in extract_triples(graph):
        if t.kind is TripleKind.RELATION:
            out.append(Triple(t.kind, t.source, _DUMMY_ROLE, t.target))
        else:
            out.append(t)
    # distinct roles between the same endpoints collapse once unlabeled
    return _dedupe(out)


def _strip_sense(concept: Concept) -> Concept:
    stripped = _SENSE_SUFFIX.sub("", concept.label)
    return Concept(stripped) if stripped else concept


def _transform_no_wsd(graph: AmrGraph) -> TripleSet:
    out: list[Triple] = []
    for t in extract_triples(graph):
        if t.kind is TripleKind.INSTANCE:
            out.append(Triple(t.kind, t.source, t.role, _strip_sense(t.target)))
        else:
            out.append(t)
    return _dedupe(out)


def _transform_concepts(graph: AmrGraph) -> TripleSet:
    return TripleSet(extract_triples(graph).of_kind(TripleKind.INSTANCE))


def _transform_ner(graph: AmrGraph) -> TripleSet:
    name = Concept("name")
    out: list[Triple] = []
    for v, c in graph.instances.items():
        if c == name:
            out.append(instance_triple(v, c))
    for src, role, tgt in graph.relations:
        if role == _NAME_ROLE:
            out.append(relation_triple(src, role, tgt))
    for src, role, value in graph.attributes:
        if graph.instances[src] == name and _OP_ROLE.fullmatch(role.label):
            out.append(Triple(TripleKind.ATTRIBUTE, src, role, value))
    return _dedupe(out)


def _transform_negations(graph: AmrGraph) -> TripleSet:
    out: list[Triple] = []
    for src, role, tgt in graph.relations:
        if role == _POLARITY_ROLE:
            out.append(relation_triple(src, role, tgt))
    for src, role, value in graph.attributes:
        if role == _POLARITY_ROLE:
            out.append(Triple(TripleKind.ATTRIBUTE, src, role, value))
    return _dedupe(out)


def _transform_wiki(graph: AmrGraph) -> TripleSet:
    out = [
        Triple(TripleKind.ATTRIBUTE, src, role, value)
        for src, role, value in graph.attributes
        if role == _WIKI_ROLE
    ]
    return _dedupe(out)


def _relations_with_instances(
    graph: AmrGraph, selected: list[tuple[Variable, Role, Variable]]
) -> TripleSet:
    endpoints: dict[Variable, None] = {}
    for src, _role, tgt in selected:
        endpoints.setdefault(src, None)
        endpoints.setdefault(tgt, None)
    out: list[Triple] = [
        instance_triple(v, graph.instances[v]) for v in endpoints
    ]
    out.extend(relation_triple(*rel) for rel in selected)
    return _dedupe(out)


def _transform_reentrancies(graph: AmrGraph) -> TripleSet:
    in_degree: dict[Variable, int] = {}
    for _src, _role, tgt in graph.relations:
        in_degree[tgt] = in_degree.get(tgt, 0) + 1
    selected = [rel for rel in graph.relations if in_degree[rel[2]] >= 2]
    return _relations_with_instances(graph, selected)


def _transform_srl(graph: AmrGraph) -> TripleSet:
    selected = [
        rel for rel in graph.relations if _SRL_ROLE.fullmatch(rel[1].label)
    ]
    return _relations_with_instances(graph, selected)


_TRANSFORMS = {
    "smatch": extract_triples,
    "unlabeled": _transform_unlabeled,
    "no_wsd": _transform_no_wsd,
    "concepts": _transform_concepts,
    "ner": _transform_ner,
    "negations": _transform_negations,
    "wiki": _transform_wiki,
    "reentrancies": _transform_reentrancies,
    "srl": _transform_srl,
}


def compute_breakdown(
    candidate: AmrGraph,
    reference: AmrGraph,
    restarts: int = 8,
    seed: int = 0,
) -> BreakdownScores:
    """Run the full metric suite; each sub-metric independently re-aligns
    the transformed triple sets with the standard search."""
    scores: dict[str, SmatchScore] = {}
    for name in BREAKDOWN_METRICS:
        transform = _TRANSFORMS[name]
        cand_ts = transform(candidate)
        ref_ts = transform(reference)
        rng = random.Random(_pair_seed(seed, cand_ts, ref_ts, tag=name))
        _, scores[name] = _search_sets(cand_ts, ref_ts, restarts, rng)
    return BreakdownScores(**scores)
