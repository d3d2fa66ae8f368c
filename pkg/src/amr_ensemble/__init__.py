"""Ensembling and evaluation toolkit for AMR graph predictions."""

from amr_ensemble.graph import (
    AmrGraph,
    Concept,
    Constant,
    DuplicateTripleWarning,
    GraphIntegrityError,
    LinearizedGraph,
    PenmanSyntaxError,
    Role,
    Triple,
    TripleKind,
    TripleSet,
    UnreachableVariableError,
    Variable,
    dfs_order,
    extract_triples,
    is_predicate,
    linearize,
    parse_penman,
    rename_variables,
    serialize_penman,
)
from amr_ensemble.smatch import (
    Alignment,
    AlignmentSizeError,
    BREAKDOWN_METRICS,
    BreakdownScores,
    SmatchScore,
    best_alignment_exact,
    compute_breakdown,
    compute_smatch,
    matched_count,
    search_alignment,
)
from amr_ensemble.validation import (
    ValidationReport,
    Violation,
    ViolationKind,
    count_corrupted,
    is_corrupted,
    validate_graph,
)
from amr_ensemble.merging import (
    MergeConfig,
    VoteTally,
    align_to_pivot,
    graphene_base,
    graphene_smatch,
    merge_with_pivot,
)
from amr_ensemble.scorers import (
    FileScorer,
    MockScorer,
    PerplexityScore,
    PerplexityScorer,
    ScorerError,
    ScorerRequest,
    SocketScorer,
    SubprocessScorer,
)
from amr_ensemble.selection import (
    CandidateSet,
    SelectionResult,
    select_oracle_best,
    select_ppl_avg,
    select_ppl_zero,
    select_smatch_avg,
)
from amr_ensemble.corpus import (
    CorpusEntry,
    CorpusFormatError,
    MultiSystemCorpus,
    kfold_split,
    load_multi_system,
    pair_entries,
    read_corpus,
    write_corpus,
)
from amr_ensemble.evaluate import (
    STRATEGY_NAMES,
    EvaluationRow,
    aggregate_breakdown,
    evaluate,
    render_table,
    report_document,
)

__version__ = "0.1.0"
