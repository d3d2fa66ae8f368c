"""AMR corpus files: blank-line separated blocks of metadata plus one graph.

Metadata lines look like ``# ::key value`` (``::id`` and ``::snt`` are the
load-bearing keys); all other ``#`` lines are comments.  Multi-system
prediction corpora are aligned by ``::id`` when every file carries explicit
ids, otherwise positionally with equal lengths required.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from amr_ensemble.graph import AmrGraph, PenmanSyntaxError, parse_penman, serialize_penman
from amr_ensemble.selection import CandidateSet

__all__ = [
    "CorpusEntry",
    "CorpusFormatError",
    "MultiSystemCorpus",
    "read_corpus",
    "write_corpus",
    "load_multi_system",
    "pair_entries",
    "kfold_split",
]


class CorpusFormatError(ValueError):
    """Malformed corpus file (bad block, bad graph, duplicate ids...)."""


@dataclass(frozen=True)
class CorpusEntry:
    """One corpus block: id, source sentence (may be empty), graph, and the
    ordered raw metadata pairs exactly as they appear in the file."""

    id: str
    sentence: str
    graph: AmrGraph
    metadata: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        declared = dict(self.metadata)
        if "id" in declared and declared["id"] != self.id:
            raise CorpusFormatError(
                f"entry id {self.id!r} disagrees with metadata id {declared['id']!r}"
            )
        if "snt" in declared and declared["snt"] != self.sentence:
            raise CorpusFormatError(
                f"entry sentence disagrees with metadata snt for id {self.id!r}"
            )


_METADATA_RE = re.compile(r"#\s*::(\S+)[ \t]?(.*)$")


def _split_blocks(text: str) -> list[tuple[int, list[str]]]:
    """Blocks of non-blank lines with the 1-based line number they start at."""
    blocks: list[tuple[int, list[str]]] = []
    current: list[str] = []
    start = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            if not current:
                start = lineno
            current.append(line)
        elif current:
            blocks.append((start, current))
            current = []
    if current:
        blocks.append((start, current))
    return blocks


def read_corpus(path: str | Path) -> list[CorpusEntry]:
    """Read a corpus file; ids default to the 0-based block index when no
    ``::id`` metadata is present."""
    text = Path(path).read_text(encoding="utf-8")
    entries: list[CorpusEntry] = []
    seen_ids: set[str] = set()
    for block_index, (start_line, lines) in enumerate(_split_blocks(text)):
        metadata: list[tuple[str, str]] = []
        graph_lines: list[str] = []
        graph_start = start_line
        for offset, line in enumerate(lines):
            m = _METADATA_RE.match(line)
            if m:
                metadata.append((m.group(1), m.group(2).strip()))
            elif line.lstrip().startswith("#"):
                continue
            else:
                if not graph_lines:
                    graph_start = start_line + offset
                graph_lines.append(line)
        if not graph_lines:
            raise CorpusFormatError(
                f"{path}: block {block_index} (line {start_line}) has no graph"
            )
        try:
            graph = parse_penman("\n".join(graph_lines))
        except PenmanSyntaxError as exc:
            raise CorpusFormatError(
                f"{path}: block {block_index}: bad graph near line "
                f"{graph_start + exc.line - 1}: {exc}"
            ) from exc
        declared = dict(metadata)
        entry_id = declared.get("id", str(block_index))
        if entry_id in seen_ids:
            raise CorpusFormatError(f"{path}: duplicate id {entry_id!r}")
        seen_ids.add(entry_id)
        entries.append(
            CorpusEntry(
                id=entry_id,
                sentence=declared.get("snt", ""),
                graph=graph,
                metadata=tuple(metadata),
            )
        )
    return entries


def write_corpus(entries: Sequence[CorpusEntry], path: str | Path) -> None:
    """Write blocks that read_corpus inverts; ``::id`` (and ``::snt`` when a
    sentence is present) are always emitted even if absent from metadata."""
    blocks: list[str] = []
    for entry in entries:
        metadata = list(entry.metadata)
        keys = {k for k, _ in metadata}
        if "snt" not in keys and entry.sentence:
            metadata.insert(0, ("snt", entry.sentence))
        if "id" not in keys:
            metadata.insert(0, ("id", entry.id))
        lines = [f"# ::{key} {value}".rstrip() for key, value in metadata]
        lines.append(serialize_penman(entry.graph))
        blocks.append("\n".join(lines))
    Path(path).write_text("\n\n".join(blocks) + ("\n" if blocks else ""), encoding="utf-8")


def _all_explicit_ids(corpora: Sequence[Sequence[CorpusEntry]]) -> bool:
    return all(
        any(key == "id" for key, _ in entry.metadata)
        for entries in corpora
        for entry in entries
    )


def pair_entries(
    left: Sequence[CorpusEntry], right: Sequence[CorpusEntry]
) -> list[tuple[CorpusEntry, CorpusEntry]]:
    """Pair two corpora by explicit ::id when both carry it, else by order.

    Positional pairing requires equal lengths; id pairing requires equal id
    sets.  Used for prediction-vs-gold scoring.
    """
    if _all_explicit_ids([left, right]):
        right_by_id = {e.id: e for e in right}
        missing = [e.id for e in left if e.id not in right_by_id]
        extra = [e.id for e in right if e.id not in {x.id for x in left}]
        if missing or extra:
            raise CorpusFormatError(
                f"id mismatch: missing from second corpus {missing[:5]}, "
                f"unmatched in second corpus {extra[:5]}"
            )
        return [(e, right_by_id[e.id]) for e in left]
    if len(left) != len(right):
        raise CorpusFormatError(
            f"cannot pair corpora by order: {len(left)} vs {len(right)} entries"
        )
    return list(zip(left, right))


class MultiSystemCorpus:
    """Aligned predictions from several systems over one corpus."""

    def __init__(
        self,
        systems: Sequence[str],
        ids: Sequence[str],
        sentences: dict[str, str],
        graphs: dict[str, dict[str, AmrGraph]],
    ):
        self.systems = tuple(systems)
        self.ids = tuple(ids)
        self.sentences = dict(sentences)
        self.graphs = {k: dict(v) for k, v in graphs.items()}
        for entry_id in self.ids:
            missing = [s for s in self.systems if s not in self.graphs.get(entry_id, {})]
            if missing:
                raise CorpusFormatError(
                    f"entry {entry_id!r} lacks predictions from: {missing}"
                )

    def __len__(self) -> int:
        return len(self.ids)

    def candidate_set(self, entry_id: str) -> CandidateSet:
        return CandidateSet(
            sentence=self.sentences.get(entry_id, ""),
            candidates=tuple(
                (system, self.graphs[entry_id][system]) for system in self.systems
            ),
            sentence_id=entry_id,
        )


def load_multi_system(
    named_corpora: Sequence[tuple[str, Sequence[CorpusEntry]]],
) -> MultiSystemCorpus:
    """Align one corpus per system.

    When every file carries explicit ids the id sets must agree and entries
    align by id (order taken from the first system); otherwise all files
    must have the same length and entries align positionally, inheriting ids
    from the first system.
    """
    if not named_corpora:
        raise CorpusFormatError("no system corpora given")
    names = [name for name, _ in named_corpora]
    if len(set(names)) != len(names):
        raise CorpusFormatError(f"duplicate system names: {names}")

    first_entries = list(named_corpora[0][1])
    graphs: dict[str, dict[str, AmrGraph]] = {}
    sentences: dict[str, str] = {}

    if _all_explicit_ids([entries for _, entries in named_corpora]):
        ids = [e.id for e in first_entries]
        id_set = set(ids)
        for name, entries in named_corpora:
            got = {e.id for e in entries}
            if got != id_set:
                raise CorpusFormatError(
                    f"system {name!r} id set differs: missing {sorted(id_set - got)[:5]}, "
                    f"extra {sorted(got - id_set)[:5]}"
                )
            for e in entries:
                graphs.setdefault(e.id, {})[name] = e.graph
                if e.sentence and not sentences.get(e.id):
                    sentences[e.id] = e.sentence
    else:
        lengths = {name: len(entries) for name, entries in named_corpora}
        if len(set(lengths.values())) != 1:
            raise CorpusFormatError(
                f"corpora lack ids and differ in length, cannot align by order: {lengths}"
            )
        ids = [e.id for e in first_entries]
        for name, entries in named_corpora:
            for entry_id, e in zip(ids, entries):
                graphs.setdefault(entry_id, {})[name] = e.graph
                if e.sentence and not sentences.get(entry_id):
                    sentences[entry_id] = e.sentence
    return MultiSystemCorpus(names, ids, sentences, graphs)


def kfold_split(
    entries: Sequence[CorpusEntry], k: int, seed: int
) -> list[tuple[list[CorpusEntry], list[CorpusEntry]]]:
    """Seeded-shuffle partition into k (train, test) pairs.

    Test sets are pairwise disjoint, cover the corpus, and their sizes
    differ by at most one; each train set is the complement of its test
    set.  Entries keep corpus order within every fold file.
    """
    n = len(entries)
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"cannot split {n} entries into {k} folds")
    indices = list(range(n))
    random.Random(seed).shuffle(indices)
    folds: list[tuple[list[CorpusEntry], list[CorpusEntry]]] = []
    for i in range(k):
        test_idx = set(indices[i::k])
        test = [entries[j] for j in range(n) if j in test_idx]
        train = [entries[j] for j in range(n) if j not in test_idx]
        folds.append((train, test))
    return folds
