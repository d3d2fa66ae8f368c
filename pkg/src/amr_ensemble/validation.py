"""Structural well-formedness checks for AMR graphs.

Four violation classes are detected: argument roles on non-predicate nodes,
enumeration roles on predicate nodes, malformed named-entity structures, and
malformed connector/multi-sentence structures.  Validation never fails; it
reports.  A graph is "corrupted" when its report is non-empty.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from amr_ensemble.graph import (
    AmrGraph,
    Role,
    Variable,
    dfs_order,
    is_predicate,
)

__all__ = [
    "ViolationKind",
    "Violation",
    "ValidationReport",
    "validate_graph",
    "is_corrupted",
    "count_corrupted",
]


class ViolationKind(Enum):
    ARG_ON_NON_PREDICATE = "ArgOnNonPredicate"
    OP_OR_SNT_ON_PREDICATE = "OpOrSntOnPredicate"
    ENTITY_STRUCTURE = "EntityStructure"
    CONNECTOR_STRUCTURE = "ConnectorStructure"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    variable: Variable
    role: Role | None
    message: str

    def __str__(self) -> str:
        loc = f"{self.variable}" + (f" {self.role}" if self.role else "")
        return f"{self.kind.value} at {loc}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def kinds(self) -> set[ViolationKind]:
        return {v.kind for v in self.violations}


_ARG_ROLE = re.compile(r":ARG\d+(-of)?$")
_OP_ROLE = re.compile(r":op([1-9]\d*)$")
_SNT_ROLE = re.compile(r":snt([1-9]\d*)$")
_NAME_ROLE = ":name"
_WIKI_ROLE = ":wiki"
_CONNECTOR_CONCEPTS = {"and", "or", "either", "neither"}
_MULTI_SENTENCE = "multi-sentence"


def _contiguous_from_one(numbers: Iterable[int]) -> bool:
    ordered = sorted(numbers)
    return ordered == list(range(1, len(ordered) + 1))


def validate_graph(graph: AmrGraph) -> ValidationReport:
    """Run the four structural checks and report every offense.

    Check (i): an outgoing :ARGn / :ARGn-of role (relation or attribute) on a
    node whose concept is not a predicate frame.
    Check (ii): an outgoing :opN / :sntN role on a predicate node.
    Check (iii): a node with concept "name" may carry only :opN constant
    attributes, numbered contiguously from 1 with at least one present, and
    must be the target of a :name edge; :wiki may only appear on a node with
    an outgoing :name edge.
    Check (iv): connector nodes (and/or/either/neither) need >= 2 :opN roles
    contiguous from 1 and must not carry :sntN; multi-sentence nodes must
    number their :sntN contiguously from 1.

    Violations are ordered by source variable in depth-first order, then by
    role label, so reports are stable across runs.
    """
    violations: list[Violation] = []
    outgoing: dict[Variable, list[tuple[Role, bool]]] = {
        v: [] for v in graph.instances
    }
    # (role, is_relation) per source, in stored order
    for src, role, _tgt in graph.relations:
        outgoing[src].append((role, True))
    for src, role, _val in graph.attributes:
        outgoing[src].append((role, False))
    name_edge_targets = {tgt for _src, role, tgt in graph.relations if role.label == _NAME_ROLE}
    name_edge_sources = {src for src, role, _tgt in graph.relations if role.label == _NAME_ROLE}

    for var in graph.instances:
        concept = graph.instances[var]
        predicate = is_predicate(concept)
        roles = outgoing[var]

        for role, _is_rel in roles:
            if _ARG_ROLE.fullmatch(role.label) and not predicate:
                violations.append(
                    Violation(
                        ViolationKind.ARG_ON_NON_PREDICATE,
                        var,
                        role,
                        f"argument role {role} on non-predicate concept '{concept}'",
                    )
                )
            if (_OP_ROLE.fullmatch(role.label) or _SNT_ROLE.fullmatch(role.label)) and predicate:
                violations.append(
                    Violation(
                        ViolationKind.OP_OR_SNT_ON_PREDICATE,
                        var,
                        role,
                        f"enumeration role {role} on predicate concept '{concept}'",
                    )
                )

        if concept.label == "name":
            op_numbers: list[int] = []
            for role, is_rel in roles:
                m = _OP_ROLE.fullmatch(role.label)
                if m and not is_rel:
                    op_numbers.append(int(m.group(1)))
                else:
                    violations.append(
                        Violation(
                            ViolationKind.ENTITY_STRUCTURE,
                            var,
                            role,
                            f"name node carries {role} "
                            + ("relation" if is_rel else "attribute")
                            + "; only :opN constant attributes are allowed",
                        )
                    )
            if not op_numbers or not _contiguous_from_one(op_numbers):
                found = ", ".join(f":op{n}" for n in sorted(op_numbers)) or "none"
                violations.append(
                    Violation(
                        ViolationKind.ENTITY_STRUCTURE,
                        var,
                        None,
                        f"name node ops must be :op1..:opK contiguous; found {found}",
                    )
                )
            if var not in name_edge_targets:
                violations.append(
                    Violation(
                        ViolationKind.ENTITY_STRUCTURE,
                        var,
                        None,
                        "name node is not the target of any :name edge",
                    )
                )

        for role, _is_rel in roles:
            if role.label == _WIKI_ROLE and var not in name_edge_sources:
                violations.append(
                    Violation(
                        ViolationKind.ENTITY_STRUCTURE,
                        var,
                        role,
                        ":wiki on a node with no outgoing :name edge",
                    )
                )

        if concept.label in _CONNECTOR_CONCEPTS:
            op_numbers = [
                int(m.group(1))
                for role, _is_rel in roles
                if (m := _OP_ROLE.fullmatch(role.label))
            ]
            if len(op_numbers) < 2 or not _contiguous_from_one(op_numbers):
                found = ", ".join(f":op{n}" for n in sorted(op_numbers)) or "none"
                violations.append(
                    Violation(
                        ViolationKind.CONNECTOR_STRUCTURE,
                        var,
                        None,
                        f"connector '{concept}' needs >=2 :opN contiguous from :op1; found {found}",
                    )
                )
            for role, _is_rel in roles:
                if _SNT_ROLE.fullmatch(role.label):
                    violations.append(
                        Violation(
                            ViolationKind.CONNECTOR_STRUCTURE,
                            var,
                            role,
                            f"connector '{concept}' must not carry {role}",
                        )
                    )

        if concept.label == _MULTI_SENTENCE:
            snt_numbers = [
                int(m.group(1))
                for role, _is_rel in roles
                if (m := _SNT_ROLE.fullmatch(role.label))
            ]
            if snt_numbers and not _contiguous_from_one(snt_numbers):
                found = ", ".join(f":snt{n}" for n in sorted(snt_numbers))
                violations.append(
                    Violation(
                        ViolationKind.CONNECTOR_STRUCTURE,
                        var,
                        None,
                        f"multi-sentence node snts must be :snt1..:sntK contiguous; found {found}",
                    )
                )

    order_index = {v: i for i, v in enumerate(dfs_order(graph))}
    violations.sort(
        key=lambda v: (order_index[v.variable], v.role.label if v.role else "", v.message)
    )
    return ValidationReport(tuple(violations))


def is_corrupted(graph: AmrGraph) -> bool:
    """True iff the graph fails any structural check."""
    return bool(validate_graph(graph))


def count_corrupted(graphs: Sequence[AmrGraph]) -> int:
    """Number of graphs in the sequence that fail any structural check."""
    return sum(1 for g in graphs if is_corrupted(g))
