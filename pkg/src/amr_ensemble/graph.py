"""Core AMR graph model: Penman parsing/serialization, linearization, triples.

An AMR graph is a rooted, labeled, possibly reentrant directed graph.
Variables carry concepts (``z0 / schedule-01``), edges carry role labels
(``:ARG0``), and constants (``"Antonio"``, ``15``, ``-``) hang off variables
as attributes.  Graphs are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "Variable",
    "Concept",
    "Constant",
    "Role",
    "AmrGraph",
    "Triple",
    "TripleKind",
    "TripleSet",
    "LinearizedGraph",
    "PenmanSyntaxError",
    "GraphIntegrityError",
    "UnreachableVariableError",
    "DuplicateTripleWarning",
    "parse_penman",
    "serialize_penman",
    "linearize",
    "extract_triples",
    "is_predicate",
    "rename_variables",
    "dfs_order",
]


class PenmanSyntaxError(ValueError):
    """Raised on malformed Penman text; carries a line/column position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class GraphIntegrityError(ValueError):
    """Raised when a graph under construction violates an AmrGraph invariant."""


class UnreachableVariableError(GraphIntegrityError):
    """Raised by serialization when a variable cannot be reached from the root
    by following stored edge directions."""


class DuplicateTripleWarning(UserWarning):
    """Emitted when duplicate relation/attribute entries are collapsed."""


_FORBIDDEN_VAR_CHARS = set('()/"')


@dataclass(frozen=True, order=True)
class Variable:
    """A graph variable such as ``z0``."""

    name: str

    def __post_init__(self):
        if not self.name:
            raise GraphIntegrityError("variable name must be non-empty")
        if any(c.isspace() or c in _FORBIDDEN_VAR_CHARS for c in self.name):
            raise GraphIntegrityError(f"invalid variable name: {self.name!r}")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Concept:
    """A node concept such as ``schedule-01`` or ``movie``. Never quoted."""

    label: str

    def __post_init__(self):
        if not self.label:
            raise GraphIntegrityError("concept label must be non-empty")
        if self.label.startswith('"'):
            raise GraphIntegrityError(f"concept must not be quoted: {self.label!r}")

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True, order=True)
class Constant:
    """A literal attribute value, stored as written (quotes included)."""

    value: str

    def __post_init__(self):
        if not self.value:
            raise GraphIntegrityError("constant value must be non-empty")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Role:
    """An edge/attribute label beginning with ``:``, e.g. ``:ARG0``."""

    label: str

    def __post_init__(self):
        if not re.fullmatch(r":\S+", self.label):
            raise GraphIntegrityError(f"invalid role label: {self.label!r}")

    def __str__(self) -> str:
        return self.label


RelationEntry = tuple[Variable, Role, Variable]
AttributeEntry = tuple[Variable, Role, Constant]

_SENSE_SUFFIX = re.compile(r"-\d{2,3}$")


def is_predicate(concept: Concept) -> bool:
    """True iff the concept is a frame: its label ends in ``-`` + 2-3 digits."""
    return _SENSE_SUFFIX.search(concept.label) is not None


@dataclass(frozen=True)
class AmrGraph:
    """A validated AMR graph.

    ``instances`` maps every variable to its single concept; ``relations``
    and ``attributes`` are ordered, duplicate-free edge lists.  Every
    variable must be reachable from the root (edges read as undirected).
    """

    root: Variable
    instances: Mapping[Variable, Concept]
    relations: tuple[RelationEntry, ...] = ()
    attributes: tuple[AttributeEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "instances", dict(self.instances))
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(self, "attributes", tuple(self.attributes))
        self._validate()

    def _validate(self) -> None:
        if self.root not in self.instances:
            raise GraphIntegrityError(f"root {self.root} has no instance entry")
        for src, role, tgt in self.relations:
            for v in (src, tgt):
                if v not in self.instances:
                    raise GraphIntegrityError(
                        f"variable {v} in relation ({src}, {role}, {tgt}) has no instance"
                    )
        for src, role, _val in self.attributes:
            if src not in self.instances:
                raise GraphIntegrityError(
                    f"attribute source {src} has no instance entry"
                )
        if len(set(self.relations)) != len(self.relations):
            raise GraphIntegrityError("duplicate relation entries")
        if len(set(self.attributes)) != len(self.attributes):
            raise GraphIntegrityError("duplicate attribute entries")
        unreachable = self._undirected_unreachable()
        if unreachable:
            names = ", ".join(sorted(v.name for v in unreachable))
            raise GraphIntegrityError(f"variables unreachable from root: {names}")

    def _undirected_unreachable(self) -> set[Variable]:
        neighbors: dict[Variable, list[Variable]] = {v: [] for v in self.instances}
        for src, _role, tgt in self.relations:
            neighbors[src].append(tgt)
            neighbors[tgt].append(src)
        seen = {self.root}
        stack = [self.root]
        while stack:
            for nxt in neighbors[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return set(self.instances) - seen

    def variables(self) -> tuple[Variable, ...]:
        return tuple(self.instances)

    def concept_of(self, var: Variable) -> Concept:
        return self.instances[var]

    def outgoing_relations(self, var: Variable) -> list[RelationEntry]:
        return [r for r in self.relations if r[0] == var]

    def outgoing_attributes(self, var: Variable) -> list[AttributeEntry]:
        return [a for a in self.attributes if a[0] == var]


class TripleKind(Enum):
    ROOT = "root"
    INSTANCE = "instance"
    RELATION = "relation"
    ATTRIBUTE = "attribute"


@dataclass(frozen=True)
class Triple:
    """One atomic unit of a graph: root, instance, relation or attribute.

    Rendered in the conventional listing form, e.g. ``(empty, :root, z0)``
    or ``(z2, :op1, "Antonio")``.
    """

    kind: TripleKind
    source: Variable | None
    role: Role
    target: Variable | Concept | Constant

    def __str__(self) -> str:
        src = "empty" if self.source is None else str(self.source)
        return f"({src}, {self.role}, {self.target})"


_ROOT_ROLE = Role(":root")
_INSTANCE_ROLE = Role(":instance")


def root_triple(var: Variable) -> Triple:
    return Triple(TripleKind.ROOT, None, _ROOT_ROLE, var)


def instance_triple(var: Variable, concept: Concept) -> Triple:
    return Triple(TripleKind.INSTANCE, var, _INSTANCE_ROLE, concept)


def relation_triple(src: Variable, role: Role, tgt: Variable) -> Triple:
    return Triple(TripleKind.RELATION, src, role, tgt)


def attribute_triple(src: Variable, role: Role, value: Constant) -> Triple:
    return Triple(TripleKind.ATTRIBUTE, src, role, value)


@dataclass(frozen=True)
class TripleSet:
    """An ordered, duplicate-free collection of triples."""

    triples: tuple[Triple, ...]

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples)

    def __len__(self) -> int:
        return len(self.triples)

    def of_kind(self, kind: TripleKind) -> tuple[Triple, ...]:
        return tuple(t for t in self.triples if t.kind == kind)

    def variables(self) -> tuple[Variable, ...]:
        seen: dict[Variable, None] = {}
        for t in self.triples:
            if t.source is not None:
                seen.setdefault(t.source, None)
            if isinstance(t.target, Variable):
                seen.setdefault(t.target, None)
        return tuple(seen)

    def as_strings(self) -> tuple[str, ...]:
        return tuple(str(t) for t in self.triples)


@dataclass(frozen=True)
class LinearizedGraph:
    """A graph flattened to a token sequence over the Penman alphabet."""

    tokens: tuple[str, ...]

    def text(self) -> str:
        return " ".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<lparen>\() |
    (?P<rparen>\)) |
    (?P<slash>/)   |
    (?P<string>"(?:[^"\\]|\\.)*") |
    (?P<atom>[^\s()"/]+) |
    (?P<junk>\S)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # lparen | rparen | slash | string | atom
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line = 1
    line_start = 0
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch == "\n":
            line += 1
            line_start = pos + 1
            pos += 1
            continue
        if ch.isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None or m.lastgroup == "junk":
            if ch == '"':
                raise PenmanSyntaxError("unterminated quoted string", line, col)
            raise PenmanSyntaxError(f"unexpected character {ch!r}", line, col)
        tokens.append(_Token(m.lastgroup, m.group(), line, col))
        pos = m.end()
    return tokens


class _Parser:
    """Recursive-descent Penman reader.

    Bare tokens in target position are resolved in a second pass: a token is
    a reentrant variable mention iff it was declared with ``/ concept``
    anywhere in the same graph, otherwise it is a constant.
    """

    def __init__(self, tokens: list[_Token], text_len: int):
        self.tokens = tokens
        self.pos = 0
        self.declared: dict[str, Concept] = {}
        self.decl_order: list[str] = []
        # (source, role, token) with bare-atom targets pending resolution
        self.pending: list[tuple[str, Role, _Token]] = []

    def _error(self, message: str, token: _Token | None = None) -> PenmanSyntaxError:
        if token is None:
            if self.tokens:
                last = self.tokens[-1]
                return PenmanSyntaxError(message, last.line, last.column + len(last.text))
            return PenmanSyntaxError(message, 1, 1)
        return PenmanSyntaxError(message, token.line, token.column)

    def _peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self, expected: str) -> _Token:
        tok = self._peek()
        if tok is None:
            raise self._error(f"unexpected end of input, expected {expected}")
        self.pos += 1
        return tok

    def parse(self) -> tuple[str, list[tuple[str, Role, object]]]:
        root = self._parse_node()
        trailing = self._peek()
        if trailing is not None:
            raise self._error(
                f"unexpected token {trailing.text!r} after graph end", trailing
            )
        return root, self._resolve_pending()

    def _parse_node(self) -> str:
        opener = self._next("'('")
        if opener.kind != "lparen":
            raise self._error(f"expected '(' but found {opener.text!r}", opener)
        var_tok = self._next("a variable name")
        if var_tok.kind != "atom" or var_tok.text.startswith(":"):
            raise self._error(
                f"expected a variable name but found {var_tok.text!r}", var_tok
            )
        name = var_tok.text
        slash = self._next("'/'")
        if slash.kind != "slash":
            raise self._error(
                f"expected '/' after variable {name!r} but found {slash.text!r}", slash
            )
        concept_tok = self._next("a concept")
        if concept_tok.kind != "atom" or concept_tok.text.startswith(":"):
            raise self._error("missing concept after '/'", concept_tok)
        if name in self.declared:
            raise self._error(f"duplicate declaration of variable {name!r}", var_tok)
        self.declared[name] = Concept(concept_tok.text)
        self.decl_order.append(name)

        while True:
            tok = self._next("a role or ')'")
            if tok.kind == "rparen":
                return name
            if tok.kind != "atom" or not tok.text.startswith(":"):
                raise self._error(
                    f"expected a role or ')' but found {tok.text!r}", tok
                )
            role = Role(tok.text)
            target = self._next("a value after the role")
            if target.kind == "lparen":
                self.pos -= 1
                child = self._parse_node()
                self.pending.append((name, role, _Token("var", child, target.line, target.column)))
            elif target.kind == "string":
                self.pending.append((name, role, target))
            elif target.kind == "atom" and not target.text.startswith(":"):
                self.pending.append((name, role, target))
            else:
                raise self._error(
                    f"expected a node, constant or variable but found {target.text!r}",
                    target,
                )

    def _resolve_pending(self) -> list[tuple[str, Role, object]]:
        resolved: list[tuple[str, Role, object]] = []
        for source, role, tok in self.pending:
            if tok.kind == "var" or (tok.kind == "atom" and tok.text in self.declared):
                resolved.append((source, role, Variable(tok.text)))
            else:
                resolved.append((source, role, Constant(tok.text)))
        return resolved


def parse_penman(text: str) -> AmrGraph:
    """Parse a single Penman-notation graph.

    Reentrant mentions (bare variables) resolve to the declared variable even
    when the mention precedes the declaration.  Quoted tokens and undeclared
    bare tokens become constants.  Raises :class:`PenmanSyntaxError` with a
    position on malformed input.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise PenmanSyntaxError("empty input", 1, 1)
    parser = _Parser(tokens, len(text))
    root_name, edges = parser.parse()

    instances = {Variable(n): parser.declared[n] for n in parser.decl_order}
    relations: list[RelationEntry] = []
    attributes: list[AttributeEntry] = []
    for source, role, target in edges:
        src = Variable(source)
        if isinstance(target, Variable):
            entry = (src, role, target)
            if entry in relations:
                warnings.warn(
                    f"duplicate relation collapsed: ({src}, {role}, {target})",
                    DuplicateTripleWarning,
                    stacklevel=2,
                )
                continue
            relations.append(entry)
        else:
            attr = (src, role, target)
            if attr in attributes:
                warnings.warn(
                    f"duplicate attribute collapsed: ({src}, {role}, {target})",
                    DuplicateTripleWarning,
                    stacklevel=2,
                )
                continue
            attributes.append(attr)

    return AmrGraph(
        root=Variable(root_name),
        instances=instances,
        relations=tuple(relations),
        attributes=tuple(attributes),
    )


# ---------------------------------------------------------------------------
# Traversal, serialization, triples
# ---------------------------------------------------------------------------


def dfs_order(graph: AmrGraph) -> list[Variable]:
    """Variables in depth-first discovery order from the root.

    Follows stored edge direction, children in stored relation order.  Any
    variable not reachable that way (possible only for hand-built graphs
    that rely on undirected connectivity) is appended in instance order.
    """
    children: dict[Variable, list[Variable]] = {v: [] for v in graph.instances}
    for src, _role, tgt in graph.relations:
        children[src].append(tgt)

    order: list[Variable] = []
    seen: set[Variable] = set()

    def visit(v: Variable) -> None:
        if v in seen:
            return
        seen.add(v)
        order.append(v)
        for child in children[v]:
            visit(child)

    visit(graph.root)
    for v in graph.instances:
        if v not in seen:
            order.append(v)
    return order


def _emit_node(
    graph: AmrGraph,
    var: Variable,
    visited: set[Variable],
    tokens: list[str],
    lines: list[str],
    depth: int,
    indent: str,
) -> None:
    visited.add(var)
    concept = graph.instances[var]
    header = f"({var} / {concept}"
    tokens.extend(["(", var.name, "/", concept.label])
    outgoing = [("rel", r) for r in graph.outgoing_relations(var)] + [
        ("attr", a) for a in graph.outgoing_attributes(var)
    ]
    if not outgoing:
        lines.append(header + ")")
        tokens.append(")")
        return
    lines.append(header)
    pad = indent * (depth + 1)
    for kind, (_, role, target) in outgoing:
        tokens.append(role.label)
        if kind == "rel" and target not in visited:
            sub_lines: list[str] = []
            _emit_node(graph, target, visited, tokens, sub_lines, depth + 1, indent)
            sub_lines[0] = f"{pad}{role} {sub_lines[0]}"
            lines.extend(sub_lines)
        else:
            value = target.name if isinstance(target, Variable) else str(target)
            tokens.append(value)
            lines.append(f"{pad}{role} {value}")
    lines[-1] += ")"
    tokens.append(")")


def _emit(graph: AmrGraph, indent: str = "    ") -> tuple[list[str], str]:
    children: dict[Variable, list[Variable]] = {v: [] for v in graph.instances}
    for src, _role, tgt in graph.relations:
        children[src].append(tgt)
    # serialization needs every node on a directed path from the root;
    # undirected connectivity alone is not expressible in Penman text
    seen: set[Variable] = set()
    stack = [graph.root]
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        stack.extend(children[v])
    if len(seen) != len(graph.instances):
        missing = sorted(v.name for v in set(graph.instances) - seen)
        raise UnreachableVariableError(
            "cannot serialize: variables unreachable by directed traversal: "
            + ", ".join(missing)
        )

    tokens: list[str] = []
    lines: list[str] = []
    _emit_node(graph, graph.root, set(), tokens, lines, 0, indent)
    return tokens, "\n".join(lines)


def serialize_penman(graph: AmrGraph, indent: str = "    ") -> str:
    """Serialize to Penman text.

    The spanning tree is the depth-first traversal from the root with
    children in stored relation order; revisits of reentrant variables are
    emitted as bare variable mentions.  The output always re-parses to a
    graph with exact-SMATCH 1.0 against the input.
    """
    _, text = _emit(graph, indent)
    return text


def linearize(graph: AmrGraph) -> LinearizedGraph:
    """Flatten to tokens; whitespace-joined they re-parse to the same graph."""
    tokens, _ = _emit(graph)
    return LinearizedGraph(tuple(tokens))


def extract_triples(graph: AmrGraph) -> TripleSet:
    """Decompose into root/instance/relation/attribute triples.

    Emission follows the depth-first listing convention: the root triple,
    then per discovered node its instance triple, its relation triples in
    stored order (recursing into newly discovered targets), and finally its
    attribute triples.
    """
    rel_by_src: dict[Variable, list[RelationEntry]] = {v: [] for v in graph.instances}
    for rel in graph.relations:
        rel_by_src[rel[0]].append(rel)
    attr_by_src: dict[Variable, list[AttributeEntry]] = {v: [] for v in graph.instances}
    for attr in graph.attributes:
        attr_by_src[attr[0]].append(attr)

    triples: list[Triple] = [root_triple(graph.root)]
    seen: set[Variable] = set()

    def visit(v: Variable) -> None:
        seen.add(v)
        triples.append(instance_triple(v, graph.instances[v]))
        for src, role, tgt in rel_by_src[v]:
            triples.append(relation_triple(src, role, tgt))
            if tgt not in seen:
                visit(tgt)
        for src, role, value in attr_by_src[v]:
            triples.append(attribute_triple(src, role, value))

    visit(graph.root)
    # graphs relying on undirected connectivity: emit what remains, stable order
    for v in graph.instances:
        if v not in seen:
            visit(v)

    assert len(triples) == 1 + len(graph.instances) + len(graph.relations) + len(
        graph.attributes
    )
    return TripleSet(tuple(triples))


def rename_variables(graph: AmrGraph) -> AmrGraph:
    """Canonically rename variables to z0, z1, ... in DFS discovery order."""
    mapping = {old: Variable(f"z{i}") for i, old in enumerate(dfs_order(graph))}
    return AmrGraph(
        root=mapping[graph.root],
        instances={mapping[v]: c for v, c in graph.instances.items()},
        relations=tuple(
            (mapping[s], role, mapping[t]) for s, role, t in graph.relations
        ),
        attributes=tuple(
            (mapping[s], role, value) for s, role, value in graph.attributes
        ),
    )
