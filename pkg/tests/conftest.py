"""Shared fixtures: worked-example graphs, a seeded graph generator, violation injectors."""

from __future__ import annotations

import random
from contextlib import contextmanager
from pathlib import Path

import pytest

from amr_ensemble.graph import (
    AmrGraph,
    Concept,
    Constant,
    Role,
    Variable,
    parse_penman,
)
from amr_ensemble.validation import ViolationKind

FIXTURE_DIR = Path(__file__).parent / "fixtures"

# The worked example: one gold graph and two system predictions for the
# sentence "Antonio Banderas scheduled the premiere of his movie at 3 pm".
GOLD_TEXT = """\
(z0 / schedule-01
    :ARG0 (z1 / person
        :name (z2 / name
            :op1 "Antonio"
            :op2 "Banderas"))
    :ARG1 (z3 / premiere-01
        :ARG0 z1
        :ARG1 (z4 / movie
            :poss z1))
    :ARG3 (z5 / date-entity
        :time "15:00"))
"""

PRED1_TEXT = """\
(z0 / schedule-01
    :ARG0 (z1 / person
        :name (z2 / name
            :op1 "Antonio"
            :op2 "Banderas"))
    :ARG1 (z3 / premiere
        :mod (z4 / movie)
        :poss z1)
    :ARG3 (z5 / date-entity
        :time "15:00"))
"""

PRED2_TEXT = """\
(z0 / schedule-01
    :ARG0 (z1 / person
        :name (z2 / name
            :op1 "Antonio"
            :op2 "Banderas"))
    :ARG1 (z3 / premiere-01
        :ARG0 z1
        :ARG1 (z4 / movie
            :poss z1))
    :ARG3 (z5 / date-entity
        :time "3:00"))
"""

# The dual-edge merge of PRED1 (pivot) with PRED2 at the default threshold.
MERGED_TEXT = """\
(z0 / schedule-01
    :ARG0 (z1 / person
        :name (z2 / name
            :op1 "Antonio"
            :op2 "Banderas"))
    :ARG1 (z3 / premiere
        :mod (z4 / movie
            :poss z1)
        :poss z1
        :ARG0 z1
        :ARG1 z4)
    :ARG3 (z5 / date-entity
        :time "15:00"
        :time "3:00"))
"""

# Canonical triple decomposition of the gold graph, in emission order.
GOLD_TRIPLE_STRINGS = [
    "(empty, :root, z0)",
    "(z0, :instance, schedule-01)",
    "(z0, :ARG0, z1)",
    "(z1, :instance, person)",
    "(z1, :name, z2)",
    "(z2, :instance, name)",
    '(z2, :op1, "Antonio")',
    '(z2, :op2, "Banderas")',
    "(z0, :ARG1, z3)",
    "(z3, :instance, premiere-01)",
    "(z3, :ARG0, z1)",
    "(z3, :ARG1, z4)",
    "(z4, :instance, movie)",
    "(z4, :poss, z1)",
    "(z0, :ARG3, z5)",
    "(z5, :instance, date-entity)",
    '(z5, :time, "15:00")',
]


@pytest.fixture(scope="session")
def gold_graph() -> AmrGraph:
    return parse_penman(GOLD_TEXT)


@pytest.fixture(scope="session")
def pred1_graph() -> AmrGraph:
    return parse_penman(PRED1_TEXT)


@pytest.fixture(scope="session")
def pred2_graph() -> AmrGraph:
    return parse_penman(PRED2_TEXT)


@pytest.fixture(scope="session")
def merged_graph() -> AmrGraph:
    return parse_penman(MERGED_TEXT)


# ---------------------------------------------------------------------------
# Random graph generation
# ---------------------------------------------------------------------------

PREDICATE_POOL = (
    "want-01", "go-02", "see-01", "schedule-01", "run-02", "eat-01",
    "tell-01", "arrive-01", "leave-11", "believe-01",
)
PLAIN_POOL = (
    "boy", "girl", "movie", "person", "city", "dog", "house", "team",
    "book", "idea", "morning",
)
PREDICATE_ROLES = (":ARG0", ":ARG1", ":ARG2", ":ARG3", ":ARG4",
                   ":time", ":location", ":manner", ":mod")
PLAIN_ROLES = (":mod", ":poss", ":time", ":location", ":domain",
               ":part", ":consist-of")
ATTR_CHOICES = (
    (":polarity", ("-",)),
    (":quant", ("2", "3", "7", "100")),
    (":value", ('"x"', '"long"', '"42nd"')),
    (":mode", ("imperative", "expressive")),
)


def random_graph(
    rng: random.Random,
    max_vars: int = 8,
    min_vars: int = 1,
    reentrancy_rate: float = 0.25,
    attribute_rate: float = 0.5,
) -> AmrGraph:
    """A well-formed graph that also passes the structural validator.

    Concepts avoid entity and connector vocabulary, and role legality
    follows the predicate test, so injectors can corrupt these graphs in
    exactly one known way.
    """
    n = rng.randint(min_vars, max_vars)
    variables = [Variable(f"v{i}") for i in range(n)]
    instances: dict[Variable, Concept] = {}
    for i, var in enumerate(variables):
        if i % 2 == 0:
            instances[var] = Concept(rng.choice(PREDICATE_POOL))
        else:
            instances[var] = Concept(rng.choice(PLAIN_POOL))

    def legal_role(source: Variable) -> str:
        pool = PREDICATE_ROLES if _is_predicate_concept(instances[source].label) else PLAIN_ROLES
        return rng.choice(pool)

    relations: list[tuple[Variable, Role, Variable]] = []
    seen: set[tuple[str, str, str]] = set()

    def add_edge(source: Variable, target: Variable) -> bool:
        for _ in range(6):
            role = legal_role(source)
            key = (source.name, role, target.name)
            if key not in seen:
                seen.add(key)
                relations.append((source, Role(role), target))
                return True
        return False

    for i in range(1, n):
        parent = variables[rng.randrange(i)]
        assert add_edge(parent, variables[i])
    extra = sum(1 for _ in range(n) if rng.random() < reentrancy_rate)
    for _ in range(extra):
        if n < 2:
            break
        source, target = rng.sample(variables, 2)
        add_edge(source, target)

    attributes: list[tuple[Variable, Role, Constant]] = []
    for var in variables:
        if rng.random() < attribute_rate:
            role, values = rng.choice(ATTR_CHOICES)
            triple = (var, Role(role), Constant(rng.choice(values)))
            key = (var.name, role, triple[2].value)
            if key not in seen:
                seen.add(key)
                attributes.append(triple)

    return AmrGraph(
        root=variables[0],
        instances=instances,
        relations=tuple(relations),
        attributes=tuple(attributes),
    )


def mutate_graph(graph: AmrGraph, rng: random.Random, strength: float = 0.3) -> AmrGraph:
    """A noisy copy: some concepts, roles and attribute values changed."""
    instances = dict(graph.instances)
    for var in list(instances):
        if rng.random() < strength:
            pool = PREDICATE_POOL if rng.random() < 0.5 else PLAIN_POOL
            instances[var] = Concept(rng.choice(pool))
    relations = []
    seen = set()
    for source, role, target in graph.relations:
        label = role.label
        if rng.random() < strength / 2:
            pool = PREDICATE_ROLES if _is_predicate_concept(instances[source].label) else PLAIN_ROLES
            label = rng.choice(pool)
        if (source.name, label, target.name) in seen:
            continue
        seen.add((source.name, label, target.name))
        relations.append((source, Role(label), target))
    attributes = []
    for var, role, value in graph.attributes:
        if rng.random() < strength:
            choices = dict(ATTR_CHOICES).get(role.label)
            if choices:
                value = Constant(rng.choice(choices))
        if (var.name, role.label, value.value) in seen:
            continue
        seen.add((var.name, role.label, value.value))
        attributes.append((var, role, value))
    return AmrGraph(
        root=graph.root,
        instances=instances,
        relations=tuple(relations),
        attributes=tuple(attributes),
    )


# ---------------------------------------------------------------------------
# Violation injectors: each returns (corrupted graph, expected kind, variable)
# ---------------------------------------------------------------------------


def _is_predicate_concept(concept: str) -> bool:
    tail = concept.rsplit("-", 1)
    return len(tail) == 2 and tail[1].isdigit() and 2 <= len(tail[1]) <= 3


def inject_arg_on_non_predicate(graph: AmrGraph, rng: random.Random):
    hosts = [v for v in graph.instances if not _is_predicate_concept(graph.instances[v].label)]
    host = rng.choice(hosts)
    attributes = graph.attributes + ((host, Role(":ARG9"), Constant('"x"')),)
    out = AmrGraph(graph.root, graph.instances, graph.relations, attributes)
    return out, ViolationKind.ARG_ON_NON_PREDICATE, host


def inject_op_on_predicate(graph: AmrGraph, rng: random.Random):
    hosts = [v for v in graph.instances if _is_predicate_concept(graph.instances[v].label)]
    host = rng.choice(hosts)
    role = rng.choice((":op1", ":snt1"))
    attributes = graph.attributes + ((host, Role(role), Constant('"w"')),)
    out = AmrGraph(graph.root, graph.instances, graph.relations, attributes)
    return out, ViolationKind.OP_OR_SNT_ON_PREDICATE, host


def inject_entity_structure(graph: AmrGraph, rng: random.Random):
    host = rng.choice(list(graph.instances))
    entity = Variable("namebad")
    instances = dict(graph.instances)
    instances[entity] = Concept("name")
    relations = graph.relations + ((host, Role(":name"), entity),)
    # ops with a gap: op1 then op3
    attributes = graph.attributes + (
        (entity, Role(":op1"), Constant('"A"')),
        (entity, Role(":op3"), Constant('"B"')),
    )
    out = AmrGraph(graph.root, instances, relations, attributes)
    return out, ViolationKind.ENTITY_STRUCTURE, entity


def inject_connector_structure(graph: AmrGraph, rng: random.Random):
    host = rng.choice(list(graph.instances))
    connector = Variable("connbad")
    leaf = Variable("connleaf")
    instances = dict(graph.instances)
    instances[connector] = Concept(rng.choice(("and", "or")))
    instances[leaf] = Concept(rng.choice(PLAIN_POOL))
    host_role = ":ARG2" if _is_predicate_concept(graph.instances[host].label) else ":time"
    relations = graph.relations + (
        (host, Role(host_role), connector),
        (connector, Role(":op1"), leaf),
    )
    out = AmrGraph(graph.root, instances, relations, graph.attributes)
    return out, ViolationKind.CONNECTOR_STRUCTURE, connector


INJECTORS = (
    inject_arg_on_non_predicate,
    inject_op_on_predicate,
    inject_entity_structure,
    inject_connector_structure,
)


# ---------------------------------------------------------------------------
# Acceptance reporting
# ---------------------------------------------------------------------------


@pytest.fixture
def announce(capsys):
    """Prints one PASS/FAIL line per acceptance criterion on the real stdout."""

    @contextmanager
    def _announce(name: str):
        try:
            yield
        except BaseException:
            with capsys.disabled():
                print(f"FAIL  {name}", flush=True)
            raise
        with capsys.disabled():
            print(f"PASS  {name}", flush=True)

    return _announce
