"""Seeded random structures and queries for property checks."""

from __future__ import annotations

import random

from .qcore import Atom, ConjunctiveQuery, Schema, Structure

SMALL_SCHEMA = Schema.of({"R": 2, "S": 2, "U": 1})
BINARY_SCHEMA = Schema.of({"R": 2, "S": 2})


def random_structure(rng: random.Random, schema: Schema = SMALL_SCHEMA, max_domain: int = 5, density: float = 0.3) -> Structure:
    n = rng.randint(1, max_domain)
    elems = [f"d{i}" for i in range(n)]
    facts = set()
    for rel, arity in schema.relations:
        if arity == 0:
            if rng.random() < 0.5:
                facts.add((rel, ()))
            continue
        for _ in range(rng.randint(0, max(1, int(density * n**arity)))):
            facts.add((rel, tuple(rng.choice(elems) for _ in range(arity))))
    return Structure(schema, frozenset(facts))


def random_connected_structure(rng: random.Random, schema: Schema = SMALL_SCHEMA, max_domain: int = 4) -> Structure:
    """A structure whose facts form one connected piece (at least one fact)."""
    rels = [(r, a) for r, a in schema.relations if a > 0]
    while True:
        n = rng.randint(1, max_domain)
        elems = [f"c{i}" for i in range(n)]
        facts = set()
        # spanning chain of binary facts keeps every element connected
        binary = [r for r, a in rels if a == 2]
        for i in range(1, n):
            rel = rng.choice(binary)
            pair = (elems[i - 1], elems[i]) if rng.random() < 0.5 else (elems[i], elems[i - 1])
            facts.add((rel, pair))
        for _ in range(rng.randint(0 if n > 1 else 1, 3)):
            rel, arity = rng.choice(rels)
            facts.add((rel, tuple(rng.choice(elems) for _ in range(arity))))
        s = Structure(schema, frozenset(facts))
        if s.domain == frozenset(elems):
            return s


def random_cq(
    rng: random.Random,
    schema: Schema = BINARY_SCHEMA,
    max_atoms: int = 3,
    max_vars: int = 3,
    name: str = "q",
    min_atoms: int = 1,
) -> ConjunctiveQuery:
    n_atoms = rng.randint(min_atoms, max_atoms)
    variables = [f"x{i}" for i in range(rng.randint(1, max_vars))]
    rels = [(r, a) for r, a in schema.relations if a > 0]
    atoms = []
    for _ in range(n_atoms):
        rel, arity = rng.choice(rels)
        atoms.append(Atom(rel, tuple(rng.choice(variables) for _ in range(arity))))
    return ConjunctiveQuery(schema, (), tuple(atoms), name)


def random_connected_cq(rng: random.Random, schema: Schema = BINARY_SCHEMA, max_atoms: int = 3, name: str = "q") -> ConjunctiveQuery:
    """Each new atom reuses a variable already present, so the body stays connected."""
    rels = [(r, a) for r, a in schema.relations if a == 2]
    used = ["x0"]
    atoms = []
    for i in range(rng.randint(1, max_atoms)):
        rel, _ = rng.choice(rels)
        old = rng.choice(used)
        other = rng.choice(used + [f"x{len(used)}"])
        if other not in used:
            used.append(other)
        atoms.append(Atom(rel, (old, other) if rng.random() < 0.5 else (other, old)))
    return ConjunctiveQuery(schema, (), tuple(atoms), name)


def rename_variables(q: ConjunctiveQuery, rng: random.Random, name: str | None = None) -> ConjunctiveQuery:
    variables = q.variables
    fresh = [f"r{i}" for i in range(len(variables))]
    rng.shuffle(fresh)
    mapping = dict(zip(variables, fresh))
    atoms = [Atom(a.relation, tuple(mapping[x] for x in a.args)) for a in q.atoms]
    rng.shuffle(atoms)
    return ConjunctiveQuery(q.schema, tuple(mapping[x] for x in q.free_vars), tuple(atoms), name or q.name)
