"""Encoding polynomial equations over the naturals as UCQ determinacy instances.

Schema: nullary ``H`` and ``C``, unary ``X1..Xn``. For a monomial ``m``
the CQ ``Φ_m`` has one ``Xi`` atom per power of ``xi``, so it counts
``prod |D_Xi| ** deg``. The views are ``H ∨ C``, one ``∃y Xi(y)`` per
unknown, and ``Ψ_P ∨ Ψ_N``, which repeats ``Φ_m ∧ H`` (positive
coefficients) or ``Φ_m ∧ C`` (negative ones) ``|c(m)|`` times. The
query is ``H``. An integer solution yields two databases that agree on
all views and differ on ``H``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from math import prod
from typing import Mapping, Sequence

from .qcore import (
    Atom,
    ConjunctiveQuery,
    QueryParseError,
    Schema,
    Structure,
    UnionQuery,
    eval_boolean_cq,
    eval_ucq,
)
from .witness import WitnessPair, verify_witness


@dataclass(frozen=True)
class Monomial:
    coefficient: int
    degrees: tuple[tuple[str, int], ...] = ()  # sorted (unknown, degree>0)

    def __post_init__(self):
        if self.coefficient == 0:
            raise ValueError("monomial coefficient must be nonzero")
        for _, d in self.degrees:
            if d < 0:
                raise ValueError("degrees are nonnegative")

    @classmethod
    def of(cls, coefficient: int, degrees: Mapping[str, int] | None = None) -> "Monomial":
        items = sorted((x, d) for x, d in (degrees or {}).items() if d > 0)
        return cls(coefficient, tuple(items))

    def degree(self, x: str) -> int:
        return dict(self.degrees).get(x, 0)

    def value(self, assignment: Mapping[str, int]) -> int:
        return self.coefficient * prod(assignment[x] ** d for x, d in self.degrees)

    def __str__(self) -> str:
        terms = " ".join(f"{x}^{d}" for x, d in self.degrees)
        return f"{self.coefficient:+d} {terms}".strip()


@dataclass(frozen=True)
class H10Instance:
    monomials: tuple[Monomial, ...]
    unknowns: tuple[str, ...]

    def __post_init__(self):
        for m in self.monomials:
            for x, _ in m.degrees:
                if x not in self.unknowns:
                    raise ValueError(f"unknown {x} not declared")

    @classmethod
    def of(cls, monomials: Sequence[Monomial]) -> "H10Instance":
        unknowns = sorted({x for m in monomials for x, _ in m.degrees}, key=_unknown_order)
        return cls(tuple(monomials), tuple(unknowns))

    def evaluate(self, assignment: Mapping[str, int]) -> int:
        return sum(m.value(assignment) for m in self.monomials)


def _unknown_order(x: str):
    m = re.fullmatch(r"x(\d+)", x)
    return (0, int(m.group(1)), x) if m else (1, 0, x)


_TERM = re.compile(r"(x\d+)(?:\^(\d+))?")


def parse_instance(text: str) -> H10Instance:
    """One monomial per line: ``<signed-int> [x<i>^<d>]...``, e.g. ``-2 x1^2 x3``."""
    monomials = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split("#", 1)[0].split()
        if not tokens:
            continue
        try:
            coefficient = int(tokens[0])
        except ValueError:
            raise QueryParseError(f"expected a signed integer coefficient, got {tokens[0]!r}", lineno, 1) from None
        if coefficient == 0:
            raise QueryParseError("zero coefficient", lineno, 1)
        degrees: dict[str, int] = {}
        for tok in tokens[1:]:
            m = _TERM.fullmatch(tok)
            if m is None:
                raise QueryParseError(f"bad term {tok!r}", lineno, line.find(tok) + 1)
            degrees[m.group(1)] = degrees.get(m.group(1), 0) + int(m.group(2) or 1)
        monomials.append(Monomial.of(coefficient, degrees))
    return H10Instance.of(monomials)


def relation_for(x: str) -> str:
    return x.upper()


def h10_schema(instance: H10Instance) -> Schema:
    rels = {"H": 0, "C": 0}
    rels.update({relation_for(x): 1 for x in instance.unknowns})
    return Schema.of(rels)


def phi(m: Monomial, schema: Schema, name: str = "phi", extra: Sequence[Atom] = ()) -> ConjunctiveQuery:
    """One ``Xi(y)`` atom per unit of degree; the constant monomial gives the empty query."""
    atoms = [Atom(relation_for(x), (f"y_{x}_{j}",)) for x, d in m.degrees for j in range(1, d + 1)]
    return ConjunctiveQuery(schema, (), tuple(atoms) + tuple(extra), name)


@dataclass(frozen=True)
class Encoding:
    schema: Schema
    query: UnionQuery
    views: tuple[UnionQuery, ...]


def encode(instance: H10Instance) -> Encoding:
    schema = h10_schema(instance)
    h, c = Atom("H", ()), Atom("C", ())
    q = UnionQuery((ConjunctiveQuery(schema, (), (h,), "q"),))
    v1 = UnionQuery((ConjunctiveQuery(schema, (), (h,), "V1"), ConjunctiveQuery(schema, (), (c,), "V1")))
    vx = [
        UnionQuery((ConjunctiveQuery(schema, (), (Atom(relation_for(x), ("y",)),), f"V_{x}"),))
        for x in instance.unknowns
    ]
    disjuncts = []
    for m in instance.monomials:
        flag = h if m.coefficient > 0 else c
        disjuncts += [phi(m, schema, "VI", (flag,))] * abs(m.coefficient)
    vi = UnionQuery(tuple(disjuncts))
    return Encoding(schema, q, (v1, *vx, vi))


def sizes(d: Structure, instance: H10Instance) -> dict[str, int]:
    return {x: d.count(relation_for(x)) for x in instance.unknowns}


def phi_count_identity_check(m: Monomial, d: Structure, unknowns: Sequence[str] | None = None) -> dict:
    """The monomial evaluated at the ``Xi`` fact counts equals ``c(m) * Φ_m(d)``."""
    unknowns = unknowns or [x for x, _ in m.degrees]
    value = m.value({x: d.count(relation_for(x)) for x in unknowns})
    count = eval_boolean_cq(phi(m, d.schema), d)
    return {"monomial_value": value, "phi_count": count, "holds": value == m.coefficient * count}


def psi_identities(instance: H10Instance, d: Structure) -> dict:
    """``|D_H| * sum_P m_D == Ψ_P(D)`` and ``|D_C| * sum_N m_D == -Ψ_N(D)``."""
    enc = encode(instance)
    vi = enc.views[-1]
    assignment = sizes(d, instance)
    pos = sum(m.value(assignment) for m in instance.monomials if m.coefficient > 0)
    neg = sum(m.value(assignment) for m in instance.monomials if m.coefficient < 0)
    psi_p = sum(eval_boolean_cq(p, d) for p in vi.disjuncts if Atom("H", ()) in p.atoms)
    psi_n = sum(eval_boolean_cq(p, d) for p in vi.disjuncts if Atom("C", ()) in p.atoms)
    has_h, has_c = d.count("H"), d.count("C")
    return {
        "psi_p": psi_p,
        "psi_n": psi_n,
        "holds": has_h * pos == psi_p and has_c * neg == -psi_n,
    }


def witness_from_solution(instance: H10Instance, solution: Mapping[str, int]) -> WitnessPair:
    missing = [x for x in instance.unknowns if x not in solution]
    if missing:
        raise ValueError(f"solution lacks values for {missing}")
    if any(solution[x] < 0 for x in instance.unknowns):
        raise ValueError("solutions range over the natural numbers")
    if instance.evaluate(solution) != 0:
        raise ValueError(f"not a solution: the polynomial evaluates to {instance.evaluate(solution)}")
    enc = encode(instance)
    facts = {(relation_for(x), (f"a_{x}_{j}",)) for x in instance.unknowns for j in range(1, solution[x] + 1)}
    d = Structure(enc.schema, frozenset(facts | {("H", ())}))
    d_prime = Structure(enc.schema, frozenset(facts | {("C", ())}))
    wp = WitnessPair(d, d_prime, trace={"solution": dict(solution)})
    wp.report = verify_witness(list(enc.views), enc.query, wp)
    wp.status = "verified" if wp.report["passed"] else "failed"
    return wp


def view_counts(enc: Encoding, d: Structure) -> list[int]:
    return [eval_ucq(v, d) for v in enc.views]
