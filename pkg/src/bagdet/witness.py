"""Counterexample synthesis for non-determined boolean CQ instances.

The construction builds ``k`` basis structures whose evaluation matrix
against the query building blocks is nonsingular and on which every
irrelevant view vanishes, then picks two nonnegative integer
combinations ``D``, ``D'`` of them that agree on every relevant view
and differ on ``q``. The structures involved grow very fast, so they
are kept as expression trees and only materialized when small enough.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import exacta
from .detbool import Basis, Verdict, dedupe_views, nullary_relations, relevant_views
from .qcore import (
    ConjunctiveQuery,
    Limits,
    ResourceLimitExceeded,
    Schema,
    Structure,
    UnionQuery,
    canonical_key,
    connected_components,
    frozen_body,
    hom_count,
    is_isomorphic,
    is_nullary_piece,
    structure_combine,
    structure_power,
    structure_product,
    _limits,
)

log = logging.getLogger(__name__)

DEFAULT_MATERIALIZE_LIMIT = 10**5


# ---------------------------------------------------------------------------
# symbolic structures


@dataclass(frozen=True, eq=False)
class Sym:
    def domain_size(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Base(Sym):
    structure: Structure
    label: str = ""

    def domain_size(self) -> int:
        return len(self.structure.domain)

    def describe(self):
        return self.label or f"<{len(self.structure)} facts>"


@dataclass(frozen=True, eq=False)
class Sum(Sym):
    terms: tuple  # ((multiplicity, Sym), ...)
    schema: Schema = None

    def domain_size(self) -> int:
        return sum(m * node.domain_size() for m, node in self.terms)

    def describe(self):
        return {"sum": [[m, node.describe()] for m, node in self.terms]}


@dataclass(frozen=True, eq=False)
class Product(Sym):
    left: Sym
    right: Sym

    def domain_size(self) -> int:
        return self.left.domain_size() * self.right.domain_size()

    def describe(self):
        return {"product": [self.left.describe(), self.right.describe()]}


@dataclass(frozen=True, eq=False)
class Power(Sym):
    base: Sym
    exponent: int
    schema: Schema = None

    def domain_size(self) -> int:
        return self.base.domain_size() ** self.exponent

    def describe(self):
        return {"power": [self.base.describe(), self.exponent]}


def materialize(node: Sym, limits: Limits | None = None) -> Structure:
    limits = _limits(limits)
    size = node.domain_size()
    if size > limits.max_domain_size:
        raise ResourceLimitExceeded(f"materializing would create {size} elements (limit {limits.max_domain_size})")
    if isinstance(node, Base):
        return node.structure
    if isinstance(node, Sum):
        terms = [(m, n) for m, n in node.terms if m > 0]
        if not terms:
            return Structure.empty(node.schema)
        return structure_combine([m for m, _ in terms], [materialize(n, limits) for _, n in terms], limits)
    if isinstance(node, Product):
        return structure_product(materialize(node.left, limits), materialize(node.right, limits), limits)
    if isinstance(node, Power):
        if node.exponent == 0:
            return structure_power(Structure.empty(node.schema), 0, limits)
        return structure_power(materialize(node.base, limits), node.exponent, limits)
    raise TypeError(node)


class SymbolicCounter:
    """Homomorphism counts into expression trees via the sum/product/power rules.

    A pattern is split into connected pieces whose counts multiply. A
    connected piece counts additively over disjoint sums and
    multiplicatively over products; nullary pieces only test presence.
    """

    def __init__(self, limits: Limits | None = None):
        self.limits = limits
        self._cache: dict = {}

    def count(self, pattern: Structure, node: Sym) -> int:
        total = 1
        for piece in connected_components(pattern):
            total *= self._piece(piece, canonical_key(piece, self.limits), node)
            if total == 0:
                return 0
        return total

    def _piece(self, piece: Structure, key, node: Sym) -> int:
        cache_key = (key, id(node))
        hit = self._cache.get(cache_key)
        if hit is not None:
            return hit
        if is_nullary_piece(piece):
            value = int(self._has(next(iter(piece.facts)), node))
        elif not piece.facts:
            value = node.domain_size()
        elif isinstance(node, Base):
            value = hom_count(piece, node.structure, self.limits)
        elif isinstance(node, Sum):
            value = sum(m * self._piece(piece, key, n) for m, n in node.terms)
        elif isinstance(node, Product):
            value = self._piece(piece, key, node.left) * self._piece(piece, key, node.right)
        elif isinstance(node, Power):
            value = 1 if node.exponent == 0 else self._piece(piece, key, node.base) ** node.exponent
        else:
            raise TypeError(node)
        self._cache[cache_key] = value
        # keep the node alive so its id stays unique while cached
        self._cache.setdefault(("node", id(node)), node)
        return value

    def _has(self, fact, node: Sym) -> bool:
        if isinstance(node, Base):
            return fact in node.structure.facts
        if isinstance(node, Sum):
            return any(m > 0 and self._has(fact, n) for m, n in node.terms)
        if isinstance(node, Product):
            return self._has(fact, node.left) and self._has(fact, node.right)
        if isinstance(node, Power):
            return node.exponent == 0 or self._has(fact, node.base)
        raise TypeError(node)


# ---------------------------------------------------------------------------
# good basis


def _all_structures(schema: Schema, relations: Sequence[str], n: int):
    elems = [f"h{i}" for i in range(n)]
    slots = []
    for rel in relations:
        slots += [(rel, args) for args in itertools.product(elems, repeat=schema.arity(rel))]
    for mask in range(1 << len(slots)):
        facts = frozenset(slots[i] for i in range(len(slots)) if mask >> i & 1)
        yield Structure(schema, facts, frozenset(elems), isolated_ok=True)


def find_distinguisher(
    w: Structure, w2: Structure, limits: Limits | None = None, max_candidates: int = 200_000
) -> Structure:
    """A structure ``H`` with ``hom(w, H) != hom(w2, H)``.

    Tries ``w``, ``w2`` and their pairwise products first, then every
    structure over the relations of ``w`` and ``w2`` by increasing
    domain size up to the larger of the two domains.
    """
    if is_isomorphic(w, w2, limits):
        raise ValueError("isomorphic structures cannot be distinguished")
    candidates = [w, w2]
    for a, b in ((w, w), (w, w2), (w2, w2)):
        try:
            candidates.append(structure_product(a, b, limits))
        except ResourceLimitExceeded:
            pass
    for h in candidates:
        if hom_count(w, h, limits) != hom_count(w2, h, limits):
            return h
    schema = w.schema.merge(w2.schema)
    relations = sorted({rel for rel, _ in w.facts | w2.facts})
    tried = 0
    bound = max(len(w.domain), len(w2.domain))
    for n in range(1, bound + 1):
        for h in _all_structures(schema, relations, n):
            tried += 1
            if tried > max_candidates:
                raise ResourceLimitExceeded(
                    f"no distinguisher within {max_candidates} candidates (reached domain size {n}) "
                    f"for {sorted(w.facts)} vs {sorted(w2.facts)}"
                )
            if hom_count(w, h, limits) != hom_count(w2, h, limits):
                return h
    raise ResourceLimitExceeded(
        f"no distinguisher up to domain size {bound} for {sorted(w.facts)} vs {sorted(w2.facts)}"
    )


@dataclass
class GoodBasis:
    structures: tuple  # Sym nodes s_1..s_k
    eval_matrix: tuple
    inverse: tuple
    counter: SymbolicCounter
    trace: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.structures)


def _with_facts(s: Structure, extra: frozenset) -> Structure:
    return Structure(s.schema, s.facts | extra, s.domain, s.isolated_ok)


def build_good_basis(
    basis: Basis,
    q: ConjunctiveQuery,
    v0: Sequence[ConjunctiveQuery] = (),
    limits: Limits | None = None,
) -> GoodBasis:
    """Basis structures with a nonsingular evaluation matrix on which irrelevant views vanish.

    1. one distinguishing structure per pair of basis pieces;
    2. their radix-T sum ``s2`` (T above every count in step 1), so the
       pieces get pairwise distinct counts into ``s2``;
    3. the powers ``s2**0 .. s2**(k-1)`` (a Vandermonde matrix);
    4. each power times the frozen body of ``q``.
    """
    k = basis.k
    if k < 1:
        raise ValueError("a good basis needs at least one basis piece")
    qbody = frozen_body(q)
    schema = qbody.schema
    # nullary facts of q ride along so products with q keep them
    q_flags = frozenset(f for f in qbody.facts if not f[1])
    w = basis.components
    step1 = []
    for i, j in itertools.combinations(range(k), 2):
        step1.append(_with_facts(find_distinguisher(w[i], w[j], limits).with_schema(schema), q_flags))
    m1 = [[hom_count(wi, s, limits) for s in step1] for wi in w]
    radix = 1 + max((x for row in m1 for x in row), default=0)
    counter = SymbolicCounter(limits)
    if step1:
        s2 = Sum(tuple((radix ** (l + 1), Base(s, f"s1_{l + 1}")) for l, s in enumerate(step1)), schema)
    else:
        s2 = Base(Structure.empty(schema), "empty")
    qnode = Base(qbody, "q")
    structures = tuple(Product(Power(s2, j, schema), qnode) for j in range(k))
    m = exacta.mat([[counter.count(wi, s) for s in structures] for wi in w])
    inverse = exacta.invert(m)
    if inverse is None:
        raise ArithmeticError("evaluation matrix is singular; the construction is broken")
    s2_counts = [counter.count(wi, s2) for wi in w]
    if len(set(s2_counts)) != k:
        raise ArithmeticError("radix step failed to separate basis pieces")
    relevant = relevant_views(v0, q, limits)
    irrelevant = [v for v in v0 if v not in relevant]
    for v in irrelevant:
        body = frozen_body(v)
        if any(counter.count(body, s) for s in structures):
            raise ArithmeticError(f"view {v.name} does not vanish on the basis structures")
    trace = {
        "distinguishers": [sorted(map(list, [(r, list(a)) for r, a in s.facts])) for s in step1],
        "step1_matrix": m1,
        "radix": radix,
        "s2_counts": s2_counts,
        "eval_matrix": exacta.to_json(m),
    }
    return GoodBasis(structures, m, inverse, counter, trace)


# ---------------------------------------------------------------------------
# counterexample


@dataclass
class WitnessPair:
    d: Structure | None
    d_prime: Structure | None
    d_sym: Sym | None = None
    d_prime_sym: Sym | None = None
    trace: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    status: str = "unverified"
    diagnostics: list = field(default_factory=list)

    @property
    def materialized(self) -> bool:
        return self.d is not None and self.d_prime is not None


def eval_on_basis(v_vector: Sequence, gb: GoodBasis, s_vector: Sequence) -> int:
    """Answer of a query with vector ``v`` on the combination ``sum s[j] * s_j``."""
    for x in v_vector:
        if Fraction(x) < 0 or Fraction(x).denominator != 1:
            raise ValueError("query vectors have nonnegative integer entries")
    value = exacta.vecpow(exacta.matvec(gb.eval_matrix, s_vector), v_vector)
    return int(value)


T_LINEAR_UNTIL = 1024


def t_schedule(max_steps: int, linear_until: int = T_LINEAR_UNTIL):
    """``1 + 1/n`` then ``1 - 1/(n+1)`` for n = 2, 3, ...; past ``linear_until`` n doubles.

    The admissible neighbourhood of 1 can be far narrower than any
    linear scan reaches (its width shrinks with the entries of M and
    M^-1), so the tail is geometric.
    """
    n = 2
    for _ in range(max_steps):
        yield Fraction(n + 1, n)
        yield Fraction(n, n + 1)
        n = n + 1 if n < linear_until else 2 * n


def build_counterexample(
    gb: GoodBasis,
    v_vectors: Sequence[Sequence],
    q_vector: Sequence,
    schema: Schema | None = None,
    limits: Limits | None = None,
    max_materialized: int = DEFAULT_MATERIALIZE_LIMIT,
    max_t_steps: int = 10_000,
) -> WitnessPair:
    if exacta.span_membership(list(v_vectors), q_vector) is not None:
        raise exacta.PreconditionError("q vector lies in the span of the view vectors")
    k = gb.k
    m, m_inv = gb.eval_matrix, gb.inverse
    z = exacta.orthogonal_witness(list(v_vectors), q_vector)
    p = exacta.matvec(m, [1] * k)
    for t in t_schedule(max_t_steps):
        p_prime = exacta.hadamard(exacta.scalar_pow_vector(t, z), p)
        alpha_prime = exacta.nonneg_preimage(m_inv, p_prime)
        if alpha_prime is not None:
            break
    else:
        raise ResourceLimitExceeded(f"no t found within {max_t_steps} schedule steps")
    alpha = exacta.nonneg_preimage(m_inv, p)
    c, _ = exacta.integer_scale(alpha)
    c_prime, _ = exacta.integer_scale(alpha_prime)
    scale = c * c_prime
    mult = tuple(int(a * scale) for a in alpha)
    mult_prime = tuple(int(a * scale) for a in alpha_prime)
    d_sym = Sum(tuple(zip(mult, gb.structures)), schema)
    d_prime_sym = Sum(tuple(zip(mult_prime, gb.structures)), schema)
    trace = {
        "z": list(z),
        "p": exacta.to_json(p),
        "t": str(t),
        "p_prime": exacta.to_json(p_prime),
        "c": c,
        "c_prime": c_prime,
        "multiplicities": list(mult),
        "multiplicities_prime": list(mult_prime),
        "answer_vector": exacta.to_json(exacta.matvec(m, mult)),
        "answer_vector_prime": exacta.to_json(exacta.matvec(m, mult_prime)),
        "q_count": eval_on_basis(q_vector, gb, mult),
        "q_count_prime": eval_on_basis(q_vector, gb, mult_prime),
        "view_counts": [eval_on_basis(v, gb, mult) for v in v_vectors],
        "view_counts_prime": [eval_on_basis(v, gb, mult_prime) for v in v_vectors],
        "good_basis": gb.trace,
    }
    wp = WitnessPair(None, None, d_sym, d_prime_sym, trace)
    size = max(d_sym.domain_size(), d_prime_sym.domain_size())
    trace["domain_sizes"] = [d_sym.domain_size(), d_prime_sym.domain_size()]
    if size <= max_materialized:
        lim = Limits(_limits(limits).max_search_nodes, max(max_materialized, _limits(limits).max_domain_size))
        wp.d = materialize(d_sym, lim)
        wp.d_prime = materialize(d_prime_sym, lim)
    else:
        wp.diagnostics.append(
            f"witness kept symbolic: {size} domain elements exceeds the materialization limit {max_materialized}"
        )
    return wp


def nullary_witness(q: ConjunctiveQuery, missing: str) -> WitnessPair:
    """``D`` = frozen ``q``, ``D'`` = the same without the uncovered nullary fact."""
    d = frozen_body(q)
    d_prime = Structure(d.schema, d.facts - {(missing, ())})
    return WitnessPair(d, d_prime, Base(d, "q"), Base(d_prime, "q-minus-flag"), {"removed_nullary": missing})


# ---------------------------------------------------------------------------
# verification


def _as_disjuncts(query) -> list[ConjunctiveQuery]:
    return list(query.disjuncts) if isinstance(query, UnionQuery) else [query]


def _counts(query, structure, sym, counter, limits):
    """Counts of ``query`` by the direct and symbolic routes (None where a route is unavailable)."""
    direct = symbolic = None
    notes = []
    parts = _as_disjuncts(query)
    if structure is not None:
        try:
            direct = sum(hom_count(frozen_body(p), structure, limits) for p in parts)
        except ResourceLimitExceeded as exc:
            notes.append(f"direct count skipped: {exc}")
    if sym is not None:
        symbolic = sum(counter.count(frozen_body(p), sym) for p in parts)
    return direct, symbolic, notes


def verify_witness(v0: Sequence, q, wp: WitnessPair, limits: Limits | None = None) -> dict:
    """Recount every view and ``q`` on both structures and check the witness conditions.

    (A) ``q`` differs; (B) relevant views agree; (B0) the remaining views
    agree. Every available evaluation route is used and the routes must
    agree with each other.
    """
    counter = SymbolicCounter(limits)
    entries = []
    routes_agree = True
    notes = list(wp.diagnostics)
    split = isinstance(q, ConjunctiveQuery) and all(isinstance(v, ConjunctiveQuery) for v in v0)
    relevant = {id(v) for v in (relevant_views(v0, q, limits) if split else v0)}

    def entry(query, role):
        nonlocal routes_agree
        d1, s1, n1 = _counts(query, wp.d, wp.d_sym, counter, limits)
        d2, s2, n2 = _counts(query, wp.d_prime, wp.d_prime_sym, counter, limits)
        notes.extend(n1 + n2)
        for a, b in ((d1, s1), (d2, s2)):
            if a is not None and b is not None and a != b:
                routes_agree = False
        left = d1 if d1 is not None else s1
        right = d2 if d2 is not None else s2
        routes = [r for r, used in (("direct", d1 is not None and d2 is not None), ("symbolic", s1 is not None)) if used]
        entries.append({"name": query.name, "role": role, "d": left, "d_prime": right, "routes": routes})
        return left, right

    ql, qr = entry(q, "query")
    cond_a = ql is not None and qr is not None and ql != qr
    cond_b = cond_b0 = True
    for v in v0:
        role = ("relevant" if id(v) in relevant else "irrelevant") if split else "view"
        left, right = entry(v, role)
        ok = left is not None and left == right
        if role != "irrelevant":
            cond_b &= ok
        else:
            cond_b0 &= ok
    passed = cond_a and cond_b and cond_b0 and routes_agree
    return {
        "passed": passed,
        "A_query_differs": cond_a,
        "B_relevant_views_agree": cond_b,
        "B0_other_views_agree": cond_b0,
        "routes_agree": routes_agree,
        "counts": entries,
        "notes": notes,
    }


def synthesize(
    verdict: Verdict,
    q: ConjunctiveQuery,
    limits: Limits | None = None,
    max_materialized: int = DEFAULT_MATERIALIZE_LIMIT,
    max_t_steps: int = 10_000,
) -> WitnessPair:
    """Build and verify a witness for a negative verdict."""
    if verdict.determined:
        raise exacta.PreconditionError("determined instances have no counterexample")
    qbody = frozen_body(q)
    covered = set().union(*(nullary_relations(frozen_body(v)) for v in verdict.relevant_views))
    missing = sorted(nullary_relations(qbody) - covered)
    if missing:
        wp = nullary_witness(q, missing[0])
    else:
        views, _ = dedupe_views(verdict.views, limits)
        gb = build_good_basis(verdict.basis, q, views, limits)
        v_vectors = [verdict.vectors[v] for v in verdict.relevant_views]
        wp = build_counterexample(
            gb, v_vectors, verdict.vectors[q], qbody.schema, limits, max_materialized, max_t_steps
        )
    wp.report = verify_witness(verdict.views, q, wp, limits)
    wp.status = "verified" if wp.report["passed"] else "failed"
    return wp
