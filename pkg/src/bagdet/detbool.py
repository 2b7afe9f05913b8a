"""Bag-semantics determinacy for boolean conjunctive queries.

Views ``V0`` determine ``q`` exactly when the multiplicity vector of
``q`` over its connected building blocks lies in the linear span of the
vectors of the relevant views (those ``v`` with a homomorphism into
``q``). Nullary atoms are idempotent (a nullary fact is present or not),
so they are kept out of the vector space and handled by a coverage
check instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Sequence

from . import exacta
from .qcore import (
    ConjunctiveQuery,
    Limits,
    ResourceLimitExceeded,
    Structure,
    canonical_key,
    connected_components,
    eval_boolean_cq,
    frozen_body,
    hom_exists,
    is_nullary_piece,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Basis:
    """Pairwise non-isomorphic connected pieces of ``V ∪ {q}``.

    ``components`` are the linear coordinates; ``flags`` lists the
    nullary relations seen, which are tracked as presence bits.
    """

    components: tuple[Structure, ...]
    keys: tuple
    flags: tuple[str, ...] = ()

    @property
    def k(self) -> int:
        return len(self.components)

    def position(self, key) -> int:
        return self.keys.index(key)

    def vector(self, body: Structure) -> tuple[int, ...]:
        counts = [0] * self.k
        for piece in connected_components(body):
            if is_nullary_piece(piece):
                continue
            counts[self.position(canonical_key(piece))] += 1
        return tuple(counts)


def nullary_relations(body: Structure) -> frozenset[str]:
    return frozenset(rel for rel, args in body.facts if not args)


@dataclass
class Verdict:
    determined: bool
    relevant_views: list[ConjunctiveQuery]
    basis: Basis | None
    vectors: dict = field(default_factory=dict)
    coefficients: tuple | None = None
    witness: object = None
    diagnostics: dict = field(default_factory=dict)
    views: list[ConjunctiveQuery] = field(default_factory=list)

    @property
    def basis_size(self) -> int:
        return self.basis.k if self.basis is not None else 0

    def to_json(self, witness_files: Sequence[str] = ()) -> dict:
        return {
            "determined": self.determined,
            "k": self.basis_size,
            "relevant_views": [v.name for v in self.relevant_views],
            "coefficients": exacta.to_json(self.coefficients) if self.coefficients is not None else None,
            "witness_files": list(witness_files),
            "diagnostics": self.diagnostics,
        }


def _check_boolean(queries):
    for q in queries:
        if not q.is_boolean:
            raise ValueError(f"query {q.name} is not boolean")


def relevant_views(v0: Sequence[ConjunctiveQuery], q: ConjunctiveQuery, limits: Limits | None = None):
    """Views that every structure satisfying ``q`` also satisfies (hom from ``v`` into ``q``)."""
    _check_boolean([*v0, q])
    qbody = frozen_body(q)
    return [v for v in v0 if hom_exists(frozen_body(v), qbody, limits)]


def dedupe_views(v0: Sequence[ConjunctiveQuery], limits: Limits | None = None):
    """Keep the first view of each isomorphism class; returns (kept, dropped names)."""
    seen = set()
    kept, dropped = [], []
    for v in v0:
        key = canonical_key(frozen_body(v), limits)
        if key in seen:
            dropped.append(v.name)
        else:
            seen.add(key)
            kept.append(v)
    return kept, dropped


def component_basis(vprime: Sequence[ConjunctiveQuery], limits: Limits | None = None):
    """Basis of connected pieces and the multiplicity vector of each query."""
    by_key = {}
    flags = set()
    for v in vprime:
        body = frozen_body(v)
        flags |= nullary_relations(body)
        for piece in connected_components(body):
            if is_nullary_piece(piece):
                continue
            by_key.setdefault(canonical_key(piece, limits), piece)
    keys = tuple(sorted(by_key))
    basis = Basis(tuple(by_key[key] for key in keys), keys, tuple(sorted(flags)))
    vectors = {v: basis.vector(frozen_body(v)) for v in vprime}
    return basis, vectors


def decide(
    v0: Sequence[ConjunctiveQuery],
    q: ConjunctiveQuery,
    synthesize: bool = False,
    limits: Limits | None = None,
    witness_options: dict | None = None,
) -> Verdict:
    _check_boolean([*v0, q])
    views, dropped = dedupe_views(v0, limits)
    relevant = relevant_views(views, q, limits)
    basis, vectors = component_basis([*relevant, q], limits)
    diagnostics: dict = {
        "views": len(v0),
        "distinct_views": len(views),
        "duplicate_views": dropped,
        "relevant": len(relevant),
    }
    covered = set().union(*(nullary_relations(frozen_body(v)) for v in relevant))
    uncovered = sorted(nullary_relations(frozen_body(q)) - covered)
    coefficients = None
    if uncovered:
        diagnostics["reason"] = f"nullary atoms of q absent from every relevant view: {uncovered}"
    else:
        coefficients = exacta.span_membership([vectors[v] for v in relevant], vectors[q])
        if coefficients is None:
            diagnostics["reason"] = "q vector outside the span of the relevant view vectors"
    verdict = Verdict(
        determined=coefficients is not None,
        relevant_views=relevant,
        basis=basis,
        vectors=vectors,
        coefficients=coefficients,
        diagnostics=diagnostics,
        views=list(v0),
    )
    if not verdict.determined and synthesize:
        from . import witness

        try:
            verdict.witness = witness.synthesize(verdict, q, limits=limits, **(witness_options or {}))
            diagnostics["witness_status"] = verdict.witness.status
        except ResourceLimitExceeded as exc:
            log.info("witness synthesis stopped: %s", exc)
            diagnostics["witness_status"] = "resource-limit"
            diagnostics["witness_error"] = str(exc)
    return verdict


def explain_determined(
    coefficients: Sequence,
    views: Sequence[ConjunctiveQuery],
    q: ConjunctiveQuery,
    d: Structure,
    limits: Limits | None = None,
) -> dict:
    """Check that ``q(d)`` is recovered from the view answers on ``d``.

    With ``q = sum a_j v_j`` in vector form, ``q(d) = prod v_j(d) ** a_j``
    whenever every view is nonzero; raising both sides to the common
    denominator ``L`` of the ``a_j`` gives an identity between integers.
    If some view is zero, ``q(d)`` must be zero as well.
    """
    if len(coefficients) != len(views):
        raise ValueError("one coefficient per view expected")
    counts = [eval_boolean_cq(v, d, limits) for v in views]
    q_count = eval_boolean_cq(q, d, limits)
    report = {"view_counts": counts, "q_count": q_count}
    if any(c == 0 for c in counts):
        report["case"] = "zero-view"
        report["holds"] = q_count == 0
        return report
    denom, numerators = exacta.integer_scale([Fraction(a) for a in coefficients])
    lhs = q_count**denom * prod(c ** -a for c, a in zip(counts, numerators) if a < 0)
    rhs = prod(c**a for c, a in zip(counts, numerators) if a > 0)
    report["case"] = "all-positive"
    report["exponent_scale"] = denom
    report["holds"] = lhs == rhs
    return report
