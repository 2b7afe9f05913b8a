"""Built-in checks run by ``bagdet selftest``."""

from __future__ import annotations

import random
from fractions import Fraction

from . import exacta
from .detbool import decide
from .pathdet import MINUS_PLUS, PLUS_MINUS, find_path, prefix_graph, reduce_walk, walk_from_path
from .qcore import (
    Schema,
    connected_components,
    hom_count,
    parse_cq,
    parse_path_query,
    structure_combine,
    structure_power,
    structure_product,
)
from .randgen import SMALL_SCHEMA, random_connected_structure, random_structure


def hom_identities(a, b, c, t: int) -> dict[str, bool]:
    """The five sum/product/power identities for one triple; sum rules need connected ``a``."""
    ab, ac = hom_count(a, b), hom_count(a, c)
    connected = len(connected_components(a)) == 1
    out = {
        "product": hom_count(a, structure_product(b, c)) == ab * ac,
        "power": hom_count(a, structure_power(b, t)) == ab**t,
        "pattern_sum": hom_count(structure_combine([1, 1], [a, b]), c) == hom_count(a, c) * hom_count(b, c),
    }
    if connected:
        out["sum"] = hom_count(a, structure_combine([1, 1], [b, c])) == ab + ac
        out["multiple"] = hom_count(a, structure_combine([t], [b])) == t * ab
    return out


def identity_suite(trials: int, seed: int) -> dict:
    rng = random.Random(seed)
    failures = []
    checked = 0
    for i in range(trials):
        a = random_connected_structure(rng, SMALL_SCHEMA, 3) if i % 2 == 0 else random_structure(rng, SMALL_SCHEMA, 3)
        b = random_structure(rng, SMALL_SCHEMA, 5)
        c = random_structure(rng, SMALL_SCHEMA, 5)
        t = rng.randint(0, 2)
        for name, ok in hom_identities(a, b, c, t).items():
            checked += 1
            if not ok:
                failures.append({"trial": i, "identity": name})
    return {"checks": checked, "failures": failures, "passed": not failures}


def known_cases() -> dict[str, bool]:
    out = {}
    out["span_coefficients"] = exacta.span_membership([(2, 1, 3), (5, 2, 7)], (1, 1, 2)) == (3, -1)
    out["singular_2x2"] = exacta.invert(exacta.mat([[2, 4], [1, 2]])) is None
    inv = exacta.invert(exacta.mat([[1, 4], [1, 2]]))
    out["inverse_2x2"] = inv == exacta.mat([[-1, 2], [Fraction(1, 2), Fraction(-1, 2)]])

    s = Schema.of({c: 2 for c in "ABCD"})
    q = parse_path_query("ABCD", s)
    views = [parse_path_query(w, s) for w in ("ABC", "BC", "BCD")]
    moves = find_path(prefix_graph(q, views))
    walk = walk_from_path(q, views, moves) if moves else None
    out["path_abcd"] = (
        walk is not None
        and str(walk) == "ABCC⁻¹B⁻¹BCD"
        and reduce_walk(walk, q, PLUS_MINUS)[0].letters == tuple((a, 1) for a in "ABCD")
        and reduce_walk(walk, q, MINUS_PLUS)[0].letters == tuple((a, 1) for a in "ABCD")
    )

    rs = Schema.of({"R": 2, "S": 2})
    cq = parse_cq("q() :- R(x,y), S(y,z).", rs)
    verdict = decide([], cq, synthesize=True)
    wp = verdict.witness
    out["single_piece_trace"] = (
        not verdict.determined
        and wp is not None
        and wp.status == "verified"
        and wp.trace["multiplicities"] == [2]
        and wp.trace["multiplicities_prime"] == [3]
    )
    return out


def run(trials: int = 200, seed: int = 0) -> dict:
    identities = identity_suite(trials, seed)
    fixtures = known_cases()
    return {
        "hom_identities": identities,
        "fixtures": fixtures,
        "passed": identities["passed"] and all(fixtures.values()),
    }
