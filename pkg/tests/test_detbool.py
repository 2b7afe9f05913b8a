import random
from fractions import Fraction

import pytest

from bagdet.detbool import component_basis, decide, dedupe_views, explain_determined, relevant_views
from bagdet.qcore import Schema, frozen_body, parse_cq, parse_query_file
from bagdet.randgen import BINARY_SCHEMA, SMALL_SCHEMA, random_connected_cq, random_structure, rename_variables

from .oracles import brute_isomorphic

RS = Schema.of({"R": 2, "S": 2, "U": 1})


def cq(text, schema=RS):
    return parse_cq(text, schema)


def views(text, schema=RS):
    return [ds[0] for ds in parse_query_file(text, schema).values()]


def example_instance():
    """Pieces R-edge, S-edge, U-point with vectors q=(1,1,2), v1=(2,1,3), v2=(5,2,7)."""
    from pathlib import Path

    here = Path(__file__).parent / "fixtures"
    q = cq((here / "span_query.cq").read_text())
    vs = views((here / "span_views.cq").read_text())
    return q, vs


def test_example_coefficients():
    q, vs = example_instance()
    verdict = decide(vs, q)
    assert verdict.determined
    assert verdict.coefficients == (3, -1)
    assert verdict.basis_size == 3


def test_example_explanation_holds_on_random_structures():
    q, vs = example_instance()
    coeffs = decide(vs, q).coefficients
    rng = random.Random(2)
    cases = set()
    for _ in range(30):
        d = random_structure(rng, SMALL_SCHEMA, 3)
        rep = explain_determined(coeffs, vs, q, d)
        assert rep["holds"]
        cases.add(rep["case"])
        # independent recomputation: every piece is a single fact, so counts are |R|^a |S|^b |U|^c
        r, s_, u = (d.count(rel) for rel in "RSU")
        qc = r * s_ * u**2
        vc = [r**2 * s_ * u**3, r**5 * s_**2 * u**7]
        assert (qc, vc) == (rep["q_count"], rep["view_counts"])
        if 0 in vc:
            assert qc == 0
        else:
            assert Fraction(qc) == Fraction(vc[0]) ** 3 / vc[1]
    assert cases == {"zero-view", "all-positive"}


def test_identical_view_determines():
    q = cq("q() :- R(x,y), S(y,z).")
    v = cq("v() :- S(b,c), R(a,b).")
    verdict = decide([v], q)
    assert verdict.determined and verdict.coefficients == (1,)


def test_irrelevant_views_are_ignored():
    q = cq("q() :- R(x,y).")
    v = cq("v() :- S(x,y).")
    verdict = decide([v], q)
    assert not verdict.determined
    assert relevant_views([v], q) == []


def test_set_determinacy_is_not_bag_determinacy():
    # R(x,y) determines R(x,y),R(u,w) under bags (it is the square)
    q = cq("q() :- R(x,y), R(u,w).")
    v = cq("v() :- R(x,y).")
    verdict = decide([v], q)
    assert verdict.determined and verdict.coefficients == (2,)
    # but a path of length 2 is not determined by a single edge
    assert not decide([v], cq("q() :- R(x,y), R(y,z).")).determined


def test_fractional_coefficients():
    q = cq("q() :- R(x,y).")
    v = cq("v() :- R(x,y), R(u,w).")
    verdict = decide([v], q)
    assert verdict.determined and verdict.coefficients == (Fraction(1, 2),)
    rng = random.Random(4)
    for _ in range(20):
        d = random_structure(rng, SMALL_SCHEMA, 4)
        assert explain_determined(verdict.coefficients, [v], q, d)["holds"]


def test_empty_views():
    assert not decide([], cq("q() :- R(x,y).")).determined
    empty_q = parse_cq("q() :- .", RS)
    verdict = decide([], empty_q)
    assert verdict.determined and verdict.coefficients == ()


def test_non_boolean_rejected():
    with pytest.raises(ValueError):
        decide([], parse_cq("q(x) :- R(x,y).", RS))


def test_duplicate_views_are_dropped():
    a = cq("a() :- R(x,y).")
    b = cq("b() :- R(u,w).")
    kept, dropped = dedupe_views([a, b])
    assert [v.name for v in kept] == ["a"] and dropped == ["b"]


def test_repeated_component_counts_twice():
    q = cq("q() :- R(x,y), R(u,w), S(a,b).")
    basis, vectors = component_basis([q])
    assert sorted(vectors[q]) == [1, 2]


def test_verdict_invariant_under_view_order_and_renaming():
    rng = random.Random(9)
    for _ in range(30):
        q = random_connected_cq(rng, BINARY_SCHEMA, 3)
        vs = [random_connected_cq(rng, BINARY_SCHEMA, 2, name=f"v{i}") for i in range(3)]
        base = decide(vs, q).determined
        shuffled = [rename_variables(v, rng) for v in vs]
        rng.shuffle(shuffled)
        assert decide(shuffled, rename_variables(q, rng)).determined == base


def test_connected_instances_determined_iff_isomorphic_view():
    rng = random.Random(21)
    seen = {True: 0, False: 0}
    for i in range(60):
        q = random_connected_cq(rng, BINARY_SCHEMA, 3)
        vs = [random_connected_cq(rng, BINARY_SCHEMA, 3, name=f"v{j}") for j in range(rng.randint(0, 3))]
        if vs and rng.random() < 0.4:
            vs.append(rename_variables(q, rng, name="copy"))
        expected = any(brute_isomorphic(frozen_body(v), frozen_body(q)) for v in vs)
        assert decide(vs, q).determined == expected
        seen[expected] += 1
    assert seen[True] and seen[False]


# --- nullary atoms ---------------------------------------------------------

HS = Schema.of({"H": 0, "R": 2})


def test_nullary_atom_covered_by_view():
    q = parse_cq("q() :- H(), R(x,y).", HS)
    v = parse_cq("v() :- H(), R(x,y), R(u,w).", HS)
    verdict = decide([v], q, synthesize=True)
    assert verdict.determined


def test_nullary_atom_not_covered_yields_witness():
    q = parse_cq("q() :- H(), R(x,y).", HS)
    v = parse_cq("v() :- R(x,y).", HS)
    verdict = decide([v], q, synthesize=True)
    assert not verdict.determined
    assert verdict.witness.status == "verified"
