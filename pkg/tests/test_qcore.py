import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bagdet.qcore import (
    Limits,
    QueryParseError,
    ResourceLimitExceeded,
    Schema,
    Structure,
    canonical_key,
    connected_components,
    eval_cq,
    eval_ucq,
    format_schema,
    format_structure,
    frozen_body,
    hom_count,
    hom_exists,
    is_isomorphic,
    iter_homs,
    loop_singleton,
    parse_cq,
    parse_path_query,
    parse_query_file,
    parse_schema,
    parse_structure,
    parse_ucq,
    structure_combine,
    structure_power,
    structure_product,
)
from bagdet.randgen import SMALL_SCHEMA, random_connected_structure, random_structure

from .oracles import brute_hom_count, brute_isomorphic

RS = Schema.of({"R": 2, "S": 2, "U": 1})


def facts(*items):
    return Structure(RS, frozenset(items))


# --- parsing ---------------------------------------------------------------


def test_parse_cq_infers_schema_and_round_trips():
    q = parse_cq("q() :- R(x,y), S(y,z).")
    assert q.is_boolean
    assert q.schema.arity("R") == 2
    assert parse_cq(str(q), q.schema) == q


def test_parse_free_variables_and_comments():
    q = parse_cq("# answers\nans(x) :- R(x,y).  # trailing\n")
    assert q.free_vars == ("x",)


def test_parse_nullary_and_empty_body():
    s = Schema.of({"H": 0, "R": 2})
    assert parse_cq("q() :- H().", s).atoms[0].args == ()
    assert parse_cq("q() :- .", s).atoms == ()


def test_query_file_groups_disjuncts():
    groups = parse_query_file("v() :- R(x,y).\nv() :- S(x,y).\nw() :- U(x).")
    assert [len(groups["v"]), len(groups["w"])] == [2, 1]
    u = parse_ucq("v() :- R(x,y).\nv() :- S(x,y).")
    assert len(u.disjuncts) == 2


@pytest.mark.parametrize(
    "text",
    [
        "q() :- R(x,y",
        "q() :- R(x,y), R(x).",
        "q(z) :- R(x,y).",
        "q() R(x,y).",
    ],
)
def test_parse_errors(text):
    with pytest.raises((QueryParseError, ValueError)):
        parse_cq(text)


def test_parse_error_has_position():
    with pytest.raises(QueryParseError) as info:
        parse_cq("q() :- R(x,y).\nq() :- R(x,,y).")
    assert "line 2" in str(info.value)


def test_unknown_relation_against_given_schema():
    with pytest.raises((QueryParseError, ValueError)):
        parse_cq("q() :- T(x).", RS)


def test_schema_and_structure_round_trip():
    s = parse_schema("R/2 S/2\nU/1")
    assert parse_schema(format_schema(s)) == s
    d = parse_structure("R(a,b)\nU(b)\n@isolated c", s)
    assert d.domain == {"a", "b", "c"}
    again = parse_structure(format_structure(d), s)
    assert again == d


def test_path_query_parsing():
    s = Schema.of({c: 2 for c in "AB"})
    assert parse_path_query("ABA", s).word == ("A", "B", "A")
    long = Schema.of({"Ra": 2, "Sb": 2})
    assert parse_path_query("Ra.Sb", long).word == ("Ra", "Sb")


# --- homomorphism counting -------------------------------------------------


def test_frozen_body_collapses_duplicates():
    q = parse_cq("q() :- R(x,y), R(x,y).", RS)
    assert len(frozen_body(q).facts) == 1


def test_small_counts():
    edge = facts(("R", ("a", "b")))
    tri = facts(("R", ("1", "2")), ("R", ("2", "3")), ("R", ("3", "1")))
    assert hom_count(edge, tri) == 3
    assert hom_count(tri, tri) == 3
    assert hom_count(tri, edge) == 0
    assert not hom_exists(tri, edge)
    assert len(list(iter_homs(edge, tri))) == 3


def test_isolated_elements_multiply_by_domain():
    a = Structure(RS, frozenset({("U", ("a",))}), frozenset({"a", "z"}), isolated_ok=True)
    b = Structure(RS, frozenset({("U", ("1",)), ("R", ("1", "2"))}))
    assert hom_count(a, b) == 2
    assert hom_count(a, b) == brute_hom_count(a, b)


def test_empty_pattern_counts_one():
    assert hom_count(Structure.empty(RS), facts(("R", ("a", "b")))) == 1


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_hom_count_matches_brute_force(seed):
    rng = random.Random(seed)
    a = random_structure(rng, SMALL_SCHEMA, 3)
    b = random_structure(rng, SMALL_SCHEMA, 4)
    assert hom_count(a, b) == brute_hom_count(a, b)


def test_search_budget_raises():
    rng = random.Random(3)
    big = Structure(RS, frozenset(("R", (f"{i}", f"{j}")) for i in range(8) for j in range(8)))
    path = Structure(RS, frozenset(("R", (f"p{i}", f"p{i+1}")) for i in range(6)))
    with pytest.raises(ResourceLimitExceeded):
        hom_count(path, big, Limits(max_search_nodes=50))
    assert rng  # keep fixture style consistent


# --- components and isomorphism --------------------------------------------


def test_components_split_and_isomorphic_pieces_share_keys():
    s = facts(("R", ("a", "b")), ("R", ("c", "d")), ("U", ("e",)))
    comps = connected_components(s)
    assert len(comps) == 3
    keys = [canonical_key(c) for c in comps]
    assert len(set(keys)) == 2


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_canonical_key_matches_permutation_oracle(seed):
    rng = random.Random(seed)
    a = random_connected_structure(rng, SMALL_SCHEMA, 4)
    if rng.random() < 0.5:
        names = sorted(a.domain)
        perm = names[:]
        rng.shuffle(perm)
        ren = dict(zip(names, (f"z{p}" for p in perm)))
        b = Structure(SMALL_SCHEMA, frozenset((r, tuple(ren[x] for x in args)) for r, args in a.facts))
    else:
        b = random_connected_structure(rng, SMALL_SCHEMA, 4)
    assert is_isomorphic(a, b) == brute_isomorphic(a, b)


def test_colour_refinement_hard_pair():
    # two 6-cycles vs one 6-cycle made of two triangles: same degrees everywhere
    hexagon = [("R", (f"h{i}", f"h{(i+1) % 6}")) for i in range(6)]
    hexagon += [("R", (f"h{(i+1) % 6}", f"h{i}")) for i in range(6)]
    tris = [("R", (f"t{i}", f"t{(i+1) % 3}")) for i in range(3)] + [("R", (f"u{i}", f"u{(i+1) % 3}")) for i in range(3)]
    tris += [("R", (b, a)) for _, (a, b) in tris]
    assert canonical_key(facts(*hexagon)) != canonical_key(facts(*tris))


# --- algebra ---------------------------------------------------------------


def test_combine_product_power_shapes():
    a = facts(("R", ("a", "b")))
    s = structure_combine([2, 1], [a, facts(("U", ("x",)))])
    assert len(s.domain) == 5
    p = structure_product(a, a)
    assert len(p.facts) == 1
    z = structure_power(a, 0)
    assert z == loop_singleton(RS) or is_isomorphic(z, loop_singleton(RS))
    assert len(structure_power(a, 3).facts) == 1


def test_domain_limit():
    a = facts(("R", ("a", "b")))
    with pytest.raises(ResourceLimitExceeded):
        structure_combine([100], [a], Limits(max_domain_size=50))


def test_loop_singleton_absorbs_everything():
    rng = random.Random(5)
    for _ in range(20):
        a = random_structure(rng, SMALL_SCHEMA, 4)
        assert hom_count(a, loop_singleton(SMALL_SCHEMA)) == 1


# --- evaluation ------------------------------------------------------------


def test_eval_cq_bag_and_ucq_sum():
    d = facts(("R", ("a", "b")), ("R", ("a", "c")), ("S", ("b", "c")))
    q = parse_cq("ans(x) :- R(x,y).", RS)
    assert eval_cq(q, d) == {("a",): 2}
    u = parse_ucq("v() :- R(x,y).\nv() :- S(x,y).", RS)
    assert eval_ucq(u, d) == 3
