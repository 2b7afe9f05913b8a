import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bagdet.pathdet import (
    MINUS_PLUS,
    PLUS_MINUS,
    Walk,
    build_path_witness,
    decide_path,
    eval_path_query,
    eval_path_query_homs,
    find_path,
    incidence_matrix,
    is_q_walk,
    prefix_graph,
    reachable,
    reduce_walk,
    verify_path_witness,
    walk_from_path,
)
from bagdet.qcore import PathQuery, Schema, Structure, parse_path_query

from .oracles import walk_bag

ABCD = Schema.of({c: 2 for c in "ABCD"})
AB = Schema.of({"A": 2, "B": 2})


def pq(word, schema=ABCD):
    return parse_path_query(word, schema)


def test_example_graph_and_walk():
    q = pq("ABCD")
    views = [pq(w) for w in ("ABC", "BC", "BCD")]
    graph = prefix_graph(q, views)
    assert sorted(graph.edges) == [(0, 3, 0), (1, 3, 1), (1, 4, 2)]
    moves = find_path(graph)
    walk = walk_from_path(q, views, moves)
    assert str(walk) == "ABCC⁻¹B⁻¹BCD"
    assert is_q_walk(walk, q)
    for system in (PLUS_MINUS, MINUS_PLUS):
        reduced, steps = reduce_walk(walk, q, system)
        assert reduced == Walk.of_word(q.word)
        assert steps >= 1


def test_not_determined_example():
    q = pq("AB", AB)
    v = pq("A", AB)
    assert not decide_path(q, [v])
    assert reachable(prefix_graph(q, [v])) == {0, 1}


def test_witness_for_ab_over_a():
    q = pq("AB", AB)
    wp = build_path_witness(q, [pq("A", AB)])
    assert wp.verified
    assert wp.report["view_tuples_multiplicity_one"]
    assert wp.report["end_to_end_in_d"] == 1 and wp.report["end_to_end_in_d_prime"] == 0


def test_witness_refused_when_determined():
    with pytest.raises(ValueError):
        build_path_witness(pq("AB", AB), [pq("AB", AB)])


def test_empty_view_set_and_identity():
    q = pq("A", AB)
    assert not decide_path(q, [])
    assert decide_path(q, [q])


def test_reduction_under_both_systems_randomly():
    rng = random.Random(3)
    checked = 0
    for _ in range(200):
        n = rng.randint(1, 5)
        q = PathQuery(AB, tuple(rng.choice("AB") for _ in range(n)))
        views = []
        for _ in range(rng.randint(1, 4)):
            i = rng.randint(0, n - 1)
            j = rng.randint(i + 1, n)
            views.append(PathQuery(AB, q.word[i:j]))
        moves = find_path(prefix_graph(q, views))
        if moves is None:
            wp = build_path_witness(q, views)
            assert wp.verified
            continue
        walk = walk_from_path(q, views, moves)
        for system in (PLUS_MINUS, MINUS_PLUS):
            assert reduce_walk(walk, q, system)[0] == Walk.of_word(q.word)
        checked += 1
    assert checked > 20


def test_incidence_matrix_product():
    d = Structure.from_facts(AB, [("A", ("1", "2")), ("B", ("2", "3")), ("B", ("2", "1"))])
    order = sorted(d.domain)
    assert incidence_matrix(d, "A", order) == [[0, 1, 0], [0, 0, 0], [0, 0, 0]]
    assert eval_path_query(pq("AB", AB), d) == {("1", "3"): 1, ("1", "1"): 1}


def test_empty_word_is_identity():
    d = Structure.from_facts(AB, [("A", ("1", "2"))])
    assert eval_path_query(PathQuery(AB, ()), d) == {("1", "1"): 1, ("2", "2"): 1}


@settings(max_examples=120, deadline=None)
@given(
    st.lists(st.tuples(st.sampled_from("AB"), st.integers(0, 3), st.integers(0, 3)), max_size=10),
    st.lists(st.sampled_from("AB"), min_size=1, max_size=4),
)
def test_three_evaluations_agree(edges, word):
    d = Structure.from_facts(AB, [(r, (str(x), str(y))) for r, x, y in edges]) if edges else Structure.empty(AB)
    q = PathQuery(AB, tuple(word))
    a = eval_path_query(q, d)
    assert a == eval_path_query_homs(q, d)
    assert a == walk_bag(q.word, d)


def test_exhaustive_three_element_structures():
    elems = ["0", "1", "2"]
    pairs = list(itertools.product(elems, repeat=2))
    words = [w for n in (1, 2, 3) for w in itertools.product("AB", repeat=n)]
    for mask_a in range(0, 1 << 9, 7):
        for mask_b in range(0, 1 << 9, 11):
            facts = [("A", p) for i, p in enumerate(pairs) if mask_a >> i & 1]
            facts += [("B", p) for i, p in enumerate(pairs) if mask_b >> i & 1]
            d = Structure(AB, frozenset(facts), frozenset(elems), True)
            for w in words:
                q = PathQuery(AB, w)
                assert eval_path_query(q, d) == walk_bag(w, d)


def test_verify_detects_tampering():
    q = pq("AB", AB)
    v = pq("A", AB)
    wp = build_path_witness(q, [v])
    fact = next(f for f in sorted(wp.d_prime.facts) if f[0] == "A")
    dp = Structure(AB, wp.d_prime.facts - {fact}, wp.d_prime.domain, True)
    assert not verify_path_witness(q, [v], wp.d, dp)["passed"]
