import random

import pytest

from bagdet.h10 import (
    H10Instance,
    Monomial,
    encode,
    parse_instance,
    phi_count_identity_check,
    psi_identities,
    view_counts,
    witness_from_solution,
)
from bagdet.qcore import QueryParseError, Structure, eval_ucq

X_MINUS_1 = "1 x1\n-1\n"
X_MINUS_2 = "1 x1\n-2\n"


def random_h10_structure(rng, instance):
    enc = encode(instance)
    facts = set()
    for x in instance.unknowns:
        for j in range(rng.randint(0, 3)):
            facts.add((x.upper(), (f"e{j}",)))
    for flag in ("H", "C"):
        if rng.random() < 0.5:
            facts.add((flag, ()))
    return Structure(enc.schema, frozenset(facts))


def test_parse_instance():
    inst = parse_instance("-2 x1^2 x3  # comment\n5\n")
    assert inst.unknowns == ("x1", "x3")
    assert inst.evaluate({"x1": 1, "x3": 2}) == 1
    assert parse_instance(str(inst.monomials[0])) == H10Instance.of([inst.monomials[0]])
    with pytest.raises(QueryParseError):
        parse_instance("x1")
    with pytest.raises(QueryParseError):
        parse_instance("0 x1")


def test_encoding_shape():
    enc = encode(parse_instance("2 x1\n-3\n"))
    names = [v.name for v in enc.views]
    assert names == ["V1", "V_x1", "VI"]
    vi = enc.views[-1]
    assert len(vi.disjuncts) == 5
    assert enc.query.disjuncts[0].atoms[0].relation == "H"


@pytest.mark.parametrize("text,solution", [(X_MINUS_1, 1), (X_MINUS_2, 2)])
def test_round_trip(text, solution):
    inst = parse_instance(text)
    wp = witness_from_solution(inst, {"x1": solution})
    assert wp.status == "verified"
    enc = encode(inst)
    assert view_counts(enc, wp.d) == view_counts(enc, wp.d_prime)
    assert eval_ucq(enc.query, wp.d) != eval_ucq(enc.query, wp.d_prime)
    # H and C swap between the two structures
    assert wp.d.count("H") == wp.d_prime.count("C") == 1
    assert wp.d.count("C") == wp.d_prime.count("H") == 0


def test_non_solution_rejected():
    with pytest.raises(ValueError):
        witness_from_solution(parse_instance(X_MINUS_1), {"x1": 2})
    with pytest.raises(ValueError):
        witness_from_solution(parse_instance(X_MINUS_1), {})


def test_identities_on_random_structures():
    rng = random.Random(8)
    inst = parse_instance("3 x1^2 x2\n-1 x2^2\n2 x1\n-4\n")
    for _ in range(100):
        d = random_h10_structure(rng, inst)
        for m in inst.monomials:
            assert phi_count_identity_check(m, d, inst.unknowns)["holds"]
        assert psi_identities(inst, d)["holds"]


def test_multivariate_solution():
    inst = parse_instance("1 x1 x2\n-6\n")
    wp = witness_from_solution(inst, {"x1": 2, "x2": 3})
    assert wp.status == "verified"


def test_monomial_degree_and_value():
    m = Monomial.of(-2, {"x1": 2, "x3": 1})
    assert m.degree("x1") == 2 and m.degree("x2") == 0
    assert m.value({"x1": 3, "x3": 2}) == -36
