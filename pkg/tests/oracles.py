"""Independent reference implementations used only by the tests.

Everything here is deliberately naive: exhaustive maps, exhaustive
permutations, sympy for linear algebra, explicit walk enumeration.
"""

from __future__ import annotations

import itertools
from collections import Counter

import sympy

from bagdet.qcore import Structure


def brute_hom_count(a: Structure, b: Structure) -> int:
    src = sorted(a.domain)
    dst = sorted(b.domain)
    count = 0
    for image in itertools.product(dst, repeat=len(src)):
        h = dict(zip(src, image))
        if all((rel, tuple(h[x] for x in args)) in b.facts for rel, args in a.facts):
            count += 1
    return count


def brute_isomorphic(a: Structure, b: Structure) -> bool:
    if len(a.domain) != len(b.domain) or len(a.facts) != len(b.facts):
        return False
    src = sorted(a.domain)
    for perm in itertools.permutations(sorted(b.domain)):
        h = dict(zip(src, perm))
        if {(rel, tuple(h[x] for x in args)) for rel, args in a.facts} == b.facts:
            return True
    return False


def sympy_in_span(basis, target) -> bool:
    if not basis:
        return all(x == 0 for x in target)
    m = sympy.Matrix([list(map(sympy.Rational, v)) for v in basis]).T
    aug = m.row_join(sympy.Matrix([sympy.Rational(x) for x in target]))
    return m.rank() == aug.rank()


def sympy_inverse(rows):
    m = sympy.Matrix([[sympy.Rational(str(x)) for x in r] for r in rows])
    if m.det() == 0:
        return None
    return m.inv()


def walk_bag(word, d: Structure) -> Counter:
    """Bag answer of a path query by enumerating every walk explicitly."""
    out = Counter()
    elems = sorted(d.domain)
    if not word:
        return Counter({(x, x): 1 for x in elems})
    succ = {}
    for rel, (x, y) in ((r, a) for r, a in d.facts if len(a) == 2):
        succ.setdefault((rel, x), []).append(y)
    for start in elems:
        frontier = [start]
        for letter in word:
            frontier = [y for x in frontier for y in succ.get((letter, x), [])]
        for end in frontier:
            out[(start, end)] += 1
    return out


def join_count(pattern: Structure, d: Structure) -> int:
    """Homomorphism count by a plain atom-at-a-time join; isolated elements range over dom(d)."""
    by_rel = {}
    for rel, args in d.facts:
        by_rel.setdefault(rel, []).append(args)
    assignments = [{}]
    for rel, args in sorted(pattern.facts):
        nxt = []
        for h in assignments:
            for tup in by_rel.get(rel, []):
                g = dict(h)
                if all(g.setdefault(x, y) == y for x, y in zip(args, tup)):
                    nxt.append(g)
        assignments = nxt
        if not assignments:
            return 0
    used = {x for _, args in pattern.facts for x in args}
    free = len(pattern.domain - used)
    return len(assignments) * len(d.domain) ** free
