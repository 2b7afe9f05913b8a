"""Determinacy for path queries.

Prefixes of ``q`` are nodes of an undirected graph with an edge between
``w`` and ``wv`` for each view word ``v``. The views determine ``q``
(under set and bag semantics alike) iff ``q`` is reachable from the
empty prefix. Reachability yields a signed walk that cancels back to
``q``; unreachability yields a pair of databases that agree on every
view answer bag but not on ``q``.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Sequence

from .qcore import Limits, PathQuery, Structure, eval_cq

PLUS_MINUS = "plus_minus"
MINUS_PLUS = "minus_plus"


class WalkError(ValueError):
    pass


@dataclass(frozen=True)
class PrefixGraph:
    """Nodes are prefix lengths ``0..|q|``; each edge carries the view that spans it."""

    q: PathQuery
    views: tuple[PathQuery, ...]
    edges: tuple[tuple[int, int, int], ...]  # (start, end, view index), start < end

    @property
    def nodes(self) -> range:
        return range(len(self.q) + 1)

    def neighbours(self, node: int):
        for start, end, vi in self.edges:
            if start == node:
                yield end, vi, 1
            elif end == node:
                yield start, vi, -1


def prefix_graph(q: PathQuery, views: Sequence[PathQuery]) -> PrefixGraph:
    edges = set()
    word = q.word
    for vi, v in enumerate(views):
        n = len(v.word)
        if n == 0:
            continue
        for i in range(len(word) - n + 1):
            if word[i : i + n] == v.word:
                edges.add((i, i + n, vi))
    return PrefixGraph(q, tuple(views), tuple(sorted(edges)))


def find_path(graph: PrefixGraph) -> list[tuple[int, int]] | None:
    """Shortest ε→q path as ``[(view index, +1/-1), ...]``, or None if unreachable."""
    target = len(graph.q)
    parent: dict[int, tuple[int, int, int] | None] = {0: None}
    queue = deque([0])
    while queue:
        node = queue.popleft()
        if node == target:
            break
        for nxt, vi, sign in sorted(graph.neighbours(node)):
            if nxt not in parent:
                parent[nxt] = (node, vi, sign)
                queue.append(nxt)
    if target not in parent:
        return None
    moves = []
    node = target
    while parent[node] is not None:
        prev, vi, sign = parent[node]
        moves.append((vi, sign))
        node = prev
    return moves[::-1]


def reachable(graph: PrefixGraph) -> set[int]:
    seen = {0}
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for nxt, _, _ in graph.neighbours(node):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def decide_path(q: PathQuery, views: Sequence[PathQuery]) -> bool:
    return len(q) in reachable(prefix_graph(q, views))


# ---------------------------------------------------------------------------
# walks


@dataclass(frozen=True)
class Walk:
    letters: tuple[tuple[str, int], ...]  # (relation, +1 or -1)

    def __str__(self) -> str:
        return "".join(a if s == 1 else f"{a}⁻¹" for a, s in self.letters) or "ε"

    def __len__(self) -> int:
        return len(self.letters)

    @classmethod
    def of_word(cls, word: Sequence[str], sign: int = 1) -> "Walk":
        if sign == 1:
            return cls(tuple((a, 1) for a in word))
        return cls(tuple((a, -1) for a in reversed(word)))


def is_q_walk(w: Walk, q: PathQuery) -> bool:
    """Signed positions stay within ``[0, |q|]``, end at ``|q|`` and read ``q``'s letters."""
    pos = 0
    for letter, sign in w.letters:
        if sign == 1:
            if pos >= len(q) or q.word[pos] != letter:
                return False
        elif sign == -1:
            if pos <= 0 or q.word[pos - 1] != letter:
                return False
        else:
            return False
        pos += sign
    return pos == len(q)


def walk_from_path(q: PathQuery, views: Sequence[PathQuery], moves: Sequence[tuple[int, int]]) -> Walk:
    """Concatenate view words (inverted on backward moves) along a prefix-graph path."""
    pos = 0
    letters: list = []
    for vi, sign in moves:
        if not 0 <= vi < len(views) or sign not in (1, -1):
            raise WalkError(f"bad move {(vi, sign)}")
        v = views[vi].word
        if sign == 1:
            ok = q.word[pos : pos + len(v)] == v
            nxt = pos + len(v)
        else:
            ok = pos - len(v) >= 0 and q.word[pos - len(v) : pos] == v
            nxt = pos - len(v)
        if not ok:
            raise WalkError(f"move {(vi, sign)} is not an edge at prefix length {pos}")
        letters.extend(Walk.of_word(v, sign).letters)
        pos = nxt
    if pos != len(q):
        raise WalkError("path does not end at q")
    return Walk(tuple(letters))


def reduce_walk(w: Walk, q: PathQuery, system: str = PLUS_MINUS) -> tuple[Walk, int]:
    """Cancel ``AA⁻¹`` (plus_minus) or ``A⁻¹A`` (minus_plus) pairs to a normal form.

    Returns the reduced walk and the number of cancellations.
    """
    if system not in (PLUS_MINUS, MINUS_PLUS):
        raise ValueError(f"unknown reduction system {system!r}")
    if not is_q_walk(w, q):
        raise WalkError(f"{w} is not a walk over {q}")
    first = 1 if system == PLUS_MINUS else -1
    stack: list = []
    steps = 0
    for letter, sign in w.letters:
        if stack and stack[-1] == (letter, first) and sign == -first:
            stack.pop()
            steps += 1
        else:
            stack.append((letter, sign))
    return Walk(tuple(stack)), steps


# ---------------------------------------------------------------------------
# evaluation


def incidence_matrix(d: Structure, relation: str, order: Sequence) -> list[list[int]]:
    pos = {c: i for i, c in enumerate(order)}
    n = len(order)
    m = [[0] * n for _ in range(n)]
    for rel, args in d.facts:
        if rel == relation:
            m[pos[args[0]]][pos[args[1]]] = 1
    return m


def _matmul(a, b):
    cols = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in cols] for row in a]


def eval_path_query(w: PathQuery, d: Structure) -> Counter:
    """Bag answer of a path query as a product of incidence matrices."""
    order = sorted(d.domain, key=repr)
    n = len(order)
    m = [[int(i == j) for j in range(n)] for i in range(n)]
    for letter in w.word:
        m = _matmul(m, incidence_matrix(d, letter, order))
    return Counter({(order[i], order[j]): m[i][j] for i in range(n) for j in range(n) if m[i][j]})


def eval_path_query_homs(w: PathQuery, d: Structure, limits: Limits | None = None) -> Counter:
    if not w.word:
        return Counter({(c, c): 1 for c in d.domain})
    return eval_cq(w.as_cq(), d, limits)


# ---------------------------------------------------------------------------
# witness


@dataclass
class PathWitness:
    d: Structure
    d_prime: Structure
    reachable: frozenset
    report: dict = field(default_factory=dict)

    @property
    def verified(self) -> bool:
        return bool(self.report.get("passed"))


def _node(prefix_len: int, copy: int) -> str:
    return f"w{prefix_len}_{copy}"


def build_path_witness(q: PathQuery, views: Sequence[PathQuery]) -> PathWitness:
    """Two copies of ``q``'s path; in ``D'`` an edge switches copy iff it crosses the reachability classes."""
    graph = prefix_graph(q, views)
    reach = reachable(graph)
    if len(q) in reach:
        raise ValueError("q is determined by the views; no witness exists")
    n = len(q)
    domain = frozenset(_node(i, j) for i in range(n + 1) for j in (0, 1))
    d_facts, dp_facts = set(), set()
    for i, letter in enumerate(q.word):
        same = (i in reach) == (i + 1 in reach)
        for j in (0, 1):
            d_facts.add((letter, (_node(i, j), _node(i + 1, j))))
            dp_facts.add((letter, (_node(i, j), _node(i + 1, j if same else 1 - j))))
    d = Structure(q.schema, frozenset(d_facts), domain, isolated_ok=True)
    d_prime = Structure(q.schema, frozenset(dp_facts), domain, isolated_ok=True)
    wp = PathWitness(d, d_prime, frozenset(reach))
    wp.report = verify_path_witness(q, views, d, d_prime)
    return wp


def verify_path_witness(q: PathQuery, views: Sequence[PathQuery], d: Structure, d_prime: Structure) -> dict:
    """Views must give equal bags (every tuple once); ``q`` must differ, including on the end-to-end tuple."""
    view_entries = []
    views_equal = True
    mult_one = True
    for v in views:
        a, b = eval_path_query(v, d), eval_path_query(v, d_prime)
        equal = a == b
        views_equal &= equal
        mult_one &= all(x == 1 for x in a.values()) and all(x == 1 for x in b.values())
        view_entries.append({"view": str(v), "equal": equal, "size": sum(a.values())})
    qa, qb = eval_path_query(q, d), eval_path_query(q, d_prime)
    end_to_end = (_node(0, 0), _node(len(q), 0))
    report = {
        "views_equal": views_equal,
        "view_tuples_multiplicity_one": mult_one,
        "query_differs": qa != qb,
        "end_to_end_in_d": qa.get(end_to_end, 0),
        "end_to_end_in_d_prime": qb.get(end_to_end, 0),
        "views": view_entries,
    }
    report["passed"] = (
        views_equal
        and report["query_differs"]
        and report["end_to_end_in_d"] == 1
        and report["end_to_end_in_d_prime"] == 0
    )
    return report


def bag_to_json(bag: Counter) -> list:
    return [[a, b, n] for (a, b), n in sorted(bag.items())]
