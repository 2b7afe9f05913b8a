"""Relational structures, conjunctive queries and homomorphism counting.

A structure is a finite set of facts. A boolean conjunctive query is
identified with its frozen body, and its bag-semantics answer on a
database ``D`` is the number of homomorphisms from that body into ``D``.
"""

from __future__ import annotations

import itertools
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence


class ResourceLimitExceeded(RuntimeError):
    """A configured search or size budget was exhausted."""


class QueryParseError(ValueError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass
class Limits:
    max_search_nodes: int = 10**6
    max_domain_size: int = 10**5


DEFAULT_LIMITS = Limits()


def _limits(limits: Limits | None) -> Limits:
    return limits if limits is not None else DEFAULT_LIMITS


# ---------------------------------------------------------------------------
# schema and structures


@dataclass(frozen=True)
class Schema:
    relations: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.relations]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate relation names in schema: {names}")
        for name, arity in self.relations:
            if arity < 0:
                raise ValueError(f"negative arity for {name}")

    @classmethod
    def of(cls, relations: Mapping[str, int] | Iterable[tuple[str, int]]) -> "Schema":
        items = relations.items() if isinstance(relations, Mapping) else relations
        return cls(tuple(sorted(items)))

    def arity(self, name: str) -> int:
        for rel, arity in self.relations:
            if rel == name:
                return arity
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(rel == name for rel, _ in self.relations)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.relations)

    def merge(self, other: "Schema") -> "Schema":
        merged = dict(self.relations)
        for name, arity in other.relations:
            if merged.get(name, arity) != arity:
                raise ValueError(f"arity conflict for {name}: {merged[name]} vs {arity}")
            merged[name] = arity
        return Schema.of(merged)


Fact = tuple  # (relation, (const, ...))


@dataclass(frozen=True)
class Structure:
    """A finite set of facts over a schema.

    ``domain`` is normally the active domain. Elements that occur in no
    fact are allowed only when ``isolated_ok`` is set (path-query
    witnesses compare structures over a shared, not necessarily active,
    domain).
    """

    schema: Schema
    facts: frozenset
    domain: frozenset = None  # type: ignore[assignment]
    isolated_ok: bool = False

    def __post_init__(self):
        active = set()
        for rel, args in self.facts:
            if rel not in self.schema:
                raise ValueError(f"relation {rel} not in schema")
            if len(args) != self.schema.arity(rel):
                raise ValueError(f"arity mismatch in fact {rel}{args}")
            active.update(args)
        if self.domain is None:
            object.__setattr__(self, "domain", frozenset(active))
        else:
            dom = frozenset(self.domain)
            if not active <= dom:
                raise ValueError("facts use constants outside the domain")
            if dom != active and not self.isolated_ok:
                raise ValueError("domain has isolated elements; pass isolated_ok=True")
            object.__setattr__(self, "domain", dom)

    @classmethod
    def from_facts(cls, schema: Schema, facts: Iterable, domain=None, isolated_ok=False):
        return cls(schema, frozenset((rel, tuple(args)) for rel, args in facts), domain, isolated_ok)

    @classmethod
    def empty(cls, schema: Schema) -> "Structure":
        return cls(schema, frozenset())

    def __len__(self) -> int:
        return len(self.facts)

    @property
    def isolated(self) -> frozenset:
        used = {c for _, args in self.facts for c in args}
        return self.domain - used

    def sorted_facts(self) -> list:
        return sorted(self.facts)

    def count(self, relation: str) -> int:
        return sum(1 for rel, _ in self.facts if rel == relation)

    def with_schema(self, schema: Schema) -> "Structure":
        return Structure(schema, self.facts, self.domain, self.isolated_ok)

    def __str__(self) -> str:
        return format_structure(self)


# ---------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class Atom:
    relation: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.relation}({','.join(self.args)})"


@dataclass(frozen=True)
class ConjunctiveQuery:
    schema: Schema
    free_vars: tuple[str, ...]
    atoms: tuple[Atom, ...]
    name: str = "q"

    def __post_init__(self):
        if len(set(self.free_vars)) != len(self.free_vars):
            raise ValueError("free variable listed twice")
        for atom in self.atoms:
            if atom.relation not in self.schema:
                raise ValueError(f"unknown relation {atom.relation}")
            if self.schema.arity(atom.relation) != len(atom.args):
                raise ValueError(f"arity mismatch in atom {atom}")
        body_vars = {v for atom in self.atoms for v in atom.args}
        missing = set(self.free_vars) - body_vars
        if missing:
            raise ValueError(f"free variables not in body: {sorted(missing)}")

    @property
    def is_boolean(self) -> bool:
        return not self.free_vars

    @property
    def variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for atom in self.atoms:
            for v in atom.args:
                seen.setdefault(v)
        return list(seen)

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in self.atoms)
        head = f"{self.name}({','.join(self.free_vars)})"
        return f"{head} :- {body} ." if body else f"{head} :- ."


@dataclass(frozen=True)
class UnionQuery:
    disjuncts: tuple[ConjunctiveQuery, ...]

    def __post_init__(self):
        if not self.disjuncts:
            raise ValueError("a union query needs at least one disjunct")
        schema = self.disjuncts[0].schema
        for q in self.disjuncts:
            if not q.is_boolean:
                raise ValueError("union queries are boolean")
            if q.schema != schema:
                raise ValueError("disjuncts must share one schema")

    @property
    def name(self) -> str:
        return self.disjuncts[0].name

    @property
    def schema(self) -> Schema:
        return self.disjuncts[0].schema

    def __str__(self) -> str:
        return "\n".join(str(q) for q in self.disjuncts)


@dataclass(frozen=True)
class PathQuery:
    """A path query, identified with a word over binary relation names.

    The empty word is the identity query; it can be constructed
    internally but is rejected by the parser.
    """

    schema: Schema
    word: tuple[str, ...]

    def __post_init__(self):
        for letter in self.word:
            if letter not in self.schema or self.schema.arity(letter) != 2:
                raise ValueError(f"{letter!r} is not a binary relation of the schema")

    def __len__(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        sep = "" if all(len(a) == 1 for a in self.word) else "."
        return sep.join(self.word) if self.word else "ε"

    def as_cq(self) -> ConjunctiveQuery:
        n = len(self.word)
        if n == 0:
            raise ValueError("the empty word is not a conjunctive query")
        names = ["x"] + [f"x{i}" for i in range(1, n)] + ["y"]
        atoms = tuple(Atom(r, (names[i], names[i + 1])) for i, r in enumerate(self.word))
        return ConjunctiveQuery(self.schema, ("x", "y"), atoms, name=str(self))


# ---------------------------------------------------------------------------
# parsing and formatting

_IDENT = r"[A-Za-z_][A-Za-z0-9_']*"
_CONST = r"[^\s,()#]+"


def _tokenize(text: str, line: int) -> list[tuple[str, str, int]]:
    spec = [
        ("IMPLIES", r":-"),
        ("IDENT", _IDENT),
        ("LPAREN", r"\("),
        ("RPAREN", r"\)"),
        ("COMMA", r","),
        ("DOT", r"\."),
        ("WS", r"\s+"),
    ]
    regex = re.compile("|".join(f"(?P<{name}>{pat})" for name, pat in spec))
    tokens = []
    pos = 0
    while pos < len(text):
        m = regex.match(text, pos)
        if m is None:
            raise QueryParseError(f"unexpected character {text[pos]!r}", line, pos + 1)
        if m.lastgroup != "WS":
            tokens.append((m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str, line: int):
        self.tokens = _tokenize(text, line)
        self.i = 0
        self.line = line
        self.end_col = len(text) + 1

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("EOF", "", self.end_col)

    def expect(self, kind: str) -> str:
        tok = self.peek()
        if tok[0] != kind:
            found = tok[1] or "end of line"
            raise QueryParseError(f"expected {kind.lower()}, found {found!r}", self.line, tok[2])
        self.i += 1
        return tok[1]

    def ident_list(self) -> list[tuple[str, int]]:
        self.expect("LPAREN")
        items = []
        if self.peek()[0] != "RPAREN":
            while True:
                col = self.peek()[2]
                items.append((self.expect("IDENT"), col))
                if self.peek()[0] != "COMMA":
                    break
                self.i += 1
        self.expect("RPAREN")
        return items


def _parse_statement(text: str, line: int):
    p = _Parser(text, line)
    name = p.expect("IDENT")
    head = p.ident_list()
    p.expect("IMPLIES")
    atoms = []
    if p.peek()[0] != "DOT":
        while True:
            col = p.peek()[2]
            rel = p.expect("IDENT")
            args = p.ident_list()
            atoms.append((rel, tuple(a for a, _ in args), col))
            if p.peek()[0] != "COMMA":
                break
            p.i += 1
    p.expect("DOT")
    if p.peek()[0] != "EOF":
        raise QueryParseError(f"trailing input {p.peek()[1]!r}", line, p.peek()[2])
    return name, [v for v, _ in head], atoms


def _check_atoms(atoms, schema: Schema | None, line: int, inferred: dict):
    for rel, args, col in atoms:
        if schema is not None:
            if rel not in schema:
                raise QueryParseError(f"unknown relation {rel}", line, col)
            if schema.arity(rel) != len(args):
                raise QueryParseError(
                    f"arity mismatch for {rel}: expected {schema.arity(rel)}, got {len(args)}", line, col
                )
        else:
            if inferred.setdefault(rel, len(args)) != len(args):
                raise QueryParseError(f"arity mismatch for {rel}", line, col)


def parse_statements(text: str, schema: Schema | None = None):
    """Parse every query statement in ``text``.

    Returns ``(schema, [(name, free_vars, atoms)])``; when ``schema`` is
    None it is inferred from the relations used.
    """
    raw = []
    inferred: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        stripped = line.strip()
        if not stripped:
            continue
        name, head, atoms = _parse_statement(line, lineno)
        _check_atoms(atoms, schema, lineno, inferred)
        body_vars = {v for _, args, _ in atoms for v in args}
        for v in head:
            if v not in body_vars:
                raise QueryParseError(f"free variable {v} does not occur in the body", lineno, 1)
        if len(set(head)) != len(head):
            raise QueryParseError("free variable listed twice", lineno, 1)
        raw.append((name, head, atoms))
    if schema is None:
        schema = Schema.of(inferred)
    out = []
    for name, head, atoms in raw:
        out.append(ConjunctiveQuery(schema, tuple(head), tuple(Atom(r, a) for r, a, _ in atoms), name))
    return schema, out


def parse_cq(text: str, schema: Schema | None = None) -> ConjunctiveQuery:
    _, queries = parse_statements(text, schema)
    if len(queries) != 1:
        raise QueryParseError(f"expected exactly one query statement, found {len(queries)}")
    return queries[0]


def parse_query_file(text: str, schema: Schema | None = None) -> dict[str, list[ConjunctiveQuery]]:
    """Group statements by name; statements sharing a name are disjuncts."""
    _, queries = parse_statements(text, schema)
    grouped: dict[str, list[ConjunctiveQuery]] = {}
    for q in queries:
        grouped.setdefault(q.name, []).append(q)
    return grouped


def parse_ucq(text: str, schema: Schema | None = None) -> UnionQuery:
    grouped = parse_query_file(text, schema)
    if len(grouped) != 1:
        raise QueryParseError(f"expected one query name, found {sorted(grouped)}")
    return UnionQuery(tuple(next(iter(grouped.values()))))


def parse_schema(text: str) -> Schema:
    rels = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        for token in line.split("#", 1)[0].split():
            m = re.fullmatch(rf"({_IDENT})/(\d+)", token)
            if m is None:
                raise QueryParseError(f"bad schema entry {token!r}", lineno, line.find(token) + 1)
            if m.group(1) in rels:
                raise QueryParseError(f"duplicate relation {m.group(1)}", lineno, line.find(token) + 1)
            rels[m.group(1)] = int(m.group(2))
    return Schema.of(rels)


def format_schema(schema: Schema) -> str:
    return "".join(f"{name}/{arity}\n" for name, arity in schema.relations)


_FACT_RE = re.compile(rf"\s*({_IDENT})\s*\(\s*((?:{_CONST}\s*(?:,\s*{_CONST}\s*)*)?)\)\s*")


def parse_structure(text: str, schema: Schema | None = None) -> Structure:
    """Read a structure file: one ``REL(c1,...,cn)`` fact per line.

    A line ``@isolated c1 c2 ...`` declares domain elements that occur
    in no fact.
    """
    facts = set()
    isolated: set[str] = set()
    inferred: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("@isolated"):
            isolated.update(stripped.split()[1:])
            continue
        m = _FACT_RE.fullmatch(line)
        if m is None:
            raise QueryParseError(f"malformed fact {stripped!r}", lineno, 1)
        rel = m.group(1)
        args = tuple(a.strip() for a in m.group(2).split(",")) if m.group(2).strip() else ()
        if schema is not None:
            if rel not in schema:
                raise QueryParseError(f"unknown relation {rel}", lineno, 1)
            if schema.arity(rel) != len(args):
                raise QueryParseError(f"arity mismatch for {rel}", lineno, 1)
        elif inferred.setdefault(rel, len(args)) != len(args):
            raise QueryParseError(f"arity mismatch for {rel}", lineno, 1)
        facts.add((rel, args))
    if schema is None:
        schema = Schema.of(inferred)
    active = {c for _, args in facts for c in args}
    domain = active | isolated
    return Structure(schema, frozenset(facts), frozenset(domain), isolated_ok=bool(isolated - active))


def format_structure(s: Structure) -> str:
    lines = [f"{rel}({','.join(map(str, args))})" for rel, args in s.sorted_facts()]
    iso = sorted(map(str, s.isolated))
    if iso:
        lines.append("@isolated " + " ".join(iso))
    return "".join(line + "\n" for line in lines)


def parse_path_query(text: str, schema: Schema) -> PathQuery:
    """Parse a word such as ``ABC`` (single-letter names) or ``R.S.R``."""
    word = text.strip()
    if not word:
        raise QueryParseError("empty path query")
    if "." in word:
        letters = tuple(word.split("."))
    elif all(len(name) == 1 for name in schema.names):
        letters = tuple(word)
    else:
        letters = (word,)
    for i, letter in enumerate(letters):
        if letter not in schema:
            raise QueryParseError(f"unknown relation {letter!r}", 1, i + 1)
        if schema.arity(letter) != 2:
            raise QueryParseError(f"relation {letter!r} is not binary", 1, i + 1)
    return PathQuery(schema, letters)


# ---------------------------------------------------------------------------
# frozen bodies and homomorphisms


def frozen_body(q: ConjunctiveQuery) -> Structure:
    """Replace each variable by a constant of the same name; duplicate atoms collapse."""
    if not q.is_boolean:
        raise ValueError("frozen_body expects a boolean query")
    return Structure(q.schema, frozenset((a.relation, a.args) for a in q.atoms))


def _pattern_body(q: ConjunctiveQuery) -> Structure:
    return Structure(q.schema, frozenset((a.relation, a.args) for a in q.atoms))


class _Index:
    """Per-relation fact lookup keyed by a partial argument assignment.

    For each (relation, bound positions, free position) pattern a hash
    table from bound values to candidate values is built once.
    """

    def __init__(self, b: Structure):
        self.facts = b.facts
        self.by_rel: dict[str, list[tuple]] = defaultdict(list)
        for rel, args in b.facts:
            self.by_rel[rel].append(args)
        self._tables: dict = {}

    def candidates(self, rel: str, bound: tuple[tuple[int, object], ...], pos: int) -> set:
        positions = tuple(i for i, _ in bound)
        table = self._tables.get((rel, positions, pos))
        if table is None:
            table = defaultdict(set)
            for args in self.by_rel.get(rel, ()):
                table[tuple(args[i] for i in positions)].add(args[pos])
            self._tables[(rel, positions, pos)] = table
        return table.get(tuple(c for _, c in bound), _EMPTY)


_EMPTY: frozenset = frozenset()


@lru_cache(maxsize=8)
def _index_for(b: Structure) -> _Index:
    return _Index(b)


def _variable_order(facts: Sequence[tuple], elements: Sequence) -> list:
    degree = Counter(c for _, args in facts for c in set(args))
    adjacency: dict = defaultdict(set)
    for _, args in facts:
        for c in args:
            adjacency[c].update(args)
    order: list = []
    placed: set = set()
    remaining = sorted(elements, key=lambda c: (-degree[c], repr(c)))
    while len(order) < len(remaining):
        frontier = [c for c in remaining if c not in placed and adjacency[c] & placed]
        pool = frontier or [c for c in remaining if c not in placed]
        nxt = pool[0]
        order.append(nxt)
        placed.add(nxt)
    return order


class _HomSearch:
    def __init__(self, a: Structure, b: Structure, limits: Limits):
        self.b = b
        self.limits = limits
        self.nodes = 0
        self.index = _index_for(b)
        facts = [f for f in a.facts if f[1]]
        used = {c for _, args in facts for c in args}
        self.order = _variable_order(facts, sorted(used, key=repr))
        self.position = {c: i for i, c in enumerate(self.order)}
        # facts checked when their last variable (in search order) is assigned
        self.check_at: list[list[tuple]] = [[] for _ in self.order]
        # per variable: a fact that links it to an earlier variable, for candidate generation
        self.anchor: list = [None] * len(self.order)
        for rel, args in facts:
            last = max(self.position[c] for c in args)
            self.check_at[last].append((rel, args))
        for i, c in enumerate(self.order):
            best = None
            for rel, args in facts:
                if c not in args:
                    continue
                bound_count = sum(1 for x in args if self.position[x] < i)
                if bound_count and (best is None or bound_count > best[0]):
                    best = (bound_count, rel, args)
            if best is not None:
                self.anchor[i] = (best[1], best[2])
            else:
                # unanchored variable: draw candidates from its rarest relation
                rels = [(len(self.index.by_rel.get(rel, ())), rel, args) for rel, args in facts if c in args]
                if rels:
                    _, rel, args = min(rels, key=lambda r: (r[0], r[1], repr(r[2])))
                    self.anchor[i] = (rel, args)

    def _candidates(self, i: int, assign: dict) -> Iterable:
        anchor = self.anchor[i]
        if anchor is None:
            return self.b.domain
        rel, args = anchor
        var = self.order[i]
        bound = tuple((j, assign[x]) for j, x in enumerate(args) if x in assign)
        pos = args.index(var)
        return self.index.candidates(rel, bound, pos)

    def _consistent(self, i: int, assign: dict) -> bool:
        facts = self.b.facts
        for rel, args in self.check_at[i]:
            if (rel, tuple(assign[x] for x in args)) not in facts:
                return False
        return True

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.limits.max_search_nodes:
            raise ResourceLimitExceeded(
                f"homomorphism search exceeded {self.limits.max_search_nodes} nodes"
            )

    def count(self, stop_at_first: bool = False) -> int:
        n = len(self.order)
        if n == 0:
            return 1
        assign: dict = {}

        def rec(i: int) -> int:
            var = self.order[i]
            total = 0
            for c in self._candidates(i, assign):
                self._tick()
                assign[var] = c
                if self._consistent(i, assign):
                    total += 1 if i == n - 1 else rec(i + 1)
                    if stop_at_first and total:
                        del assign[var]
                        return total
                del assign[var]
            return total

        return rec(0)

    def iterate(self) -> Iterator[dict]:
        n = len(self.order)
        assign: dict = {}
        if n == 0:
            yield {}
            return

        def rec(i: int):
            var = self.order[i]
            for c in sorted(self._candidates(i, assign), key=repr):
                self._tick()
                assign[var] = c
                if self._consistent(i, assign):
                    if i == n - 1:
                        yield dict(assign)
                    else:
                        yield from rec(i + 1)
                del assign[var]

        yield from rec(0)


def _nullary_ok(a: Structure, b: Structure) -> bool:
    return all(f in b.facts for f in a.facts if not f[1])


def hom_count(a: Structure, b: Structure, limits: Limits | None = None) -> int:
    """Exact number of homomorphisms from ``a`` to ``b``.

    Connected pieces of ``a`` are counted separately and multiplied;
    isolated domain elements of ``a`` contribute a factor ``|dom(b)|``.
    """
    limits = _limits(limits)
    if not _nullary_ok(a, b):
        return 0
    total = len(b.domain) ** len(a.isolated)
    if total == 0:
        return 0
    for piece in _fact_pieces(a):
        c = _HomSearch(piece, b, limits).count()
        if c == 0:
            return 0
        total *= c
    return total


def hom_exists(a: Structure, b: Structure, limits: Limits | None = None) -> bool:
    limits = _limits(limits)
    if not _nullary_ok(a, b):
        return False
    if a.isolated and not b.domain:
        return False
    return all(_HomSearch(piece, b, limits).count(stop_at_first=True) for piece in _fact_pieces(a))


def iter_homs(a: Structure, b: Structure, limits: Limits | None = None) -> Iterator[dict]:
    """Enumerate homomorphisms restricted to constants occurring in non-nullary facts."""
    limits = _limits(limits)
    if not _nullary_ok(a, b):
        return iter(())
    body = Structure(a.schema, frozenset(f for f in a.facts if f[1]))
    return _HomSearch(body, b, limits).iterate()


def _fact_pieces(a: Structure) -> list[Structure]:
    """Connected pieces of the non-nullary facts of ``a``."""
    facts = [f for f in a.facts if f[1]]
    if not facts:
        return []
    parent: dict = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for _, args in facts:
        root = find(args[0])
        for c in args[1:]:
            parent[find(c)] = root
    groups: dict = defaultdict(list)
    for f in facts:
        groups[find(f[1][0])].append(f)
    return [Structure(a.schema, frozenset(g)) for g in groups.values()]


# ---------------------------------------------------------------------------
# components and isomorphism


def connected_components(s: Structure) -> list[Structure]:
    """Split into connected pieces, ordered by canonical key.

    Each nullary fact and each isolated domain element is its own piece.
    """
    pieces = _fact_pieces(s)
    pieces += [Structure(s.schema, frozenset([f])) for f in s.facts if not f[1]]
    pieces += [
        Structure(s.schema, frozenset(), frozenset([c]), isolated_ok=True) for c in s.isolated
    ]
    return sorted(pieces, key=lambda p: (canonical_key(p), sorted(map(repr, p.domain))))


def is_nullary_piece(s: Structure) -> bool:
    return len(s.facts) == 1 and not next(iter(s.facts))[1]


def _refine(elements: list, facts: list, colors: dict) -> dict:
    """Colour refinement to a stable partition; colours are canonical ranks."""
    incident: dict = defaultdict(list)
    for rel, args in facts:
        for pos, c in enumerate(args):
            incident[c].append((rel, pos, args))
    while True:
        sig = {}
        for c in elements:
            neigh = sorted((rel, pos, tuple(colors[x] for x in args)) for rel, pos, args in incident[c])
            sig[c] = (colors[c], tuple(neigh))
        ranks = {s: r for r, s in enumerate(sorted(set(sig.values())))}
        new = {c: ranks[sig[c]] for c in elements}
        if len(set(new.values())) == len(set(colors.values())):
            return new
        colors = new


def _connected_key(s: Structure, limits: Limits):
    facts = sorted(s.facts)
    elements = sorted(s.domain, key=repr)
    if not elements:
        return ("facts", tuple(facts))
    colors = _refine(elements, facts, {c: 0 for c in elements})
    budget = [0]
    best: list = [None]

    def encode(col: dict):
        return tuple(sorted((rel, tuple(col[x] for x in args)) for rel, args in facts))

    def search(col: dict):
        budget[0] += 1
        if budget[0] > limits.max_search_nodes:
            raise ResourceLimitExceeded("canonical labelling exceeded the search budget")
        classes: dict = defaultdict(list)
        for c in elements:
            classes[col[c]].append(c)
        cell = None
        for color in sorted(classes):
            if len(classes[color]) > 1:
                cell = classes[color]
                break
        if cell is None:
            enc = encode(col)
            if best[0] is None or enc < best[0]:
                best[0] = enc
            return
        for v in cell:
            split = {c: (col[c], 0 if c == v else 1) for c in elements}
            ranks = {x: r for r, x in enumerate(sorted(set(split.values())))}
            search(_refine(elements, facts, {c: ranks[split[c]] for c in elements}))

    search(colors)
    return (len(elements), best[0])


def canonical_key(s: Structure, limits: Limits | None = None):
    """A hashable, comparable key; equal exactly for isomorphic structures."""
    limits = _limits(limits)
    keys = []
    for piece in _fact_pieces(s):
        keys.append(("c", _connected_key(piece, limits)))
    keys += [("n", f[0]) for f in s.facts if not f[1]]
    keys += [("i",)] * len(s.isolated)
    return tuple(sorted(keys))


def is_isomorphic(a: Structure, b: Structure, limits: Limits | None = None) -> bool:
    return canonical_key(a, limits) == canonical_key(b, limits)


# ---------------------------------------------------------------------------
# structure algebra


def _check_domain(size: int, limits: Limits, what: str):
    if size > limits.max_domain_size:
        raise ResourceLimitExceeded(f"{what} would have {size} elements (limit {limits.max_domain_size})")


def structure_combine(
    coeffs: Sequence[int], parts: Sequence[Structure], limits: Limits | None = None, prefix: str = "e"
) -> Structure:
    """Disjoint union ``sum coeffs[i] * parts[i]`` with fresh constants."""
    if len(coeffs) != len(parts):
        raise ValueError("coefficient and part counts differ")
    if any(c < 0 for c in coeffs):
        raise ValueError("coefficients must be nonnegative")
    limits = _limits(limits)
    if not parts:
        raise ValueError("structure_combine needs at least one part (for the schema)")
    schema = parts[0].schema
    for p in parts[1:]:
        schema = schema.merge(p.schema)
    _check_domain(sum(c * len(p.domain) for c, p in zip(coeffs, parts)), limits, "disjoint sum")
    facts = set()
    domain = set()
    isolated = False
    n = 0
    for coeff, part in zip(coeffs, parts):
        elems = sorted(part.domain, key=repr)
        for _ in range(coeff):
            rename = {c: f"{prefix}{n + i}" for i, c in enumerate(elems)}
            n += len(elems)
            domain.update(rename.values())
            facts.update((rel, tuple(rename[x] for x in args)) for rel, args in part.facts)
            isolated = isolated or part.isolated_ok
    return Structure(schema, frozenset(facts), frozenset(domain), isolated_ok=isolated)


def structure_product(a: Structure, b: Structure, limits: Limits | None = None) -> Structure:
    """Categorical product; elements are named ``<a;b>``."""
    limits = _limits(limits)
    schema = a.schema.merge(b.schema)
    _check_domain(len(a.domain) * len(b.domain), limits, "product")
    by_rel: dict = defaultdict(list)
    for rel, args in b.facts:
        by_rel[rel].append(args)
    pair = {}

    def name(x, y):
        key = (x, y)
        if key not in pair:
            pair[key] = f"<{x};{y}>"
        return pair[key]

    facts = set()
    for rel, args in a.facts:
        for other in by_rel.get(rel, ()):
            facts.add((rel, tuple(name(x, y) for x, y in zip(args, other))))
    domain = {name(x, y) for x in a.domain for y in b.domain}
    isolated = bool(domain - {c for _, args in facts for c in args})
    return Structure(schema, frozenset(facts), frozenset(domain), isolated_ok=isolated)


def loop_singleton(schema: Schema, element: str = "o") -> Structure:
    """The one-element structure with every relation's loop (the zeroth power)."""
    return Structure(schema, frozenset((rel, (element,) * arity) for rel, arity in schema.relations), frozenset([element]), isolated_ok=True)


def relabel(s: Structure, prefix: str = "v") -> Structure:
    elems = sorted(s.domain, key=repr)
    rename = {c: f"{prefix}{i}" for i, c in enumerate(elems)}
    facts = frozenset((rel, tuple(rename[x] for x in args)) for rel, args in s.facts)
    return Structure(s.schema, facts, frozenset(rename.values()), s.isolated_ok)


def structure_power(a: Structure, t: int, limits: Limits | None = None) -> Structure:
    if t < 0:
        raise ValueError("power must be nonnegative")
    limits = _limits(limits)
    if t == 0:
        return loop_singleton(a.schema)
    _check_domain(len(a.domain) ** t, limits, "power")
    result = a
    for _ in range(t - 1):
        result = relabel(structure_product(result, a, limits))
    return result


# ---------------------------------------------------------------------------
# evaluation


def eval_boolean_cq(q: ConjunctiveQuery, d: Structure, limits: Limits | None = None) -> int:
    return hom_count(frozen_body(q), d, limits)


def eval_ucq(u: UnionQuery | ConjunctiveQuery, d: Structure, limits: Limits | None = None) -> int:
    if isinstance(u, ConjunctiveQuery):
        return eval_boolean_cq(u, d, limits)
    return sum(eval_boolean_cq(q, d, limits) for q in u.disjuncts)


def eval_cq(q: ConjunctiveQuery, d: Structure, limits: Limits | None = None) -> Counter:
    """Bag answer of a (possibly non-boolean) query: tuple -> multiplicity."""
    if q.is_boolean:
        return Counter({(): eval_boolean_cq(q, d, limits)})
    answers: Counter = Counter()
    for h in iter_homs(_pattern_body(q), d, limits):
        answers[tuple(h[x] for x in q.free_vars)] += 1
    return answers


__all__ = [
    "Atom",
    "ConjunctiveQuery",
    "DEFAULT_LIMITS",
    "Limits",
    "PathQuery",
    "QueryParseError",
    "ResourceLimitExceeded",
    "Schema",
    "Structure",
    "UnionQuery",
    "canonical_key",
    "connected_components",
    "eval_boolean_cq",
    "eval_cq",
    "eval_ucq",
    "format_schema",
    "format_structure",
    "frozen_body",
    "hom_count",
    "hom_exists",
    "is_isomorphic",
    "iter_homs",
    "loop_singleton",
    "parse_cq",
    "parse_path_query",
    "parse_query_file",
    "parse_schema",
    "parse_structure",
    "parse_ucq",
    "relabel",
    "structure_combine",
    "structure_power",
    "structure_product",
]
