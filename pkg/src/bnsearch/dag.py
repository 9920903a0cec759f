"""DAG and essential-graph representations.

A :class:`Dag` stores one parent bitmask per node, so that every structural
query used by the search (reachability, covered arcs, adjacency) is a handful
of integer operations. Nodes are identified by position; labels are carried
along for file output only and take no part in equality.
"""

from __future__ import annotations

import functools
import itertools
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

from .errors import (
    CycleError,
    DimensionMismatch,
    DuplicateArcError,
    MissingArcError,
    ParseError,
    SizeGuardError,
    ValidationError,
)

MAX_MODEL_NODES = 12


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _mask(nodes: Iterable[int]) -> int:
    m = 0
    for i in nodes:
        m |= 1 << i
    return m


class Arc(NamedTuple):
    tail: int
    head: int

    def reversed(self) -> "Arc":
        return Arc(self.head, self.tail)


class Dag:
    """Node-labelled acyclic digraph with per-node parent bitmasks.

    Instances are treated as immutable; every mutator in this module returns
    a new object.
    """

    __slots__ = ("n", "parents", "labels", "_children", "_hash")

    def __init__(self, n: int, parents=None, labels=None, check: bool = True):
        if parents is None:
            parents = (0,) * n
        parents = tuple(int(p) for p in parents)
        if len(parents) != n:
            raise DimensionMismatch(f"expected {n} parent masks, got {len(parents)}")
        if labels is None:
            labels = tuple(f"v{i}" for i in range(n))
        labels = tuple(str(s) for s in labels)
        if len(labels) != n:
            raise DimensionMismatch(f"expected {n} labels, got {len(labels)}")
        self.n = n
        self.parents = parents
        self.labels = labels
        self._children = None
        self._hash = None
        if check:
            full = (1 << n) - 1
            for i, p in enumerate(parents):
                if p & ~full or p < 0:
                    raise IndexError(f"parent mask of node {i} refers to nodes outside 0..{n - 1}")
                if p >> i & 1:
                    raise ValidationError(f"self-loop on node {i}")
                for j in _bits(p):
                    if parents[j] >> i & 1:
                        raise DuplicateArcError(f"both {j} -> {i} and {i} -> {j} present")
            if topological_order(self) is None:
                raise CycleError(None, None, "parent sets contain a directed cycle")

    @classmethod
    def empty(cls, n: int, labels=None) -> "Dag":
        return cls(n, None, labels, check=False)

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable, labels=None) -> "Dag":
        parents = [0] * n
        for t, h in arcs:
            if not (0 <= t < n and 0 <= h < n):
                raise IndexError(f"arc {t} -> {h} outside 0..{n - 1}")
            if parents[h] >> t & 1:
                raise DuplicateArcError(f"arc {t} -> {h} listed twice")
            parents[h] |= 1 << t
        return cls(n, parents, labels)

    @classmethod
    def from_parent_sets(cls, parent_sets, labels=None) -> "Dag":
        return cls(len(parent_sets), [_mask(ps) for ps in parent_sets], labels)

    # structural queries

    @property
    def children(self) -> tuple:
        if self._children is None:
            ch = [0] * self.n
            for i, p in enumerate(self.parents):
                for j in _bits(p):
                    ch[j] |= 1 << i
            self._children = tuple(ch)
        return self._children

    def parent_set(self, i: int) -> tuple:
        return tuple(_bits(self.parents[i]))

    def child_set(self, i: int) -> tuple:
        return tuple(_bits(self.children[i]))

    def has_arc(self, tail: int, head: int) -> bool:
        return bool(self.parents[head] >> tail & 1)

    def adjacent(self, u: int, v: int) -> bool:
        return bool(self.parents[v] >> u & 1 or self.parents[u] >> v & 1)

    def arcs(self) -> list:
        out = [Arc(t, h) for h in range(self.n) for t in _bits(self.parents[h])]
        out.sort()
        return out

    @property
    def num_arcs(self) -> int:
        return sum(p.bit_count() for p in self.parents)

    def descendants(self, i: int) -> int:
        """Bitmask of nodes reachable from ``i`` (``i`` included)."""
        return _reach(self.children, 1 << i)

    def ancestors(self, i: int) -> int:
        return _reach(self.parents, 1 << i)

    def with_labels(self, labels) -> "Dag":
        return Dag(self.n, self.parents, labels, check=False)

    def __eq__(self, other):
        if not isinstance(other, Dag):
            return NotImplemented
        return self.n == other.n and self.parents == other.parents

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, self.parents))
        return self._hash

    def __repr__(self):
        arcs = ", ".join(f"{a.tail}->{a.head}" for a in self.arcs())
        return f"Dag(n={self.n}, [{arcs}])"

    def __getstate__(self):
        return (self.n, self.parents, self.labels)

    def __setstate__(self, state):
        self.n, self.parents, self.labels = state
        self._children = None
        self._hash = None


def _reach(edges, start: int) -> int:
    seen = 0
    frontier = start
    while frontier:
        seen |= frontier
        nxt = 0
        m = frontier
        while m:
            low = m & -m
            nxt |= edges[low.bit_length() - 1]
            m ^= low
        frontier = nxt & ~seen
    return seen


def topological_order(g: Dag):
    """Kahn ordering; ``None`` when the parent sets are cyclic."""
    remaining = list(g.parents)
    placed = 0
    order = []
    while len(order) < g.n:
        ready = [i for i in range(g.n) if not placed >> i & 1 and not remaining[i] & ~placed]
        if not ready:
            return None
        for i in ready:
            placed |= 1 << i
            order.append(i)
    return order


def is_acyclic(g: Dag) -> bool:
    return topological_order(g) is not None


def _check_nodes(g: Dag, *nodes):
    for v in nodes:
        if not 0 <= v < g.n:
            raise IndexError(f"node {v} outside 0..{g.n - 1}")


def _replace(g: Dag, parents) -> Dag:
    return Dag(g.n, parents, g.labels, check=False)


def add_arc(g: Dag, a) -> Dag:
    tail, head = a
    _check_nodes(g, tail, head)
    if tail == head:
        raise ValueError("self-loops are not allowed")
    if g.adjacent(tail, head):
        raise DuplicateArcError(f"{tail} and {head} are already adjacent")
    if g.descendants(head) >> tail & 1:
        raise CycleError(tail, head)
    parents = list(g.parents)
    parents[head] |= 1 << tail
    return _replace(g, parents)


def remove_arc(g: Dag, a) -> Dag:
    tail, head = a
    _check_nodes(g, tail, head)
    if not g.has_arc(tail, head):
        raise MissingArcError(f"arc {tail} -> {head} not present")
    parents = list(g.parents)
    parents[head] &= ~(1 << tail)
    return _replace(g, parents)


def reversal_creates_cycle(g: Dag, tail: int, head: int) -> bool:
    """True iff a directed path tail ~> head of length >= 2 exists."""
    others = g.children[tail] & ~(1 << head)
    return bool(_reach(g.children, others) >> head & 1) if others else False


def reverse_arc(g: Dag, a) -> Dag:
    tail, head = a
    _check_nodes(g, tail, head)
    if not g.has_arc(tail, head):
        raise MissingArcError(f"arc {tail} -> {head} not present")
    if reversal_creates_cycle(g, tail, head):
        raise CycleError(head, tail)
    parents = list(g.parents)
    parents[head] &= ~(1 << tail)
    parents[tail] |= 1 << head
    return _replace(g, parents)


def is_covered(g: Dag, a) -> bool:
    """An arc a -> b is covered when pa(b) equals pa(a) plus a."""
    tail, head = a
    _check_nodes(g, tail, head)
    if not g.has_arc(tail, head):
        raise MissingArcError(f"arc {tail} -> {head} not present")
    return g.parents[head] == g.parents[tail] | (1 << tail)


def covered_arcs(g: Dag) -> list:
    par = g.parents
    return [
        Arc(t, h)
        for h in range(g.n)
        for t in _bits(par[h])
        if par[h] == par[t] | (1 << t)
    ]


def skeleton(g: Dag) -> frozenset:
    return frozenset((min(a), max(a)) for a in g.arcs())


def immoralities(g: Dag) -> frozenset:
    """Triples (a, c, b) with a < b, a -> c <- b and a, b non-adjacent."""
    out = set()
    par = g.parents
    for c in range(g.n):
        ps = list(_bits(par[c]))
        for a, b in itertools.combinations(ps, 2):
            if not g.adjacent(a, b):
                out.add((a, c, b))
    return frozenset(out)


def equivalent(g: Dag, h: Dag) -> bool:
    if g.n != h.n:
        raise DimensionMismatch(f"{g.n} vs {h.n} nodes")
    return skeleton(g) == skeleton(h) and immoralities(g) == immoralities(h)


# essential graphs

DIRECTED_FWD = ">"  # u -> v for the stored pair u < v
DIRECTED_BWD = "<"  # v -> u
UNDIRECTED = "-"


@dataclass(frozen=True)
class Cpdag:
    """Essential graph keyed by unordered pair.

    ``edges`` is a sorted tuple of ``(u, v, mark)`` with ``u < v``; ``mark`` is
    ``">"`` for u -> v, ``"<"`` for v -> u and ``"-"`` for an undirected edge.
    """

    n: int
    edges: tuple

    def mark(self, u: int, v: int):
        a, b = (u, v) if u < v else (v, u)
        m = self._index().get((a, b))
        if m is None or m == UNDIRECTED or a == u:
            return m
        return DIRECTED_BWD if m == DIRECTED_FWD else DIRECTED_FWD

    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {(u, v): m for u, v, m in self.edges}
            object.__setattr__(self, "_idx", idx)
        return idx

    def directed(self) -> list:
        out = []
        for u, v, m in self.edges:
            if m == DIRECTED_FWD:
                out.append(Arc(u, v))
            elif m == DIRECTED_BWD:
                out.append(Arc(v, u))
        return sorted(out)

    def undirected(self) -> list:
        return [(u, v) for u, v, m in self.edges if m == UNDIRECTED]

    def key(self) -> str:
        """Canonical serialization; pairs in lexicographic order."""
        body = ";".join(f"{u},{v}{m}" for u, v, m in self.edges)
        return f"{self.n}|{body}"

    def __eq__(self, other):
        if not isinstance(other, Cpdag):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))


@functools.lru_cache(maxsize=1 << 17)
def dag_to_cpdag(g: Dag) -> Cpdag:
    """Essential graph of ``g``: orient immoralities, then close under Meek's rules 1-3."""
    n = g.n
    par = g.parents
    ch = g.children
    adj = [par[i] | ch[i] for i in range(n)]
    # d[u]: compelled children of u, und[u]: undirected neighbours of u
    d = [0] * n
    for c in range(n):
        ps = list(_bits(par[c]))
        for a, b in itertools.combinations(ps, 2):
            if not adj[a] >> b & 1:
                d[a] |= 1 << c
                d[b] |= 1 << c
    und = [adj[i] & ~d[i] & ~_col(d, i) for i in range(n)]

    dpar = [0] * n

    def refresh_dpar():
        for v in range(n):
            dpar[v] = 0
        for u in range(n):
            for v in _bits(d[u]):
                dpar[v] |= 1 << u

    refresh_dpar()
    changed = True
    while changed:
        changed = False
        for b in range(n):
            for c in list(_bits(und[b])):
                if not und[b] >> c & 1:
                    continue
                orient = False
                # R1: a -> b - c with a, c non-adjacent
                if dpar[b] & ~adj[c] & ~(1 << c):
                    orient = True
                # R2: b -> a -> c
                elif d[b] & dpar[c]:
                    orient = True
                else:
                    # R3: b - x, b - y, x -> c, y -> c, x and y non-adjacent
                    cand = und[b] & dpar[c]
                    if cand.bit_count() >= 2:
                        xs = list(_bits(cand))
                        for x, y in itertools.combinations(xs, 2):
                            if not adj[x] >> y & 1:
                                orient = True
                                break
                if orient:
                    und[b] &= ~(1 << c)
                    und[c] &= ~(1 << b)
                    d[b] |= 1 << c
                    dpar[c] |= 1 << b
                    changed = True

    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if d[u] >> v & 1:
                edges.append((u, v, DIRECTED_FWD))
            elif d[v] >> u & 1:
                edges.append((u, v, DIRECTED_BWD))
            elif und[u] >> v & 1:
                edges.append((u, v, UNDIRECTED))
    return Cpdag(n, tuple(edges))


def _col(d, i):
    m = 0
    for u, row in enumerate(d):
        if row >> i & 1:
            m |= 1 << u
    return m


def structural_difference(p: Cpdag, q: Cpdag) -> int:
    """Number of unordered pairs whose mark differs (absent counts as a mark)."""
    if p.n != q.n:
        raise DimensionMismatch(f"{p.n} vs {q.n} nodes")
    a = p._index()
    b = q._index()
    return sum(1 for pair in a.keys() | b.keys() if a.get(pair) != b.get(pair))


# d-separation and independence models


def d_separated(g: Dag, u: int, v: int, s=()) -> bool:
    """Moralised ancestral graph test for ``u _||_ v | s``."""
    s = frozenset(s)
    _check_nodes(g, u, v, *s)
    if u == v or u in s or v in s:
        raise ValueError("u and v must be distinct and outside the conditioning set")
    smask = _mask(s)
    anc = _reach(g.parents, (1 << u) | (1 << v) | smask)
    nbr = [0] * g.n
    for x in _bits(anc):
        px = g.parents[x] & anc
        nbr[x] |= px
        for p in _bits(px):
            nbr[p] |= (1 << x) | (px & ~(1 << p))
    blocked = [m & ~smask for m in nbr]
    return not _reach(blocked, 1 << u) >> v & 1


class ElementaryTriplet(NamedTuple):
    u: int
    v: int
    s: frozenset

    @classmethod
    def make(cls, u: int, v: int, s=()) -> "ElementaryTriplet":
        s = frozenset(s)
        if u == v or u in s or v in s:
            raise ValueError("invalid triplet")
        if u > v:
            u, v = v, u
        return cls(u, v, s)


@dataclass(frozen=True)
class IndependenceModel:
    n: int
    triplets: frozenset

    def __le__(self, other: "IndependenceModel") -> bool:
        if self.n != other.n:
            raise DimensionMismatch(f"{self.n} vs {other.n} nodes")
        return self.triplets <= other.triplets

    def __lt__(self, other: "IndependenceModel") -> bool:
        return self <= other and self.triplets != other.triplets

    def __len__(self):
        return len(self.triplets)


@functools.lru_cache(maxsize=4096)
def independence_model(g: Dag) -> IndependenceModel:
    """All elementary triplets (u, v | S) that hold in ``g`` by d-separation."""
    if g.n > MAX_MODEL_NODES:
        raise SizeGuardError(f"independence model enumeration limited to {MAX_MODEL_NODES} nodes")
    out = set()
    for u, v in itertools.combinations(range(g.n), 2):
        rest = [x for x in range(g.n) if x != u and x != v]
        for k in range(len(rest) + 1):
            for s in itertools.combinations(rest, k):
                if d_separated(g, u, v, s):
                    out.add(ElementaryTriplet(u, v, frozenset(s)))
    return IndependenceModel(g.n, frozenset(out))


def model_included(g: Dag, h: Dag) -> bool:
    if g.n != h.n:
        raise DimensionMismatch(f"{g.n} vs {h.n} nodes")
    return independence_model(g) <= independence_model(h)


# enumeration and random generation


def enumerate_dags(n: int, prefix=None) -> Iterator[Dag]:
    """Every labelled DAG on ``n`` nodes, each exactly once.

    Unordered pairs are decided in turn as absent, forward or backward;
    branches that would close a cycle are pruned. ``prefix`` fixes the choices
    (0, 1, 2) for the leading pairs, which lets callers split the work.
    """
    pairs = list(itertools.combinations(range(n), 2))
    parents = [0] * n
    children = [0] * n
    prefix = tuple(prefix or ())

    def rec(k):
        if k == len(pairs):
            yield Dag(n, parents, check=False)
            return
        a, b = pairs[k]
        choices = (prefix[k],) if k < len(prefix) else (0, 1, 2)
        for c in choices:
            if c == 0:
                yield from rec(k + 1)
                continue
            t, h = (a, b) if c == 1 else (b, a)
            if _reach(children, 1 << h) >> t & 1:
                continue
            parents[h] |= 1 << t
            children[t] |= 1 << h
            yield from rec(k + 1)
            parents[h] &= ~(1 << t)
            children[t] &= ~(1 << h)

    yield from rec(0)


def random_dag(n: int, rng: random.Random, edge_prob: float = 0.3, max_parents=None, labels=None) -> Dag:
    """Random DAG: random node order, each forward pair kept with ``edge_prob``."""
    order = list(range(n))
    rng.shuffle(order)
    parents = [0] * n
    for j in range(1, n):
        head = order[j]
        cands = [order[i] for i in range(j) if rng.random() < edge_prob]
        if max_parents is not None and len(cands) > max_parents:
            cands = rng.sample(cands, max_parents)
        parents[head] = _mask(cands)
    return Dag(n, parents, labels, check=False)


# .dag text format


def format_dag(g: Dag) -> str:
    for lab in g.labels:
        if not lab or "," in lab or "->" in lab or lab != lab.strip():
            raise ValidationError(f"label {lab!r} cannot be written in .dag format")
    lines = ["nodes: " + ",".join(g.labels)]
    lines += [f"{g.labels[a.tail]} -> {g.labels[a.head]}" for a in g.arcs()]
    return "\n".join(lines) + "\n"


def parse_dag(text: str, path=None) -> Dag:
    labels = None
    arcs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if labels is None:
            if not line.startswith("nodes:"):
                raise ParseError("expected 'nodes: a,b,...' header", lineno, path)
            labels = [s.strip() for s in line[len("nodes:"):].split(",")]
            if labels == [""]:
                labels = []
            if any(not s for s in labels):
                raise ParseError("empty node label", lineno, path)
            if len(set(labels)) != len(labels):
                raise ParseError("duplicate node label", lineno, path)
            index = {s: i for i, s in enumerate(labels)}
            continue
        parts = line.split("->")
        if len(parts) != 2:
            raise ParseError(f"expected 'tail -> head', got {line!r}", lineno, path)
        t, h = (p.strip() for p in parts)
        if t not in index or h not in index:
            raise ParseError(f"unknown node in {line!r}", lineno, path)
        if t == h:
            raise ParseError("self-loop", lineno, path)
        arcs.append((index[t], index[h], lineno))
    if labels is None:
        raise ParseError("missing 'nodes:' header", None, path)
    parents = [0] * len(labels)
    for t, h, lineno in arcs:
        if parents[h] >> t & 1 or parents[t] >> h & 1:
            raise ParseError(f"duplicate arc between {labels[t]} and {labels[h]}", lineno, path)
        parents[h] |= 1 << t
    try:
        return Dag(len(labels), parents, labels)
    except CycleError as exc:
        raise ValidationError(f"{path or '<dag>'}: arcs contain a directed cycle") from exc


def read_dag(path) -> Dag:
    path = Path(path)
    return parse_dag(path.read_text(encoding="utf-8"), str(path))


def write_dag(g: Dag, path) -> None:
    Path(path).write_text(format_dag(g), encoding="utf-8")
