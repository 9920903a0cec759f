"""Walks inside a Markov equivalence class, class enumeration and census."""

from __future__ import annotations

import functools
import random
from collections import Counter, deque
from dataclasses import dataclass

from .dag import (
    Cpdag,
    Dag,
    _bits,
    covered_arcs,
    dag_to_cpdag,
    enumerate_dags,
)
from .errors import ConfigError, SizeGuardError

DEFAULT_TAU = 10
MAX_CLASS_NODES = 8
MAX_CENSUS_NODES = 6


@dataclass(frozen=True)
class RcarConfig:
    tau: int = DEFAULT_TAU
    seed: int | None = None

    def __post_init__(self):
        if self.tau < 0:
            raise ConfigError(f"tau must be >= 0, got {self.tau}")


def _stream(rng, seed):
    if rng is not None:
        return rng
    return random.Random(seed)


def _reverse_covered(g: Dag, tail: int, head: int) -> Dag:
    # covered reversal cannot close a cycle, so skip the path search
    parents = list(g.parents)
    parents[head] &= ~(1 << tail)
    parents[tail] |= 1 << head
    return Dag(g.n, parents, g.labels, check=False)


def rcar(g: Dag, cfg: RcarConfig | int = DEFAULT_TAU, rng: random.Random | None = None) -> Dag:
    """Repeated covered arc reversal.

    Draws a repetition count uniformly from ``0..tau`` and reverses that many
    uniformly chosen covered arcs, stopping early if none is left.
    """
    if isinstance(cfg, int):
        cfg = RcarConfig(cfg)
    rng = _stream(rng, cfg.seed)
    reps = rng.randint(0, cfg.tau)
    if not reps:
        return g
    par = list(g.parents)
    n = g.n
    for _ in range(reps):
        cov = []
        for h in range(n):
            ph = par[h]
            m = ph
            while m:
                low = m & -m
                t = low.bit_length() - 1
                if par[t] == ph ^ low:
                    cov.append((t, h))
                m ^= low
        if not cov:
            break
        t, h = cov[rng.randrange(len(cov))]
        par[h] &= ~(1 << t)
        par[t] |= 1 << h
    return Dag(n, par, g.labels, check=False)


@dataclass(frozen=True)
class VertexPriorities:
    r: tuple

    def __post_init__(self):
        if len(set(self.r)) != len(self.r):
            raise ValueError("vertex priorities must be distinct")

    @classmethod
    def draw(cls, n: int, rng: random.Random) -> "VertexPriorities":
        while True:
            r = tuple(rng.random() for _ in range(n))
            if len(set(r)) == n:
                return cls(r)


def reds(g: Dag, priorities: VertexPriorities | None = None, rng: random.Random | None = None) -> list:
    """Random equivalent DAG selection.

    Repeatedly reverses a random covered arc that points from lower to higher
    priority, recording each intermediate DAG. The walk ends when no such arc
    remains; the returned list is empty if the input already has none.
    """
    rng = _stream(rng, None)
    if priorities is None:
        priorities = VertexPriorities.draw(g.n, rng)
    r = priorities.r
    if len(r) != g.n:
        raise ValueError("one priority per vertex required")
    out = []
    while True:
        cand = [a for a in covered_arcs(g) if r[a.tail] < r[a.head]]
        if not cand:
            return out
        t, h = cand[rng.randrange(len(cand))]
        g = _reverse_covered(g, t, h)
        out.append(g)


def enumerate_class(g: Dag) -> frozenset:
    """All DAGs reachable from ``g`` by covered arc reversals (its equivalence class)."""
    if g.n > MAX_CLASS_NODES:
        raise SizeGuardError(f"class enumeration limited to {MAX_CLASS_NODES} nodes")
    seen = {g}
    queue = deque([g])
    while queue:
        cur = queue.popleft()
        for t, h in covered_arcs(cur):
            nxt = _reverse_covered(cur, t, h)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return frozenset(seen)


def class_size_lower_bound(p: Cpdag) -> int:
    """Product over undirected components of (reversible edges + 1)."""
    parent = list(range(p.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    und = p.undirected()
    for u, v in und:
        parent[find(u)] = find(v)
    per_comp = Counter(find(u) for u, _ in und)
    bound = 1
    for q in per_comp.values():
        bound *= q + 1
    return bound


@functools.lru_cache(maxsize=None)
def class_sizes(n: int) -> dict:
    """Map each essential graph on ``n`` nodes to the number of DAGs it represents."""
    if n > MAX_CENSUS_NODES:
        raise SizeGuardError(f"census limited to {MAX_CENSUS_NODES} nodes")
    sizes = Counter()
    for g in enumerate_dags(n):
        sizes[dag_to_cpdag(g)] += 1
    return dict(sizes)


def census(n: int) -> tuple:
    """Return ``(dag_count, class_count, dag_count / class_count)``."""
    if n < 1:
        raise ValueError("census needs at least one node")
    sizes = class_sizes(n)
    dags = sum(sizes.values())
    classes = len(sizes)
    return dags, classes, dags / classes


def census_csv_row(n: int) -> str:
    dags, classes, ratio = census(n)
    return f"{n},{dags},{classes},{ratio!r}"


def undirected_components(p: Cpdag) -> list:
    """Vertex sets of the connected components spanned by undirected edges."""
    adj = [0] * p.n
    for u, v in p.undirected():
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    seen = 0
    comps = []
    for s in range(p.n):
        if seen >> s & 1 or not adj[s]:
            continue
        comp = 0
        frontier = 1 << s
        while frontier:
            comp |= frontier
            nxt = 0
            for x in _bits(frontier):
                nxt |= adj[x]
            frontier = nxt & ~comp
        seen |= comp
        comps.append(frozenset(_bits(comp)))
    return comps
