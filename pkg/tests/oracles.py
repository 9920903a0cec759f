"""Independent reference computations used by the tests.

Nothing here reuses the package's graph algorithms: DAGs are enumerated
from raw adjacency matrices, d-separation goes through networkx, and the
BDeu score is recomputed one record at a time as a Polya urn.
"""

import itertools
import math
from functools import lru_cache

import networkx as nx
import numpy as np


def brute_force_arc_sets(n):
    """Every acyclic arc set on n labelled nodes, from all 2^(n(n-1)) digraphs."""
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    out = []
    for bits in range(1 << len(pairs)):
        arcs = [pairs[k] for k in range(len(pairs)) if bits >> k & 1]
        g = nx.DiGraph()
        g.add_nodes_from(range(n))
        g.add_edges_from(arcs)
        if nx.is_directed_acyclic_graph(g):
            out.append(frozenset(arcs))
    return out


@lru_cache(maxsize=None)
def robinson(n):
    """Number of labelled DAGs on n nodes (Robinson's recurrence)."""
    if n == 0:
        return 1
    return sum((-1) ** (k + 1) * math.comb(n, k) * 2 ** (k * (n - k)) * robinson(n - k) for k in range(1, n + 1))


def nx_graph(n, arcs):
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from(arcs)
    return g


def nx_dsep(g, u, v, s):
    return nx.is_d_separator(g, {u}, {v}, set(s))


def nx_model(n, arcs):
    """Elementary d-separation statements as (u, v, S) with u < v."""
    g = nx_graph(n, arcs)
    out = set()
    for u, v in itertools.combinations(range(n), 2):
        rest = [x for x in range(n) if x not in (u, v)]
        for k in range(len(rest) + 1):
            for s in itertools.combinations(rest, k):
                if nx_dsep(g, u, v, s):
                    out.add((u, v, frozenset(s)))
    return frozenset(out)


def polya_log_likelihood(data, child, parents, arities, ess=1.0):
    """BDeu family score as a product of sequential predictive probabilities."""
    r = arities[child]
    q = int(np.prod([arities[p] for p in parents])) if parents else 1
    a_jk = ess / (q * r)
    counts = {}
    total = 0.0
    for row in np.asarray(data):
        j = tuple(int(row[p]) for p in parents)
        k = int(row[child])
        cj = counts.setdefault(j, [0] * r)
        total += math.log((a_jk + cj[k]) / (ess / q + sum(cj)))
        cj[k] += 1
    return total
