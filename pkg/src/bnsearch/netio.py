"""Bayesian network files, forward sampling and random networks.

Network files are made of order-independent blocks::

    node Smoker
    states no yes
    parents
    cpt
    0.7 0.3
    end

``parents`` may be empty. The ``cpt`` section has one row per parent
configuration, mixed radix with the last parent varying fastest.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dag import Dag, topological_order
from .errors import CycleError, DuplicateArcError, ParseError, ValidationError
from .scoring import Dataset, config_index

ROW_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BayesNet:
    structure: Dag
    states: tuple
    cpts: tuple

    def __post_init__(self):
        g = self.structure
        if len(self.states) != g.n or len(self.cpts) != g.n:
            raise ValidationError("states and CPTs must be given for every node")
        cpts = []
        for i in range(g.n):
            if len(self.states[i]) < 2:
                raise ValidationError(f"node {g.labels[i]!r} needs at least two states")
            if len(set(self.states[i])) != len(self.states[i]):
                raise ValidationError(f"node {g.labels[i]!r} has duplicate state names")
            cpt = np.asarray(self.cpts[i], dtype=float)
            rows = 1
            for p in g.parent_set(i):
                rows *= len(self.states[p])
            if cpt.shape != (rows, len(self.states[i])):
                raise ValidationError(
                    f"node {g.labels[i]!r}: CPT shape {cpt.shape}, expected {(rows, len(self.states[i]))}"
                )
            if (cpt < 0).any():
                raise ValidationError(f"node {g.labels[i]!r}: negative probability")
            bad = np.flatnonzero(np.abs(cpt.sum(axis=1) - 1.0) > ROW_TOL)
            if bad.size:
                raise ValidationError(f"node {g.labels[i]!r}: CPT row {int(bad[0])} does not sum to 1")
            cpt.setflags(write=False)
            cpts.append(cpt)
        object.__setattr__(self, "states", tuple(tuple(s) for s in self.states))
        object.__setattr__(self, "cpts", tuple(cpts))

    @property
    def arities(self) -> tuple:
        return tuple(len(s) for s in self.states)

    def __eq__(self, other):
        if not isinstance(other, BayesNet):
            return NotImplemented
        return (
            self.structure == other.structure
            and self.structure.labels == other.structure.labels
            and self.states == other.states
            and all(np.array_equal(a, b) for a, b in zip(self.cpts, other.cpts))
        )


def format_network(net: BayesNet) -> str:
    g = net.structure
    out = []
    for i in range(g.n):
        out.append(f"node {g.labels[i]}")
        out.append("states " + " ".join(net.states[i]))
        out.append(" ".join(["parents"] + [g.labels[p] for p in g.parent_set(i)]))
        out.append("cpt")
        for row in net.cpts[i]:
            out.append(" ".join(format(float(x), ".17g") for x in row))
        out.append("end")
        out.append("")
    return "\n".join(out)


def parse_network(text: str, path=None) -> BayesNet:
    blocks = []
    cur = None
    in_cpt = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, _, rest = line.partition(" ")
        rest = rest.split()
        if cur is None:
            if word != "node" or len(rest) != 1:
                raise ParseError(f"expected 'node <name>', got {line!r}", lineno, path)
            cur = {"name": rest[0], "line": lineno, "states": None, "parents": None, "rows": []}
            in_cpt = False
            continue
        if word == "end" and not rest:
            if cur["states"] is None or cur["parents"] is None or not in_cpt:
                raise ParseError(f"block {cur['name']!r} needs states, parents and cpt", lineno, path)
            blocks.append(cur)
            cur = None
            continue
        if in_cpt:
            try:
                cur["rows"].append(([float(x) for x in line.split()], lineno))
            except ValueError:
                raise ParseError(f"bad probability row {line!r}", lineno, path) from None
            continue
        if word == "states":
            cur["states"] = rest
        elif word == "parents":
            cur["parents"] = (rest, lineno)
        elif word == "cpt" and not rest:
            in_cpt = True
        else:
            raise ParseError(f"unexpected line {line!r}", lineno, path)
    if cur is not None:
        raise ParseError(f"block {cur['name']!r} not closed with 'end'", None, path)

    names = [b["name"] for b in blocks]
    if len(set(names)) != len(names):
        raise ValidationError("duplicate node name")
    index = {s: i for i, s in enumerate(names)}
    parents = []
    for b in blocks:
        plist, lineno = b["parents"]
        for p in plist:
            if p not in index:
                raise ParseError(f"unknown parent {p!r}", lineno, path)
        if len(set(plist)) != len(plist) or b["name"] in plist:
            raise ParseError("repeated or self parent", lineno, path)
        parents.append([index[p] for p in plist])
    pmasks = [sum(1 << p for p in ps) for ps in parents]
    try:
        g = Dag(len(names), pmasks, names)
    except (CycleError, DuplicateArcError) as exc:
        raise ValidationError("parent declarations contain a directed cycle") from exc

    cpts = []
    for i, b in enumerate(blocks):
        # CPT rows follow the declared parent order; reorder to ascending node index
        declared = parents[i]
        ar = [len(blocks[p]["states"]) for p in declared]
        expected = int(np.prod(ar)) if ar else 1
        rows = b["rows"]
        if len(rows) != expected:
            raise ValidationError(f"node {b['name']!r}: {len(rows)} CPT rows, expected {expected}")
        for vals, lineno in rows:
            if len(vals) != len(b["states"]):
                raise ParseError(f"row has {len(vals)} entries, expected {len(b['states'])}", lineno, path)
            if any(v < 0 for v in vals) or abs(sum(vals) - 1.0) > ROW_TOL:
                raise ValidationError(f"{path or '<network>'}:{lineno}: CPT row must be non-negative and sum to 1")
        table = np.array([v for v, _ in rows], dtype=float).reshape(*ar, len(b["states"])) if ar else np.array(
            [rows[0][0]], dtype=float
        )
        order = sorted(range(len(declared)), key=lambda k: declared[k])
        if ar:
            table = np.transpose(table, order + [len(declared)]).reshape(expected, len(b["states"]))
        cpts.append(table)
    return BayesNet(g, tuple(tuple(b["states"]) for b in blocks), tuple(cpts))


def load_network(path) -> BayesNet:
    path = Path(path)
    return parse_network(path.read_text(encoding="utf-8"), str(path))


def save_network(net: BayesNet, path) -> None:
    Path(path).write_text(format_network(net), encoding="utf-8")


def forward_sample(net: BayesNet, n: int, rng) -> Dataset:
    """Draw ``n`` i.i.d. records in topological order.

    ``rng`` is a :class:`numpy.random.Generator` or an integer seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    g = net.structure
    ar = net.arities
    data = np.zeros((n, g.n), dtype=np.int64)
    for i in topological_order(g):
        cfg = config_index(data, g.parent_set(i), ar)
        cum = np.cumsum(net.cpts[i], axis=1)
        cum[:, -1] = 1.0
        u = rng.random(n)
        data[:, i] = (u[:, None] >= cum[cfg]).sum(axis=1)
    return Dataset(g.labels, ar, data, net.states)


def random_network(
    n: int,
    rng: random.Random,
    avg_parents: float = 1.3,
    max_parents: int = 3,
    arity_range=(2, 3),
    concentration: float = 0.5,
) -> BayesNet:
    """Random sparse network with Dirichlet CPT rows.

    Nodes are kept in index order as a topological order; node ``j`` picks each
    earlier node as a parent with probability ``avg_parents / max(1, j)``,
    capped at ``max_parents``. ``concentration`` is the symmetric Dirichlet
    parameter of every CPT row.
    """
    parents = [0] * n
    for j in range(1, n):
        p = min(1.0, avg_parents / j) if j else 0.0
        cands = [i for i in range(j) if rng.random() < p]
        if len(cands) > max_parents:
            cands = rng.sample(cands, max_parents)
        for c in cands:
            parents[j] |= 1 << c
    g = Dag(n, parents, [f"X{i}" for i in range(n)])
    states = tuple(tuple(f"s{k}" for k in range(rng.randint(*arity_range))) for _ in range(n))
    nprng = np.random.default_rng(rng.getrandbits(63))
    cpts = []
    for i in range(n):
        q = 1
        for p in g.parent_set(i):
            q *= len(states[p])
        rows = nprng.dirichlet([concentration] * len(states[i]), size=q)
        rows = np.clip(rows, 1e-12, None)
        cpts.append(rows / rows.sum(axis=1, keepdims=True))
    return BayesNet(g, states, tuple(cpts))
