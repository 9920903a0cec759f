"""Neighbourhood operators over DAG space.

Six operators are supported. ``nr`` adds or removes one arc; ``ar``, ``cr``
and ``ncr`` additionally reverse any, only covered, or only non-covered arcs.
``rcarr`` and ``rcarnr`` first move to a random equivalent DAG with
:func:`~bnsearch.equivalence.rcar` and then build an ``ncr`` or ``nr``
neighbourhood around it.
"""

from __future__ import annotations

import functools
import random
from dataclasses import dataclass, field
from typing import NamedTuple

from .dag import Arc, Dag, add_arc, remove_arc, reversal_creates_cycle, reverse_arc
from .equivalence import DEFAULT_TAU, RcarConfig, rcar
from .errors import ConfigError, EmptyNeighbourhoodError

ADD = "add"
REMOVE = "remove"
REVERSE = "reverse"

KINDS = ("nr", "ar", "cr", "ncr", "rcarr", "rcarnr")
RCAR_KINDS = ("rcarr", "rcarnr")
# reversal policy of the move set built on the (possibly RCAR'd) base
_REVERSALS = {"nr": None, "ar": "all", "cr": "covered", "ncr": "noncovered", "rcarr": "noncovered", "rcarnr": None}


class Move(NamedTuple):
    kind: str
    arc: Arc

    def __str__(self):
        return f"{self.kind}({self.arc.tail}->{self.arc.head})"


@dataclass(frozen=True)
class NeighbourhoodKind:
    tag: str
    rcar: RcarConfig | None = field(default=None)

    def __post_init__(self):
        if self.tag not in KINDS:
            raise ConfigError(f"unknown neighbourhood {self.tag!r}; expected one of {', '.join(KINDS)}")
        if self.tag in RCAR_KINDS and self.rcar is None:
            object.__setattr__(self, "rcar", RcarConfig(DEFAULT_TAU))
        if self.tag not in RCAR_KINDS and self.rcar is not None:
            raise ConfigError(f"neighbourhood {self.tag!r} takes no RCAR configuration")

    @classmethod
    def parse(cls, name: str, tau: int | None = None) -> "NeighbourhoodKind":
        tag = name.strip().lower()
        if tag in RCAR_KINDS:
            return cls(tag, RcarConfig(DEFAULT_TAU if tau is None else tau))
        return cls(tag)

    @property
    def uses_rcar(self) -> bool:
        return self.tag in RCAR_KINDS

    @property
    def tau(self) -> int:
        return self.rcar.tau if self.rcar is not None else 0

    def __str__(self):
        return f"{self.tag}{self.tau}" if self.uses_rcar else self.tag


def _as_kind(kind) -> NeighbourhoodKind:
    if isinstance(kind, NeighbourhoodKind):
        return kind
    return NeighbourhoodKind.parse(kind)


def _is_covered_arc(par, t, h) -> bool:
    return par[h] == par[t] | (1 << t)


def _reversal_ok(g: Dag, policy, t: int, h: int) -> bool:
    if policy is None:
        return False
    covered = _is_covered_arc(g.parents, t, h)
    if policy == "covered":
        return covered
    if policy == "noncovered" and covered:
        return False
    return covered or not reversal_creates_cycle(g, t, h)


def moves_of(g: Dag, policy) -> list:
    """Deterministic move list: adds, then removes, then reversals, each in arc order."""
    n = g.n
    par = g.parents
    adds = []
    if n > 1:
        desc = [g.descendants(i) for i in range(n)]
        for t in range(n):
            for h in range(n):
                if t != h and not (par[h] >> t & 1 or par[t] >> h & 1) and not desc[h] >> t & 1:
                    adds.append(Move(ADD, Arc(t, h)))
    arcs = g.arcs()
    removes = [Move(REMOVE, a) for a in arcs]
    revs = [Move(REVERSE, a) for a in arcs if _reversal_ok(g, policy, a.tail, a.head)]
    return adds + removes + revs


def _base(g: Dag, kind: NeighbourhoodKind, rng) -> Dag:
    if kind.uses_rcar:
        return rcar(g, kind.rcar, rng)
    return g


def neighbourhood(g: Dag, kind, rng: random.Random | None = None) -> tuple:
    """Return ``(base, moves)``; for RCAR kinds ``base`` is a random equivalent of ``g``."""
    kind = _as_kind(kind)
    if kind.uses_rcar and rng is None:
        rng = random.Random(kind.rcar.seed)
    base = _base(g, kind, rng)
    return base, moves_of(base, _REVERSALS[kind.tag])


def apply_move(g: Dag, m: Move) -> Dag:
    if m.kind == ADD:
        return add_arc(g, m.arc)
    if m.kind == REMOVE:
        return remove_arc(g, m.arc)
    if m.kind == REVERSE:
        return reverse_arc(g, m.arc)
    raise ValueError(f"unknown move kind {m.kind!r}")


def random_move(g: Dag, kind, rng: random.Random) -> tuple:
    """Draw one move uniformly from the neighbourhood without listing it.

    Slots are drawn uniformly from the ordered node pairs plus the current
    arcs; slots that do not correspond to a valid move are rejected, which
    leaves every valid move equally likely.
    """
    kind = _as_kind(kind)
    base = _base(g, kind, rng)
    n = base.n
    if n < 2:
        raise EmptyNeighbourhoodError("a single-node domain has no neighbours")
    policy = _REVERSALS[kind.tag]
    par = base.parents
    npairs = n * (n - 1)
    arcs = base.arcs() if policy is not None else ()
    total = npairs + len(arcs)
    while True:
        k = rng.randrange(total)
        if k >= npairs:
            t, h = arcs[k - npairs]
            if _reversal_ok(base, policy, t, h):
                return base, Move(REVERSE, Arc(t, h))
            continue
        t, h = divmod(k, n - 1)
        if h >= t:
            h += 1
        if par[h] >> t & 1:
            return base, Move(REMOVE, Arc(t, h))
        if par[t] >> h & 1:
            continue
        if not base.descendants(h) >> t & 1:
            return base, Move(ADD, Arc(t, h))


@functools.lru_cache(maxsize=1 << 16)
def neighbourhood_size(g: Dag, tag: str) -> int:
    """Size of a deterministic neighbourhood (used for Hastings corrections)."""
    if tag in RCAR_KINDS:
        raise ConfigError("RCAR neighbourhoods are random; their size is not defined")
    return len(moves_of(g, _REVERSALS[tag]))

