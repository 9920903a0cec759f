"""Hill-Climber Monte Carlo structure search.

Each iteration optionally moves to a random equivalent DAG, scores the whole
neighbourhood and takes the best move if it does not lower the score. When
every neighbour is worse, up to ``max_trials`` consecutive escape attempts
each apply one more random covered-arc walk before the search gives up. With
``kind="ar"`` the walks are the identity and the procedure is the classic
greedy hill-climber.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .dag import Dag
from .equivalence import DEFAULT_TAU, RcarConfig, rcar
from .errors import ConfigError, EmptyNeighbourhoodError
from .neighbourhoods import RCAR_KINDS, Move, NeighbourhoodKind, apply_move, neighbourhood
from .scoring import Dataset, ScoreCache, score, score_delta

DEFAULT_MAX_TRIALS = 50
# score differences below this are treated as ties (covered reversals are exact ties in theory)
TIE_TOL = 1e-7


@dataclass
class HcmcConfig:
    kind: str = "rcarr"
    tau: int | None = None
    max_trials: int = DEFAULT_MAX_TRIALS
    max_steps: int | None = None
    seed: int = 0
    start: Dag | None = None

    def resolve(self, n: int) -> tuple:
        """Validated ``(NeighbourhoodKind, tau, max_steps)``."""
        tag = self.kind.strip().lower() if isinstance(self.kind, str) else self.kind.tag
        if self.max_trials < 0:
            raise ConfigError("max_trials must be >= 0")
        steps = self.max_steps if self.max_steps is not None else max(1, 10 * n * n)
        if steps < 1:
            raise ConfigError("max_steps must be >= 1")
        if tag in RCAR_KINDS:
            tau = DEFAULT_TAU if self.tau is None else self.tau
            if tau < 0:
                raise ConfigError("tau must be >= 0")
            return NeighbourhoodKind(tag, RcarConfig(tau)), tau, steps
        if self.tau not in (None, 0):
            raise ConfigError(f"neighbourhood {tag!r} performs no covered-arc walk; tau must be unset or 0")
        return NeighbourhoodKind(tag), 0, steps


@dataclass(frozen=True)
class SearchStep:
    iteration: int
    step: int
    score: float
    move: Move | None
    trials: int


@dataclass
class SearchTrace:
    records: list = field(default_factory=list)
    steps: int = 0
    seconds: float = 0.0
    final_score: float = float("nan")

    @property
    def sec_per_step(self) -> float:
        return self.seconds / self.steps if self.steps else float("nan")


def pick_best(g: Dag, moves, d: Dataset, cache: ScoreCache | None, rng: random.Random) -> tuple:
    """Return ``(move, delta)`` with maximal delta; near-ties are broken uniformly."""
    if not moves:
        raise EmptyNeighbourhoodError("no candidate moves")
    deltas = [score_delta(g, m, d, cache) for m in moves]
    best = max(deltas)
    tied = [i for i, x in enumerate(deltas) if x >= best - TIE_TOL]
    k = tied[rng.randrange(len(tied))] if len(tied) > 1 else tied[0]
    return moves[k], deltas[k]


def hcmc(d: Dataset, cfg: HcmcConfig | None = None, cache: ScoreCache | None = None) -> tuple:
    """Run the search; returns ``(dag, trace)``."""
    cfg = cfg or HcmcConfig()
    if d.n_vars < 1:
        raise ValueError("dataset has no variables")
    kind, tau, max_steps = cfg.resolve(d.n_vars)
    rng = random.Random(cfg.seed)
    cache = cache if cache is not None else ScoreCache()
    g = cfg.start if cfg.start is not None else Dag.empty(d.n_vars, d.labels)
    if g.n != d.n_vars:
        raise ConfigError("start DAG does not match the dataset")
    cur = score(g, d, cache)
    trace = SearchTrace()
    trials = 0
    it = 0
    t0 = time.perf_counter()
    while trace.steps < max_steps:
        it += 1
        base, moves = neighbourhood(g, kind, rng)
        if not moves:
            g = base
            break
        m, delta = pick_best(base, moves, d, cache, rng)
        if delta >= -TIE_TOL:
            g = apply_move(base, m)
            cur = score(g, d, cache)
            trials = 0
            trace.steps += 1
            trace.records.append(SearchStep(it, trace.steps, cur, m, trials))
        elif trials < cfg.max_trials:
            g = rcar(base, tau, rng) if tau else base
            trials += 1
            trace.records.append(SearchStep(it, trace.steps, cur, None, trials))
        else:
            g = base
            break
    trace.seconds = time.perf_counter() - t0
    trace.final_score = score(g, d, cache)
    return g, trace


def hill_climber(d: Dataset, seed: int = 0, max_steps: int | None = None, cache: ScoreCache | None = None) -> tuple:
    """Classic greedy search over the all-reversals neighbourhood."""
    return hcmc(d, HcmcConfig(kind="ar", tau=None, seed=seed, max_steps=max_steps), cache)
