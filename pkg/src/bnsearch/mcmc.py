"""Metropolis sampler over DAG space with convergence diagnostics."""

from __future__ import annotations

import math
import random
import time
from collections import Counter
from dataclasses import dataclass, field

from .dag import Dag, dag_to_cpdag
from .equivalence import class_size_lower_bound
from .errors import ConfigError, EmptyNeighbourhoodError
from .neighbourhoods import RCAR_KINDS, NeighbourhoodKind, apply_move, neighbourhood_size, random_move
from .scoring import Dataset, ScoreCache, score, score_delta


@dataclass
class ChainConfig:
    kind: str = "ar"
    tau: int | None = None
    iterations: int = 10_000
    seed: int = 0
    start: Dag | None = None
    hastings_correction: bool = False
    top_k: int = 5
    thin: int = 1
    rebase_on_reject: bool = False

    def neighbourhood_kind(self) -> NeighbourhoodKind:
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.thin < 1:
            raise ConfigError("thin must be >= 1")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        tag = self.kind.strip().lower()
        if self.hastings_correction and tag in RCAR_KINDS:
            raise ConfigError("the Hastings correction is only defined for nr, ar, cr and ncr")
        if tag not in RCAR_KINDS and self.tau not in (None, 0):
            raise ConfigError(f"neighbourhood {tag!r} performs no covered-arc walk; tau must be unset or 0")
        return NeighbourhoodKind.parse(tag, self.tau)


@dataclass
class ChainState:
    current: Dag
    log_score: float
    iteration: int = 0
    accepts: int = 0
    rejects: int = 0
    last_accepted: bool = False


@dataclass(frozen=True)
class DiagnosticsRecord:
    iteration: int
    edges: int
    log_score: float
    accepted: bool
    cpdag_id: int


@dataclass
class ChainSummary:
    iterations: int
    accepts: int
    rejects: int
    seconds: float
    distinct_cpdags: int
    edge_histogram: Counter
    mean_edges: float
    phat_log: float
    dag_visits: dict = field(repr=False)
    log_joint: dict = field(repr=False)
    cpdag_order: list = field(repr=False)
    final: Dag | None = None

    @property
    def acc_rej_ratio(self) -> float:
        return self.accepts / self.rejects if self.rejects else math.inf

    @property
    def accept_rate(self) -> float:
        return self.accepts / self.iterations

    @property
    def iter_per_sec(self) -> float:
        return self.iterations / self.seconds if self.seconds > 0 else math.inf


def acceptance_probability(delta: float, hastings: float = 1.0) -> float:
    """min{1, exp(delta) * hastings} computed without overflow."""
    log_ratio = delta + math.log(hastings)
    return 1.0 if log_ratio >= 0 else math.exp(log_ratio)


def mc3_step(state: ChainState, kind: NeighbourhoodKind, d: Dataset, cache: ScoreCache, rng: random.Random,
             hastings_correction: bool = False, rebase_on_reject: bool = False) -> ChainState:
    """Advance the chain by one proposal. The state object is updated in place and returned."""
    g = state.current
    state.iteration += 1
    try:
        base, m = random_move(g, kind, rng)
    except EmptyNeighbourhoodError:
        state.rejects += 1
        state.last_accepted = False
        return state
    delta = score_delta(base, m, d, cache)
    cand = apply_move(base, m)
    h = 1.0
    if hastings_correction:
        h = neighbourhood_size(g, kind.tag) / neighbourhood_size(cand, kind.tag)
    p = acceptance_probability(delta, h)
    if p >= 1.0 or rng.random() < p:
        state.current = cand
        state.log_score += delta
        state.accepts += 1
        state.last_accepted = True
    else:
        if rebase_on_reject:
            state.current = base
        state.rejects += 1
        state.last_accepted = False
    return state


def run_chain(d: Dataset, cfg: ChainConfig, cache: ScoreCache | None = None) -> tuple:
    """Run ``cfg.iterations`` steps; returns ``(records, summary)``."""
    kind = cfg.neighbourhood_kind()
    cache = cache if cache is not None else ScoreCache()
    rng = random.Random(cfg.seed)
    g = cfg.start if cfg.start is not None else Dag.empty(d.n_vars, d.labels)
    state = ChainState(g, score(g, d, cache))
    records = []
    dag_visits = {}
    log_joint = {}
    cpdag_ids = {}
    cpdag_order = []
    hist = Counter()
    edge_sum = 0
    single = d.n_vars < 2
    t0 = time.perf_counter()
    for _ in range(cfg.iterations):
        if not single:
            mc3_step(state, kind, d, cache, rng, cfg.hastings_correction, cfg.rebase_on_reject)
        else:
            state.iteration += 1
            state.rejects += 1
        cur = state.current
        if cur in dag_visits:
            dag_visits[cur] += 1
        else:
            dag_visits[cur] = 1
            log_joint[cur] = state.log_score
        ne = cur.num_arcs
        hist[ne] += 1
        edge_sum += ne
        if state.iteration % cfg.thin == 0:
            cp = dag_to_cpdag(cur)
            cid = cpdag_ids.get(cp)
            if cid is None:
                cid = cpdag_ids[cp] = len(cpdag_order)
                cpdag_order.append(cp)
            records.append(DiagnosticsRecord(state.iteration, ne, state.log_score, state.last_accepted, cid))
    seconds = time.perf_counter() - t0
    # exact scores for the p(D) estimate; the running sum can drift by rounding
    top = sorted(dag_visits, key=dag_visits.get, reverse=True)[: cfg.top_k]
    for gg in top:
        log_joint[gg] = score(gg, d, cache)
    summary = ChainSummary(
        iterations=cfg.iterations,
        accepts=state.accepts,
        rejects=state.rejects,
        seconds=seconds,
        distinct_cpdags=len(cpdag_order),
        edge_histogram=hist,
        mean_edges=edge_sum / cfg.iterations,
        phat_log=marginal_data_estimate(dag_visits, log_joint, cfg.top_k),
        dag_visits=dag_visits,
        log_joint=log_joint,
        cpdag_order=cpdag_order,
        final=state.current,
    )
    return records, summary


def marginal_data_estimate(visits: dict, log_joint: dict, top_k: int = 5) -> float:
    """log of the mean of p(G, D) / p_hat(G | D) over the ``top_k`` most visited states.

    ``visits`` maps a state to its visit count (insertion order breaks ties);
    ``log_joint`` maps it to log p(G, D).
    """
    if not visits:
        raise ValueError("no visited states")
    total = sum(visits.values())
    top = sorted(visits, key=visits.get, reverse=True)[:top_k]
    terms = [log_joint[g] - math.log(visits[g] / total) for g in top]
    hi = max(terms)
    return hi + math.log(sum(math.exp(t - hi) for t in terms) / len(terms))


def class_bound_report(visits) -> list:
    """Per visited essential graph: ``(cpdag, lower_bound, observed_members)``.

    ``visits`` is an iterable of DAGs (or a mapping whose keys are DAGs) in
    first-visit order; output follows the first visit of each class.
    """
    members = {}
    for g in visits:
        members.setdefault(dag_to_cpdag(g), set()).add(g)
    return [(cp, class_size_lower_bound(cp), len(ms)) for cp, ms in members.items()]


def write_diagnostics_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iter,edges,logscore,accepted,cpdag_id\n")
        for r in records:
            fh.write(f"{r.iteration},{r.edges},{r.log_score!r},{int(r.accepted)},{r.cpdag_id}\n")


def write_summary_csv(summary: ChainSummary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("distinct_cpdags,acc_rej_ratio,iter_per_sec,phatD_log\n")
        fh.write(f"{summary.distinct_cpdags},{summary.acc_rej_ratio!r},{summary.iter_per_sec!r},{summary.phat_log!r}\n")
