import math
import random

import numpy as np
import pytest

from bnsearch.dag import Dag, dag_to_cpdag, enumerate_dags, equivalent
from bnsearch.errors import ConfigError
from bnsearch.mcmc import (
    ChainConfig,
    ChainState,
    acceptance_probability,
    class_bound_report,
    marginal_data_estimate,
    mc3_step,
    run_chain,
    write_diagnostics_csv,
    write_summary_csv,
)
from bnsearch.neighbourhoods import NeighbourhoodKind
from bnsearch.netio import forward_sample, random_network
from bnsearch.scoring import Dataset, ScoreCache, score


@pytest.fixture(scope="module")
def data3():
    net = random_network(3, random.Random(5), arity_range=(2, 2))
    return forward_sample(net, 200, 1)


def exact_posterior(d):
    dags = list(enumerate_dags(d.n_vars))
    logs = np.array([score(g, d) for g in dags])
    w = np.exp(logs - logs.max())
    return dict(zip(dags, w / w.sum())), float(logs.max() + np.log(np.exp(logs - logs.max()).sum()))


def test_acceptance_probability():
    assert acceptance_probability(0.5) == 1.0
    assert acceptance_probability(-math.log(4)) == pytest.approx(0.25)
    assert acceptance_probability(0.0, 0.5) == pytest.approx(0.5)
    assert acceptance_probability(-1e6) == 0.0


def test_config_validation():
    with pytest.raises(ConfigError):
        ChainConfig(kind="rcarr", hastings_correction=True).neighbourhood_kind()
    with pytest.raises(ConfigError):
        ChainConfig(kind="ar", tau=3).neighbourhood_kind()
    with pytest.raises(ConfigError):
        ChainConfig(iterations=0).neighbourhood_kind()
    with pytest.raises(ConfigError):
        ChainConfig(thin=0).neighbourhood_kind()
    assert ChainConfig(kind="rcarnr", tau=4).neighbourhood_kind().tau == 4


@pytest.mark.parametrize("kind", ["nr", "ar", "cr", "ncr"])
def test_corrected_chain_targets_posterior(data3, kind):
    post, _ = exact_posterior(data3)
    _, summ = run_chain(data3, ChainConfig(kind=kind, iterations=40_000, seed=3, hastings_correction=True))
    total = sum(summ.dag_visits.values())
    tv = 0.5 * sum(abs(summ.dag_visits.get(g, 0) / total - p) for g, p in post.items())
    assert tv < 0.05


def test_phat_close_to_exact_evidence(data3):
    _, log_z = exact_posterior(data3)
    _, summ = run_chain(data3, ChainConfig(kind="nr", iterations=40_000, seed=8, hastings_correction=True))
    assert summ.phat_log == pytest.approx(log_z, abs=0.1)


def test_marginal_data_estimate_toy():
    a, b = Dag.empty(2), Dag.from_arcs(2, [(0, 1)])
    # log p(G, D) - log(freq) is log(3) for both, so the estimate is log(3)
    est = marginal_data_estimate({a: 3, b: 1}, {a: math.log(3 * 0.75), b: math.log(3 * 0.25)})
    assert est == pytest.approx(math.log(3))
    assert marginal_data_estimate({a: 3, b: 1}, {a: 0.0, b: 50.0}, top_k=1) == pytest.approx(-math.log(0.75))
    with pytest.raises(ValueError):
        marginal_data_estimate({}, {})


def test_chain_records_and_counts(data3):
    recs, summ = run_chain(data3, ChainConfig(kind="ar", iterations=1000, seed=1, thin=10))
    assert len(recs) == 100
    assert [r.iteration for r in recs[:3]] == [10, 20, 30]
    assert summ.accepts + summ.rejects == 1000
    assert sum(summ.edge_histogram.values()) == 1000
    assert summ.distinct_cpdags == len({r.cpdag_id for r in recs}) == len(summ.cpdag_order)
    assert all(0 <= r.edges <= 3 for r in recs)


def test_running_score_tracks_exact(data3):
    recs, summ = run_chain(data3, ChainConfig(kind="rcarr", iterations=2000, seed=2))
    assert recs[-1].log_score == pytest.approx(score(summ.final, data3), abs=1e-8)


def test_chain_deterministic(data3):
    a, sa = run_chain(data3, ChainConfig(kind="rcarr", iterations=500, seed=4))
    b, sb = run_chain(data3, ChainConfig(kind="rcarr", iterations=500, seed=4))
    assert a == b and sa.final == sb.final


def test_single_variable_chain():
    d = Dataset(("a",), (2,), np.array([[0], [1]]))
    recs, summ = run_chain(d, ChainConfig(iterations=20))
    assert summ.accepts == 0 and summ.distinct_cpdags == 1 and len(recs) == 20


def test_rebase_on_reject_stays_equivalent(data3):
    cache = ScoreCache()
    g = Dag.from_arcs(3, [(0, 1), (1, 2)])
    state = ChainState(g, score(g, data3, cache))
    rng = random.Random(0)
    kind = NeighbourhoodKind.parse("rcarr", 5)
    for _ in range(200):
        before = state.current
        mc3_step(state, kind, data3, cache, rng, rebase_on_reject=True)
        if not state.last_accepted:
            assert equivalent(before, state.current)
        assert state.log_score == pytest.approx(score(state.current, data3), abs=1e-8)


def test_class_bound_report():
    chain = [Dag.from_arcs(3, [(0, 1), (1, 2)]), Dag.from_arcs(3, [(1, 0), (1, 2)]), Dag.empty(3)]
    rep = class_bound_report(chain)
    assert [(lb, obs) for _, lb, obs in rep] == [(3, 2), (1, 1)]
    assert rep[0][0] == dag_to_cpdag(chain[0])


def test_csv_writers(tmp_path, data3):
    recs, summ = run_chain(data3, ChainConfig(iterations=50, seed=0))
    write_diagnostics_csv(recs, tmp_path / "d.csv")
    write_summary_csv(summ, tmp_path / "s.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "iter,edges,logscore,accepted,cpdag_id" and len(lines) == 51
    s = (tmp_path / "s.csv").read_text().splitlines()
    assert s[0] == "distinct_cpdags,acc_rej_ratio,iter_per_sec,phatD_log"
    assert int(s[1].split(",")[0]) == summ.distinct_cpdags
