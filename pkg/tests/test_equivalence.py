import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnsearch.dag import Dag, covered_arcs, dag_to_cpdag, enumerate_dags, equivalent, random_dag
from bnsearch.equivalence import (
    RcarConfig,
    VertexPriorities,
    census,
    census_csv_row,
    class_size_lower_bound,
    class_sizes,
    enumerate_class,
    rcar,
    reds,
    undirected_components,
)
from bnsearch.errors import ConfigError, SizeGuardError

import oracles


def test_rcar_config_validation():
    with pytest.raises(ConfigError):
        RcarConfig(-1)
    assert RcarConfig().tau == 10


def test_rcar_tau_zero_is_identity():
    g = Dag.from_arcs(3, [(0, 1), (1, 2)])
    rng = random.Random(1)
    for _ in range(50):
        assert rcar(g, 0, rng) is g


def test_rcar_without_covered_arcs_is_fixed_point():
    v = Dag.from_arcs(3, [(0, 2), (1, 2)])
    assert rcar(v, RcarConfig(10, seed=4)) == v


def test_rcar_repetition_count_is_uniform():
    # on a single arc every reversal flips it, so the parity of the drawn
    # repetition count decides the outcome: 6 of the 11 values 0..10 are even
    g = Dag.from_arcs(2, [(0, 1)])
    rng = random.Random(2024)
    draws = 22_000
    same = sum(rcar(g, 10, rng) == g for _ in range(draws))
    assert abs(same / draws - 6 / 11) < 0.012


def test_rcar_seeded_reproducible():
    g = random_dag(7, random.Random(0), 0.5)
    a = [rcar(g, RcarConfig(10, seed=s)) for s in range(20)]
    b = [rcar(g, RcarConfig(10, seed=s)) for s in range(20)]
    assert a == b


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 8), st.integers(0, 12))
def test_rcar_stays_in_class(seed, n, tau):
    rng = random.Random(seed)
    g = random_dag(n, rng, edge_prob=rng.random())
    h = rcar(g, tau, rng)
    assert equivalent(g, h)
    assert dag_to_cpdag(g) == dag_to_cpdag(h)


def test_rcar_visits_whole_small_class():
    # the 4-node chain has 4 members; a long enough walk reaches them all
    g = Dag.from_arcs(4, [(0, 1), (1, 2), (2, 3)])
    rng = random.Random(9)
    seen = {rcar(g, 10, rng) for _ in range(2000)}
    assert seen == set(enumerate_class(g))


def test_reds_walk_is_monotone_in_priorities():
    rng = random.Random(3)
    for _ in range(40):
        g = random_dag(6, rng, 0.5)
        pri = VertexPriorities.draw(6, rng)
        path = reds(g, pri, rng)
        end = path[-1] if path else g
        for h in path:
            assert equivalent(g, h)
        assert not [a for a in covered_arcs(end) if pri.r[a.tail] < pri.r[a.head]]


def test_reds_priorities_validation():
    with pytest.raises(ValueError):
        VertexPriorities((0.1, 0.1))
    with pytest.raises(ValueError):
        reds(Dag.empty(3), VertexPriorities((0.1, 0.2)))


def test_enumerate_class_against_oracle_n4():
    groups = {}
    for arcs in oracles.brute_force_arc_sets(4):
        groups.setdefault(oracles.nx_model(4, arcs), set()).add(arcs)
    for members in list(groups.values())[::3]:
        g = Dag.from_arcs(4, next(iter(members)))
        assert {frozenset(h.arcs()) for h in enumerate_class(g)} == members


def test_enumerate_class_size_guard():
    with pytest.raises(SizeGuardError):
        enumerate_class(Dag.empty(9))


@pytest.mark.parametrize("n,dags,classes", [(1, 1, 1), (2, 3, 2), (3, 25, 11), (4, 543, 185), (5, 29281, 8782)])
def test_census_counts(n, dags, classes):
    d, c, ratio = census(n)
    assert (d, c) == (dags, classes)
    assert d == oracles.robinson(n)
    assert ratio == pytest.approx(dags / classes)


def test_class_sizes_match_oracle_n3():
    expected = Counter()
    for arcs in oracles.brute_force_arc_sets(3):
        expected[oracles.nx_model(3, arcs)] += 1
    assert sorted(class_sizes(3).values()) == sorted(expected.values())


def test_census_csv_row():
    assert census_csv_row(3) == "3,25,11,2.272727272727273"


def test_census_guards():
    with pytest.raises(ValueError):
        census(0)
    with pytest.raises(SizeGuardError):
        census(7)


def test_lower_bound_never_exceeds_class_size():
    for n in (2, 3, 4):
        for cp, size in class_sizes(n).items():
            assert class_size_lower_bound(cp) <= size


def test_lower_bound_exact_for_tree_components():
    for n in (3, 4, 5):
        for cp, size in class_sizes(n).items():
            comps = undirected_components(cp)
            und = cp.undirected()
            forest = all(
                sum(1 for u, v in und if u in comp) == len(comp) - 1 for comp in comps
            )
            if forest:
                assert class_size_lower_bound(cp) == size


def test_lower_bound_examples():
    chain = dag_to_cpdag(Dag.from_arcs(4, [(0, 1), (1, 2), (2, 3)]))
    assert class_size_lower_bound(chain) == 4
    assert len(enumerate_class(Dag.from_arcs(4, [(0, 1), (1, 2), (2, 3)]))) == 4
    # complete graph on three nodes: bound 4, true size 6
    k3 = dag_to_cpdag(Dag.from_arcs(3, [(0, 1), (0, 2), (1, 2)]))
    assert class_size_lower_bound(k3) == 4
    assert class_sizes(3)[k3] == 6
    assert class_size_lower_bound(dag_to_cpdag(Dag.empty(5))) == 1


def test_undirected_components():
    cp = dag_to_cpdag(Dag.from_arcs(5, [(0, 1), (3, 4)]))
    assert sorted(map(sorted, undirected_components(cp))) == [[0, 1], [3, 4]]


def test_covered_reversals_reach_every_class_member_n4():
    reps = {}
    for g in enumerate_dags(4):
        reps.setdefault(dag_to_cpdag(g), g)
    sizes = class_sizes(4)
    for cp, g in reps.items():
        assert len(enumerate_class(g)) == sizes[cp]


@pytest.mark.slow
def test_census_n6():
    dags, classes, ratio = census(6)
    assert (dags, classes) == (3781503, 1067825)
    assert ratio < 3.7
