"""Equivalence-aware structure search for discrete Bayesian networks."""

__version__ = "0.1.0"

from .dag import (
    Arc,
    Cpdag,
    Dag,
    add_arc,
    covered_arcs,
    d_separated,
    dag_to_cpdag,
    equivalent,
    independence_model,
    is_covered,
    model_included,
    remove_arc,
    reverse_arc,
    structural_difference,
)
from .equivalence import RcarConfig, census, class_size_lower_bound, enumerate_class, rcar, reds
from .mcmc import ChainConfig, run_chain
from .neighbourhoods import Move, NeighbourhoodKind, apply_move, neighbourhood, random_move
from .netio import BayesNet, forward_sample, load_network, save_network
from .scoring import Dataset, ScoreCache, score, score_delta
from .search import HcmcConfig, hcmc
