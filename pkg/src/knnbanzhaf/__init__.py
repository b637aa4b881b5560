"""Exact and sampled Banzhaf data values for k-nearest-neighbour classifiers."""

from .dp_efficient import banzhaf_dp_efficient
from .dp_standard import banzhaf_dp_standard
from .dp_unweighted import banzhaf_dp_unweighted
from .model import (
    Dataset,
    DistanceMetric,
    ExactValueVector,
    GameSpec,
    PreparedGame,
    WeightScheme,
    average_over_tests,
    combine_subgames,
    decompose_multiclass,
    game_from_weights,
    prepare_game,
)
from .montecarlo import banzhaf_mc_coalition, banzhaf_mc_permutation, deviation
from .oracle import banzhaf_exact_bruteforce

__all__ = [
    "Dataset",
    "DistanceMetric",
    "ExactValueVector",
    "GameSpec",
    "PreparedGame",
    "WeightScheme",
    "average_over_tests",
    "banzhaf_dp_efficient",
    "banzhaf_dp_standard",
    "banzhaf_dp_unweighted",
    "banzhaf_exact_bruteforce",
    "banzhaf_mc_coalition",
    "banzhaf_mc_permutation",
    "combine_subgames",
    "decompose_multiclass",
    "deviation",
    "game_from_weights",
    "prepare_game",
]
