"""Exhaustive subset enumeration: the ground truth for every other engine.

Everything here is exact. Coalitions are bitmasks over ranks (bit ``r`` set
means the point at rank ``r`` is present).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .model import BinarySubgame, ExactValueVector, PreparedGame

DEFAULT_CAP = 20


class EnumerationCapError(ValueError):
    """Raised when brute force is asked to enumerate too many subsets."""


@dataclass(frozen=True)
class PivotalCount:
    point_id: int
    count: int
    sign: int


def _check_cap(n: int, cap: int | None):
    limit = DEFAULT_CAP if cap is None else cap
    if n > limit:
        raise EnumerationCapError(
            f"brute force over n={n} points exceeds the cap of {limit}; "
            "raise the cap explicitly to proceed"
        )


def value_function(S, game: PreparedGame) -> int:
    """kNN utility of coalition ``S`` (point ids): 1 iff the top-k vote is positive."""
    return _rank_value([game.rank_of[i] for i in S], game)


def _rank_value(ranks, game: PreparedGame) -> int:
    top = sorted(ranks)[: game.k]
    return int(sum(game.signed_weights[r] for r in top) > 0)


def top_k_sums(weights: Sequence[int], k: int) -> np.ndarray:
    """Signed top-k weight sum of every coalition, indexed by bitmask."""
    n = len(weights)
    masks = np.arange(1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    in_top = bits & (np.cumsum(bits, axis=1) <= k)
    return in_top.astype(np.int64) @ np.asarray(weights, dtype=np.int64)


def coalition_values(game: PreparedGame) -> np.ndarray:
    return (top_k_sums(game.signed_weights, game.k) > 0).astype(np.int64)


def marginal_sums(values: np.ndarray, n: int) -> list[int]:
    """For each rank r: sum over coalitions S without r of v(S+r) - v(S)."""
    masks = np.arange(1 << n, dtype=np.int64)
    out = []
    for r in range(n):
        bit = 1 << r
        without = masks[(masks & bit) == 0]
        out.append(int((values[without | bit] - values[without]).sum()))
    return out


def banzhaf_exact_bruteforce(game: PreparedGame, cap: int | None = None) -> ExactValueVector:
    """Exact Banzhaf values by enumerating all ``2**n`` coalitions."""
    n = game.n
    _check_cap(n, cap)
    sums = marginal_sums(coalition_values(game), n)
    return ExactValueVector(tuple(game.scatter(sums)), max(n - 1, 0))


def banzhaf_bruteforce_multiclass(
    subgames: Sequence[BinarySubgame], cap: int | None = None
) -> ExactValueVector:
    """Brute force on the averaged multi-class utility, without using linearity.

    The utility of a coalition is the mean of the per-class binary utilities;
    it is tabulated first and enumerated as a single game.
    """
    if not subgames:
        raise ValueError("no subgames")
    game0 = subgames[0].game
    n = game0.n
    _check_cap(n, cap)
    total = np.zeros(1 << n, dtype=np.int64)
    for sub in subgames:
        total += coalition_values(sub.game)
    sums = marginal_sums(total, n)
    return ExactValueVector(tuple(game0.scatter(sums)), max(n - 1, 0), len(subgames))


def pivotal_count(game: PreparedGame, point_id: int, cap: int | None = None) -> PivotalCount:
    """Number of coalitions whose utility changes when ``point_id`` joins."""
    n = game.n
    _check_cap(n, cap)
    r = game.order.index(point_id)
    values = coalition_values(game)
    masks = np.arange(1 << n, dtype=np.int64)
    bit = 1 << r
    without = masks[(masks & bit) == 0]
    delta = values[without | bit] - values[without]
    count = int(np.count_nonzero(delta))
    if game.signed_weights[r] > 0:
        sign = 1
    elif game.signed_weights[r] < 0:
        sign = -1
    else:
        sign = int(np.sign(delta.sum())) or 1
    return PivotalCount(point_id, count, sign)


def lemma_violations(game: PreparedGame, cap: int | None = None) -> list[tuple[int, int]]:
    """(rank, mask) pairs where a point flips the utility against its label's direction.

    A positive point must never turn 1 into 0 and a negative point never 0
    into 1. Zero-weight points are skipped since they have no direction.
    """
    n = game.n
    _check_cap(n, cap)
    values = coalition_values(game)
    masks = np.arange(1 << n, dtype=np.int64)
    bad = []
    for r in range(n):
        w = game.signed_weights[r]
        if w == 0:
            continue
        bit = 1 << r
        without = masks[(masks & bit) == 0]
        delta = values[without | bit] - values[without]
        wrong = without[delta == (-1 if w > 0 else 1)]
        bad.extend((r, int(m)) for m in wrong)
    return bad


def shapley_exact_bruteforce(game: PreparedGame, cap: int | None = None) -> ExactValueVector:
    """Exact Shapley values from the coalition-weighted formula.

    Every coalition weight ``1 / (n * C(n-1, s))`` equals ``s! (n-1-s)! / n!``,
    so the result is returned over the common denominator ``n!``.
    """
    n = game.n
    _check_cap(n, cap)
    values = coalition_values(game)
    masks = np.arange(1 << n, dtype=np.int64)
    sizes = np.array([bin(m).count("1") for m in range(1 << n)], dtype=np.int64)
    weight = [math.factorial(s) * math.factorial(n - 1 - s) for s in range(n)]
    nums = []
    for r in range(n):
        bit = 1 << r
        without = masks[(masks & bit) == 0]
        delta = values[without | bit] - values[without]
        total = 0
        for s in range(n):
            total += weight[s] * int(delta[sizes[without] == s].sum())
        nums.append(total)
    return ExactValueVector(tuple(game.scatter(nums)), 0, math.factorial(n))


def shapley_by_permutations(game: PreparedGame, cap: int = 9) -> list[Fraction]:
    """Shapley values averaged over all ``n!`` orderings, by point id."""
    n = game.n
    if n > cap:
        raise EnumerationCapError(f"n={n} too large for permutation enumeration (cap {cap})")
    totals = [0] * n
    for perm in itertools.permutations(range(n)):
        members: set[int] = set()
        before = 0
        for r in perm:
            members.add(r)
            after = _rank_value(members, game)
            totals[r] += after - before
            before = after
    fact = math.factorial(n)
    return game.scatter([Fraction(t, fact) for t in totals])


def banzhaf_from_utility(n: int, utility: Callable[[frozenset], Fraction]) -> list[Fraction]:
    """Textbook Banzhaf over an arbitrary utility callable; rank ``r`` is player ``r``."""
    out = []
    players = range(n)
    for r in players:
        others = [p for p in players if p != r]
        total = Fraction(0)
        for size in range(len(others) + 1):
            for subset in itertools.combinations(others, size):
                s = frozenset(subset)
                total += utility(s | {r}) - utility(s)
        out.append(total / (1 << (n - 1)) if n else total)
    return out
