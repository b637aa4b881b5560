"""Baseline O(W n^4) dynamic program over the count table f_i(w, s, m).

Positions in this module are 1-based ranks: rank 1 is the training point
closest to the test point, and ``m = 0`` is reserved for the empty subset.

``f_i(w, s, m)`` counts subsets ``S`` of the game without rank ``i`` with
``|S| = s``, top-min(s, k) signed weight sum ``w``, and ``min(s, k)``-th
closest member at rank ``m``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .model import ExactValueVector, PreparedGame


@dataclass
class FTable:
    i: int
    n: int
    k: int
    entries: dict[tuple[int, int, int], int]
    full: bool = False

    def __call__(self, w: int, s: int, m: int) -> int:
        return self.entries.get((w, s, m), 0)

    def layer_total(self, s: int) -> int:
        return sum(c for (_, ss, _), c in self.entries.items() if ss == s)


@dataclass(frozen=True)
class PivotTerms:
    """Pivotal subset counts for one point, split by subset size and direction.

    ``up`` counts coalitions the point turns from 0 to 1 and ``down`` those
    it turns from 1 to 0. When weight magnitudes fall with distance, one
    direction is always empty.
    """

    up_lt_k: int
    up_ge_k: int
    down_lt_k: int
    down_ge_k: int

    @property
    def numerator(self) -> int:
        return self.up_lt_k + self.up_ge_k - self.down_lt_k - self.down_ge_k

    @property
    def c_lt_k(self) -> int:
        return self.up_lt_k + self.down_lt_k

    @property
    def c_ge_k(self) -> int:
        return self.up_ge_k + self.down_ge_k


def _binomials(a: int, upto: int) -> list[int]:
    """C(a, 0..upto) by the multiplicative recurrence."""
    out = [1]
    c = 1
    for j in range(upto):
        c = c * (a - j) // (j + 1) if a - j > 0 else 0
        out.append(c)
    return out


def build_f_table(game: PreparedGame, i: int, *, full: bool = False) -> FTable:
    """Fill f_i for rank ``i`` (1-based).

    Layers with ``s > k`` are lifted from layer ``k`` by a binomial factor and
    only kept for ``m > i``, the rows the value formula reads. ``full=True``
    also lifts the ``m < i`` rows (with ``z_i`` excluded from the tail), which
    is only useful for checking that every subset is counted once.
    """
    n, k = game.n, game.k
    if not 1 <= i <= n:
        raise ValueError(f"rank {i} outside 1..{n}")
    wt = (0,) + game.signed_weights
    entries: dict[tuple[int, int, int], int] = {(0, 0, 0): 1}
    layer: dict[tuple[int, int], int] = {}
    for m in range(1, n + 1):
        if m != i:
            layer[(wt[m], m)] = 1
    top = min(k, n - 1)
    if top >= 1:
        for (w, m), c in layer.items():
            entries[(w, 1, m)] = c
    for s in range(2, top + 1):
        nxt: dict[tuple[int, int], int] = defaultdict(int)
        for (w, mp), c in layer.items():
            for m in range(mp + 1, n + 1):
                if m != i:
                    nxt[(w + wt[m], m)] += c
        layer = dict(nxt)
        for (w, m), c in layer.items():
            entries[(w, s, m)] = c
    if k < n - 1:
        for (w, m), c in layer.items():
            if m > i:
                tail = n - m
            elif full:
                tail = n - m - 1
            else:
                continue
            binoms = _binomials(tail, n - 1 - k)
            for s in range(k + 1, n):
                b = binoms[s - k]
                if b:
                    entries[(w, s, m)] = c * b
    return FTable(i, n, k, entries, full)


def pivot_terms(game: PreparedGame, i: int, table: FTable | None = None) -> PivotTerms:
    """Aggregate f_i over the weight windows in which rank ``i`` is pivotal.

    Small subsets (``s < k``) flip when adding ``w_i`` crosses zero; larger
    ones only when ``z_i`` displaces the current k-th member ``z_m`` with
    ``m > i``, shifting the sum by ``w_i - w_m``. Windows are half-open:
    ``(lo, hi]``.
    """
    if table is None:
        table = build_f_table(game, i)
    wt = (0,) + game.signed_weights
    wi = wt[i]
    k = game.k
    up_lt = up_ge = down_lt = down_ge = 0
    for (w, s, m), c in table.entries.items():
        if s < k:
            if -wi < w <= 0:
                up_lt += c
            elif 0 < w <= -wi:
                down_lt += c
        elif m > i:
            shift = wt[m] - wi
            if shift < w <= 0:
                up_ge += c
            elif 0 < w <= shift:
                down_ge += c
    return PivotTerms(up_lt, up_ge, down_lt, down_ge)


def banzhaf_dp_standard(game: PreparedGame) -> ExactValueVector:
    """Exact Banzhaf values, one independent table per training point."""
    n = game.n
    nums = [pivot_terms(game, i).numerator for i in range(1, n + 1)]
    return ExactValueVector(tuple(game.scatter(nums)), n - 1)
