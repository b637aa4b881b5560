"""O(W k n^2) dynamic program using prefix sums and aggregated tail counts.

Ranks are 1-based as in :mod:`knnbanzhaf.dp_standard`. For subset sizes up
to ``k`` the table is filled through running prefix sums over ``m``; the
sizes above ``k`` are never materialized, because the tail only needs
``F_i(w, m) = f_i(w, k, m) * g(m)``.

The weight axis enumerates only the active weights, i.e. sums of at most
``k`` weight levels that occur in the game. Several excluded ranks ``i`` are
processed together as one numpy batch; each batch row is still its own
independent table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from operator import mul

import numpy as np

from .model import ExactValueVector, PreparedGame

INT64_SAFE = 1 << 62
BATCH_ELEMENTS = 1 << 21


def compute_g(n: int, k: int) -> list[int]:
    """``g(m) = sum_{j=0}^{n-k-1} C(n-m, j)`` for m = 1..n (index 0 unused).

    Seeded at ``g(n) = 1`` and walked downward with
    ``g(m) = 2 g(m+1) - C(n-m-1, n-k-1)``; the correction is nonzero only for
    ``m <= k`` and is updated by a ratio, never recomputed.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    g = [0] * (n + 1)
    if k == n:
        return g
    g[n] = 1
    corr = 0  # C(n-m-1, n-k-1) for the current m
    for m in range(n - 1, 0, -1):
        if m == k:
            corr = 1
        elif m < k:
            # C(n-m-1, n-k-1) = C(n-m-2, n-k-1) * (n-m-1) / (k-m)
            corr = corr * (n - m - 1) // (k - m)
        g[m] = 2 * g[m + 1] - corr
    return g


def g_direct(n: int, k: int) -> list[int]:
    """Same vector by summing binomials term by term."""
    return [0] + [sum(math.comb(n - m, j) for j in range(n - k)) for m in range(1, n + 1)]


def active_weights(game: PreparedGame) -> np.ndarray:
    """Sorted sums of at most ``k`` weight levels present in the game."""
    levels = np.unique(np.asarray(game.signed_weights, dtype=np.int64))
    reach = np.array([0], dtype=np.int64)
    seen = [reach]
    for _ in range(min(game.k, game.n)):
        reach = np.unique(np.add.outer(reach, levels).ravel())
        seen.append(reach)
    return np.unique(np.concatenate(seen))


@dataclass
class _Layout:
    """Per-game constants shared by every batch."""

    n: int
    k: int
    act: np.ndarray
    wt: np.ndarray  # weights by rank, index 0 = rank 1
    weight_col: np.ndarray  # column of each weight on the active axis
    shift_src: np.ndarray  # (n, A): column of act[j] - wt[m], or -1
    zero_col: int
    dtype: object

    def pos(self, x: np.ndarray) -> np.ndarray:
        """Number of active weights <= x."""
        return np.searchsorted(self.act, x, side="right")


def _layout(game: PreparedGame) -> _Layout:
    n, k = game.n, game.k
    act = active_weights(game)
    wt = np.asarray(game.signed_weights, dtype=np.int64)
    col = {int(a): j for j, a in enumerate(act)}
    weight_col = np.array([col[int(w)] for w in wt], dtype=np.int64)
    src_vals = act[None, :] - wt[:, None]
    idx = np.searchsorted(act, src_vals)
    idx_clip = np.minimum(idx, act.size - 1)
    shift_src = np.where(act[idx_clip] == src_vals, idx_clip, -1)
    top = min(k, n - 1)
    dtype = np.int64 if math.comb(n - 1, max(top, 0)) * max(act.size, 1) < INT64_SAFE else object
    return _Layout(n, k, act, wt, weight_col, shift_src, col[0], dtype)


def _layers(lay: _Layout, ranks: np.ndarray):
    """Yield ``(s, F_s, M_s)`` for s = 1..min(k, n-1) over a batch of excluded ranks.

    ``F_s[b, m-1, j] = f_i(act[j], s, m)`` for ``i = ranks[b]``; ``M_s`` is the
    exclusive prefix sum of ``F_s`` over ``m``. Only the previous layer is kept.
    """
    n = lay.n
    B = ranks.size
    A = lay.act.size
    keep = np.ones((B, n, 1), dtype=bool)
    keep[np.arange(B), ranks - 1, 0] = False
    F = np.zeros((B, n, A), dtype=lay.dtype)
    F[:, np.arange(n), lay.weight_col] = 1
    F = np.where(keep, F, 0).astype(lay.dtype)
    top = min(lay.k, n - 1)
    src = np.maximum(lay.shift_src, 0)[None, :, :]
    valid = (lay.shift_src >= 0)[None, :, :] & keep
    for s in range(1, top + 1):
        if s > 1:
            F = np.where(valid, np.take_along_axis(M, np.broadcast_to(src, M.shape), axis=2), 0)
            F = F.astype(lay.dtype)
        M = np.zeros_like(F)
        np.cumsum(F[:, :-1, :], axis=1, out=M[:, 1:, :])
        yield s, F, M


def _window_diff(cum: np.ndarray, lay: _Layout, shift: np.ndarray) -> np.ndarray:
    """``up - down`` counts for a half-open window between ``shift`` and 0.

    ``cum`` has a leading zero column so ``cum[..., p]`` sums the first ``p``
    active weights. When ``shift < 0`` this is the count of sums in
    ``(shift, 0]``; when ``shift > 0`` it is minus the count in ``(0, shift]``.
    """
    p0 = int(lay.pos(np.int64(0)))
    ps = lay.pos(shift)
    return cum[..., p0] - np.take_along_axis(cum, ps[..., None], axis=-1)[..., 0]


def _with_zero_col(x: np.ndarray) -> np.ndarray:
    c = np.cumsum(x, axis=-1)
    pad = np.zeros(x.shape[:-1] + (1,), dtype=c.dtype)
    return np.concatenate([pad, c], axis=-1)


def _batch_numerators(lay: _Layout, ranks: np.ndarray, g: list[int]) -> list[int]:
    n, k = lay.n, lay.k
    B = ranks.size
    wi = lay.wt[ranks - 1]
    # empty subset: pivotal exactly when the point alone wins the vote
    small = (wi > 0).astype(np.int64).astype(object)
    tail = np.zeros((B, n), dtype=object)
    for s, F, M in _layers(lay, ranks):
        if s < k:
            totals = M[:, -1, :] + F[:, -1, :]
            small = small + _window_diff(_with_zero_col(totals), lay, -wi).astype(object)
        if s == k:
            shift = lay.wt[None, :] - wi[:, None]
            tail = _window_diff(_with_zero_col(F), lay, shift)
    out = []
    for b in range(B):
        i = int(ranks[b])
        total = int(small[b])
        if k <= n - 1 and i < n:
            diffs = tail[b, i:].tolist()  # ranks m = i+1..n
            total += sum(map(mul, diffs, g[i + 1 :]))
        out.append(total)
    return out


def banzhaf_dp_efficient(game: PreparedGame) -> ExactValueVector:
    """Exact Banzhaf values; identical to the standard DP, in O(W k n^2)."""
    n, k = game.n, game.k
    lay = _layout(game)
    g = compute_g(n, k) if k <= n else [0] * (n + 1)
    batch = max(1, BATCH_ELEMENTS // max(1, n * lay.act.size))
    nums: list[int] = []
    ranks = np.arange(1, n + 1, dtype=np.int64)
    for start in range(0, n, batch):
        nums.extend(_batch_numerators(lay, ranks[start : start + batch], g))
    return ExactValueVector(tuple(game.scatter(nums)), n - 1)


@dataclass
class PartialSumTable:
    """Prefix sums ``M_i(w, s, m)`` (s <= k) and aggregated tails ``F_i(w, m)``."""

    act: np.ndarray
    M: dict[int, np.ndarray]  # s -> (n + 1, A); row m-1 holds M_i(., s, m), last row the total
    F: np.ndarray | None  # (n, A); row m-1 holds F_i(., m)

    def m_value(self, w: int, s: int, m: int) -> int:
        j = np.searchsorted(self.act, w)
        if j >= self.act.size or self.act[j] != w:
            return 0
        return int(self.M[s][m - 1, j])

    def f_tail(self, w: int, m: int) -> int:
        j = np.searchsorted(self.act, w)
        if self.F is None or j >= self.act.size or self.act[j] != w:
            return 0
        return int(self.F[m - 1, j])


def partial_sums(game: PreparedGame, i: int) -> PartialSumTable:
    """Materialize the partial-sum tables for one excluded rank ``i`` (1-based)."""
    n, k = game.n, game.k
    if not 1 <= i <= n:
        raise ValueError(f"rank {i} outside 1..{n}")
    lay = _layout(game)
    g = compute_g(n, k) if k <= n else [0] * (n + 1)
    M_out: dict[int, np.ndarray] = {}
    F_out = None
    for s, F, M in _layers(lay, np.array([i], dtype=np.int64)):
        full = np.concatenate([M[0], (M[0, -1] + F[0, -1])[None, :]], axis=0)
        M_out[s] = full.astype(object)
        if s == k:
            F_out = F[0].astype(object) * np.array(g[1:], dtype=object)[:, None]
    return PartialSumTable(lay.act, M_out, F_out)
