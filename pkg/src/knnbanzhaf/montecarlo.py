"""Sampling estimators for kNN Banzhaf values.

Both estimators only ever look at the few closest members of a coalition,
since the utility depends on nothing else. Randomness comes from a Philox
generator keyed by the seed, with one counter block per round, so any
prefix of rounds reproduces independently of how many rounds follow.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .model import ExactValueVector, PreparedGame


class EstimateMethod(str, enum.Enum):
    COALITION = "coalition"
    PERMUTATION = "permutation"


@dataclass(frozen=True)
class EstimateVector:
    """Per-point estimates by point id, with plain standard errors of the mean."""

    values: np.ndarray
    samples: int
    seed: int
    method: EstimateMethod
    std_errors: np.ndarray = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.values)


def round_generator(seed: int, round_index: int) -> np.random.Generator:
    """Independent stream for one round, derived from ``(seed, round_index)``."""
    if not 0 <= seed < 1 << 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, round_index, 0, 0]))


class TopKWindow:
    """The k+1 closest members of a coalition, by rank, plus the top-k weight sum.

    Every marginal contribution to a kNN utility can be read off this
    window: removing a member pulls the (k+1)-th into the top k, and
    inserting an outsider can only push out the current k-th.
    """

    def __init__(self, game: PreparedGame, members_by_rank: np.ndarray):
        self.k = game.k
        self.weights = np.asarray(game.signed_weights, dtype=np.int64)
        self.buffer = np.asarray(members_by_rank[: self.k + 1], dtype=np.int64)
        top = self.buffer[: self.k]
        self.size = int(top.size)
        self.top_sum = int(self.weights[top].sum())

    def _kth(self) -> int:
        return int(self.buffer[self.k - 1]) if self.size == self.k else -1

    def marginal(self, rank: int, in_coalition: bool) -> int:
        """v(S + i) - v(S - i) for the point at ``rank``."""
        return int(self.marginals(np.array([rank]), np.array([in_coalition]))[0])

    def marginals(self, ranks: np.ndarray, in_coalition: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`marginal` over many ranks at once."""
        w = self.weights
        ranks = np.asarray(ranks, dtype=np.int64)
        in_coalition = np.asarray(in_coalition, dtype=bool)
        wi = w[ranks]
        full = self.size == self.k
        next_w = int(w[self.buffer[self.k]]) if self.buffer.size > self.k else 0
        kth = self._kth()
        kth_w = int(w[kth]) if full else 0

        # members: sum without i, given i sits in the top k
        in_top = in_coalition & (ranks <= kth) if full else in_coalition
        without = self.top_sum - wi + next_w
        removal = np.where(in_top, int(self.top_sum > 0) - (without > 0).astype(np.int64), 0)

        # outsiders: sum after inserting i
        if full:
            enters = ~in_coalition & (ranks < kth)
            with_i = self.top_sum - kth_w + wi
        else:
            enters = ~in_coalition
            with_i = self.top_sum + wi
        insertion = np.where(enters, (with_i > 0).astype(np.int64) - int(self.top_sum > 0), 0)
        return np.where(in_coalition, removal, insertion)


def _check_samples(m: int) -> None:
    if m < 1:
        raise ValueError("need at least one sample")


def window_marginals(weights: np.ndarray, k: int, masks: np.ndarray) -> np.ndarray:
    """Marginals for a batch of coalitions at once, by the :class:`TopKWindow` rule.

    ``masks`` is a (rounds, n) boolean matrix of coalitions over ranks; the
    result is an int8 matrix of the same shape.
    """
    masks = np.asarray(masks, dtype=bool)
    rounds, n = masks.shape
    if n == 0:
        return np.zeros((rounds, 0), dtype=np.int8)
    cnt = np.cumsum(masks, axis=1, dtype=np.int32)
    total = cnt[:, -1]
    in_top = masks & (cnt <= k)
    top_sum = np.where(in_top, weights, 0).sum(axis=1)
    full = total >= k
    # rank of the k-th member, or n when there are fewer than k members
    kth = np.where(full, np.argmax(cnt >= k, axis=1), n)
    kth_w = np.where(full, weights[np.minimum(kth, n - 1)], 0)
    nxt = np.argmax(cnt >= k + 1, axis=1)
    next_w = np.where(total > k, weights[nxt], 0)
    win = (top_sum > 0).astype(np.int8)[:, None]

    without = (top_sum + next_w)[:, None] - weights
    removal = np.where(in_top, win - (without > 0), 0)
    enters = ~masks & (np.arange(n) < kth[:, None])
    with_i = (top_sum - kth_w)[:, None] + weights
    insertion = np.where(enters, (with_i > 0) - win, 0)
    return np.where(masks, removal, insertion).astype(np.int8)


def _batch_size(n: int) -> int:
    # keep each batch's int64 temporaries around a few megabytes
    return max(1, min(256, (1 << 18) // max(n, 1)))


def _coalition_batches(game: PreparedGame, m: int, seed: int):
    n = game.n
    weights = np.asarray(game.signed_weights, dtype=np.int64)
    step = _batch_size(n)
    for lo in range(0, m, step):
        masks = np.stack([
            round_generator(seed, r).integers(0, 2, size=n).astype(bool)
            for r in range(lo, min(m, lo + step))
        ])
        yield window_marginals(weights, game.k, masks)


def coalition_marginals(game: PreparedGame, m: int, seed: int) -> np.ndarray:
    """(m, n) matrix of per-round marginals by rank, one common coalition per round."""
    _check_samples(m)
    return np.concatenate(list(_coalition_batches(game, m, seed)))


def banzhaf_mc_coalition(game: PreparedGame, m: int, seed: int) -> EstimateVector:
    """Mean marginal over m fair-coin coalitions shared by all points."""
    _check_samples(m)
    total = np.zeros(game.n, dtype=np.int64)
    squares = np.zeros(game.n, dtype=np.int64)
    for block in _coalition_batches(game, m, seed):
        total += block.sum(axis=0, dtype=np.int64)
        squares += np.count_nonzero(block, axis=0)
    return _summarize(game, total.astype(float), squares.astype(float), m, seed, EstimateMethod.COALITION)


def permutation_weights(n: int) -> np.ndarray:
    """``n * C(n-1, s) / 2**(n-1)`` for s = 0..n-1.

    Built by the ratio ``C(n-1, s+1) / C(n-1, s) = (n-1-s) / (s+1)`` in log
    space, so the tiny end weights of large games underflow to zero one by
    one instead of zeroing the whole recurrence.
    """
    if n < 1:
        raise ValueError("n must be positive")
    s = np.arange(n - 1, dtype=float)
    steps = np.log(n - 1 - s) - np.log(s + 1)
    logs = math.log(n) - (n - 1) * math.log(2.0) + np.concatenate([[0.0], np.cumsum(steps)])
    return np.exp(logs)


def permutation_marginals(game: PreparedGame, perm: np.ndarray) -> np.ndarray:
    """Marginal of each rank on joining its predecessors in ``perm``, with their counts.

    Returns a (2, n) array: row 0 the marginals, row 1 the predecessor counts.
    """
    k = game.k
    w = game.signed_weights
    n = len(perm)
    out = np.zeros((2, n), dtype=np.int64)
    window: list[int] = []  # ranks of the k closest members so far
    total = 0
    for pos, rank in enumerate(perm):
        rank = int(rank)
        before = total > 0
        if len(window) < k:
            bisect.insort(window, rank)
            total += w[rank]
        elif rank < window[-1]:
            total += w[rank] - w[window[-1]]
            window.pop()
            bisect.insort(window, rank)
        out[0, rank] = int(total > 0) - int(before)
        out[1, rank] = pos
    return out


def banzhaf_mc_permutation(game: PreparedGame, m: int, seed: int) -> EstimateVector:
    """Reweighted permutation marginals whose mean targets the Banzhaf value."""
    _check_samples(m)
    n = game.n
    weights = permutation_weights(n)
    total = np.zeros(n)
    squares = np.zeros(n)
    for r in range(m):
        perm = round_generator(seed, r).permutation(n)
        delta, pred = permutation_marginals(game, perm)
        x = delta * weights[pred]
        total += x
        squares += x * x
    return _summarize(game, total, squares, m, seed, EstimateMethod.PERMUTATION)


def _summarize(game, total: np.ndarray, squares: np.ndarray, m: int, seed: int, method) -> EstimateVector:
    """Mean and standard error from running sums, accumulated in round order."""
    mean = total / m
    if m > 1:
        var = np.maximum(squares - total * mean, 0.0) / (m - 1)
        se = np.sqrt(var / m)
    else:
        se = np.full(total.shape, np.nan)
    return EstimateVector(
        np.array(game.scatter(mean)), m, seed, method, np.array(game.scatter(se))
    )


def banzhaf_mc(game: PreparedGame, m: int, seed: int, method="coalition") -> EstimateVector:
    method = EstimateMethod(method)
    if method is EstimateMethod.COALITION:
        return banzhaf_mc_coalition(game, m, seed)
    return banzhaf_mc_permutation(game, m, seed)


def deviation(estimate, exact) -> float:
    """``max |est - exact| / max |exact|``.

    If every exact value is zero the result is 0 when the estimate is also
    all zero and ``inf`` otherwise.
    """
    est = np.asarray(estimate.values if isinstance(estimate, EstimateVector) else estimate, dtype=float)
    ref = exact.to_float() if isinstance(exact, ExactValueVector) else np.asarray(exact, dtype=float)
    if est.shape != ref.shape:
        raise ValueError(f"length mismatch: {est.size} estimates vs {ref.size} exact values")
    err = float(np.max(np.abs(est - ref))) if est.size else 0.0
    scale = float(np.max(np.abs(ref))) if ref.size else 0.0
    if scale == 0.0:
        return 0.0 if err == 0.0 else math.inf
    return err / scale
