"""O(n k^2) dynamic program for unweighted kNN games.

All points share one set of tables:

* forward ``f_i(w, s)``: subsets of ranks 1..i of size ``s <= k`` with sum ``w``;
* backward ``b_i(w, s)``: the same over ranks i..n, with prefix sums
  ``B_i(w, t) = sum_{t' <= t} b_i(w, t')``;
* signed backward ``b_i^u(w, t)``: subsets of ranks i..n whose t-th closest
  member has weight ``u`` and whose top-t sum is ``w``. Members beyond the
  t-th are unconstrained, so these counts carry factors ``2**(n-j)`` and need
  arbitrary precision.

Ranks are 1-based. Weights must lie in {-1, 0, +1}; zeros arise only in
multi-class subgames, where they get their own signed table.

Negative points and the displaced neighbour
-------------------------------------------
When a negative point enters the top k of a subset of size >= k it pushes
out the k-th member. The vote can only drop from positive to non-positive if
that displaced member was *positive*, so the tail term for a negative point
reads ``b^+`` over sums in [1, 2]. Reading ``b^-`` there (the other possible
reading of the recurrence) undercounts; ``negative_tail_table="minus"`` keeps
that variant reachable so tests can show it disagrees with brute force.

Cost
----
The signed tables hold n-bit integers, so reading them entry by entry costs
O(k^2) big-integer operations per point. The default path aggregates them
into one running sum per weight level; the small tables still cost O(k^2)
per point, but the big integers are touched O(1) times.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import ExactValueVector, PreparedGame

LEVELS = (-1, 0, 1)


def _empty(k: int, width: int) -> list[list[int]]:
    return [[0] * width for _ in range(k + 1)]


def _delta(k: int, width: int, off: int) -> list[list[int]]:
    tab = _empty(k, width)
    tab[0][off] = 1
    return tab


def _include(tab: list[list[int]], wi: int, k: int, off: int) -> None:
    """In place: tab(w, s) += tab(w - wi, s - 1) for s = k..1."""
    for s in range(k, 0, -1):
        row, prev = tab[s], tab[s - 1]
        for j in range(off - s + 1, off + s):
            c = prev[j]
            if c:
                row[j + wi] += c


def _exclude(tab: list[list[int]], wi: int, k: int, off: int) -> None:
    """Undo :func:`_include`: recover f_{i-1} from f_i in place, s ascending."""
    for s in range(1, k + 1):
        row, prev = tab[s], tab[s - 1]
        for j in range(off - s + 1, off + s):
            c = prev[j]
            if c:
                row[j + wi] -= c


def _include_signed(sig: dict[int, list[list[int]]], wi: int, pow2: int, k: int, off: int) -> None:
    for tab in sig.values():
        for t in range(k, 1, -1):
            row, prev = tab[t], tab[t - 1]
            for j in range(off - t + 1, off + t):
                c = prev[j]
                if c:
                    row[j + wi] += c
    # a new closest point alone decides the sign of the first member
    sig[wi][1][off + wi] += pow2


def _copy(tab):
    return [row[:] for row in tab]


@dataclass
class ForwardBackwardTables:
    """``f[i]`` for i = 0..n, ``b[i]`` and ``B[i]`` for i = 1..n+1 (index 0 unused)."""

    k: int
    offset: int
    f: list
    b: list
    B: list

    def fwd(self, i: int, w: int, s: int) -> int:
        return self.f[i][s][w + self.offset]

    def bwd(self, i: int, w: int, s: int) -> int:
        return self.b[i][s][w + self.offset]

    def bwd_cum(self, i: int, w: int, t: int) -> int:
        return self.B[i][t][w + self.offset]


@dataclass
class SignedBackwardTables:
    """``tables[u][i]`` is ``b_i^u`` for i = 1..n+1; ``plus``/``minus`` are u = +1/-1."""

    k: int
    offset: int
    tables: dict[int, list]

    def get(self, u: int, i: int, w: int, t: int) -> int:
        return self.tables[u][i][t][w + self.offset]

    def plus(self, i: int, w: int, t: int) -> int:
        return self.get(1, i, w, t)

    def minus(self, i: int, w: int, t: int) -> int:
        return self.get(-1, i, w, t)


def _check(game: PreparedGame) -> None:
    if not game.is_unweighted:
        raise ValueError("unweighted engine needs weights in {-1, 0, +1}")


def _cumulative(tab: list[list[int]]) -> list[list[int]]:
    out = [tab[0][:]]
    for row in tab[1:]:
        out.append([a + b for a, b in zip(out[-1], row)])
    return out


def build_shared_tables(game: PreparedGame) -> tuple[ForwardBackwardTables, SignedBackwardTables]:
    """Materialize every table for every rank. Meant for inspection on small games."""
    _check(game)
    n, k = game.n, game.k
    off = k + 1  # W = k + 1
    width = 2 * off + 1
    w = (0,) + game.signed_weights
    f = [_delta(k, width, off)]
    for i in range(1, n + 1):
        cur = _copy(f[-1])
        _include(cur, w[i], k, off)
        f.append(cur)
    b = [None] * (n + 2)
    b[n + 1] = _delta(k, width, off)
    for i in range(n, 0, -1):
        cur = _copy(b[i + 1])
        _include(cur, w[i], k, off)
        b[i] = cur
    B = [None] + [_cumulative(b[i]) for i in range(1, n + 2)]
    sig = {u: [None] * (n + 2) for u in LEVELS}
    state = {u: _delta(k, width, off) for u in LEVELS}  # (0, 0) entries are seeds only
    for u in LEVELS:
        sig[u][n + 1] = _copy(state[u])
    for i in range(n, 0, -1):
        _include_signed(state, w[i], 1 << (n - i), k, off)
        for u in LEVELS:
            sig[u][i] = _copy(state[u])
    return ForwardBackwardTables(k, off, f, b, B), SignedBackwardTables(k, off, sig)


def _head_count(f, b, wi: int, k: int, off: int) -> int:
    """Signed pivotal count over subsets smaller than k, from f_{i-1} and B_{i+1}.

    Adding ``wi`` must move the vote across zero, so the combined sum of the
    two halves must hit 0 (positive point) or 1 (negative point) exactly.
    """
    if not wi:
        return 0
    cum = _cumulative(b)
    target = 0 if wi > 0 else 1
    total = 0
    for s in range(k):
        row = f[s]
        brow = cum[k - 1 - s]
        for j in range(off - s, off + s + 1):
            c = row[j]
            if c:
                jj = target - (j - off) + off
                if 0 <= jj < len(brow):
                    total += c * brow[jj]
    return total if wi > 0 else -total


def _tail_count(f, tails, wi: int, k: int, off: int) -> int:
    """Signed pivotal count over subsets of size >= k, from f_{i-1} and b^u_{i+1}.

    ``tails`` maps the weight ``u`` of the displaced k-th member to the signed
    table consulted for it.
    """
    total = 0
    for u, src in tails.items():
        shift = u - wi
        if shift == 0:
            continue
        if shift < 0:
            lo, hi, sign = shift + 1, 0, 1
        else:
            lo, hi, sign = 1, shift, -1
        for t in range(1, k + 1):
            s = k - t
            row = f[s]
            trow = src[t]
            for jw in range(off - t, off + t + 1):
                big = trow[jw]
                if not big:
                    continue
                wp = jw - off
                coef = 0
                for x in range(lo, hi + 1):
                    j = x - wp + off
                    if off - s <= j <= off + s:
                        coef += row[j]
                if coef:
                    total += sign * coef * big
    return total


def _displacement_count(f, v: int, u: int, k: int, off: int) -> int:
    """Up-minus-down count of (k-1)-subsets T of the prefix, one weight-v point removed.

    With T as the top k-1 and a member of weight ``u`` as the k-th, inserting
    a point of weight ``v`` ahead of them changes the vote from ``sum(T) + u``
    to ``sum(T) + v``.
    """
    g = _copy(f)
    _exclude(g, v, k, off)
    row = g[k - 1]
    total = 0
    for j in range(off - k + 1, off + k):
        c = row[j]
        if not c:
            continue
        sigma = j - off
        if -v < sigma <= -u:
            total += c
        elif -u < sigma <= -v:
            total -= c
    return total


def _check_variant(negative_tail_table: str) -> None:
    if negative_tail_table not in ("plus", "minus"):
        raise ValueError("negative_tail_table must be 'plus' or 'minus'")


def banzhaf_dp_unweighted(
    game: PreparedGame, *, negative_tail_table: str = "plus", method: str = "aggregated"
) -> ExactValueVector:
    """Exact Banzhaf values for all points in one sweep over the ranks.

    ``method="aggregated"`` (default) folds the signed backward tables into
    one running sum per weight level, indexed by the rank ``j`` of the
    displaced member: for a fixed level of the inserted point the window
    count over ``f_{i-1}`` and ``b^u_{i+1}`` only depends on the ranks before
    ``j``, so each point costs O(1) big-integer operations instead of O(k^2).
    ``method="tabular"`` reads the signed tables entry by entry; it is the only
    path that honours ``negative_tail_table="minus"``.
    """
    _check(game)
    _check_variant(negative_tail_table)
    if method not in ("aggregated", "tabular"):
        raise ValueError("method must be 'aggregated' or 'tabular'")
    if method == "tabular" or negative_tail_table == "minus":
        return _tabular(game, negative_tail_table)
    n, k = game.n, game.k
    off = k + 1
    width = 2 * off + 1
    weights = game.signed_weights
    present = sorted(set(weights))
    f = _delta(k, width, off)
    for wi in weights:
        _include(f, wi, k, off)
    count = {v: 0 for v in present}  # weight levels among ranks 1..i
    for wi in weights:
        count[wi] += 1
    b = _delta(k, width, off)
    tail = {v: 0 for v in present}  # running tail sum for an inserted point of level v
    nums = [0] * n
    for r in range(n - 1, -1, -1):
        if r + 1 < n:
            # f holds f_i here; rank j = i + 1 becomes a possible displaced member
            u = weights[r + 1]
            bits = n - r - 2
            for v in present:
                if v != u and count[v]:
                    a = _displacement_count(f, v, u, k, off)
                    if a:
                        tail[v] += a << bits
        wi = weights[r]
        _exclude(f, wi, k, off)
        count[wi] -= 1
        nums[r] = _head_count(f, b, wi, k, off) + tail[wi]
        _include(b, wi, k, off)
    return ExactValueVector(tuple(game.scatter(nums)), n - 1)


def _tabular(game: PreparedGame, negative_tail_table: str) -> ExactValueVector:
    n, k = game.n, game.k
    off = k + 1
    width = 2 * off + 1
    weights = game.signed_weights
    present = sorted(set(weights))
    f = _delta(k, width, off)
    for wi in weights:
        _include(f, wi, k, off)
    b = _delta(k, width, off)
    sig = {u: _empty(k, width) for u in present}
    nums = [0] * n
    for r in range(n - 1, -1, -1):
        wi = weights[r]
        _exclude(f, wi, k, off)
        if negative_tail_table == "minus" and wi < 0:
            tails = {1: sig[-1] if -1 in sig else _empty(k, width)}
        else:
            tails = sig
        nums[r] = _head_count(f, b, wi, k, off) + _tail_count(f, tails, wi, k, off)
        _include(b, wi, k, off)
        _include_signed(sig, wi, 1 << (n - 1 - r), k, off)
    return ExactValueVector(tuple(game.scatter(nums)), n - 1)
