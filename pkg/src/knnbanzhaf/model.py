"""Domain types and game preparation shared by every valuation engine.

A valuation game is always relative to one test point: the training points
are sorted by distance to it, each point gets an integer weight magnitude,
and the sign of the weight says whether its label agrees with the test label.
Engines only ever see a :class:`PreparedGame`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class WeightScheme(str, enum.Enum):
    UNIFORM = "uniform"
    INVERSE_DISTANCE = "inverse-distance"
    RBF = "rbf"


class DistanceMetric(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    COSINE = "cosine"


@dataclass(frozen=True)
class LabeledPoint:
    id: int
    features: tuple[float, ...]
    label: int


@dataclass
class Dataset:
    """Feature matrix plus integer labels; point ids are row indices."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim == 1:
            self.features = self.features.reshape(-1, 1)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels"
            )
        if self.labels.size and self.labels.min() < 0:
            raise ValueError("labels must be non-negative integers")
        if self.num_classes is None:
            self.num_classes = max(2, int(self.labels.max()) + 1 if self.labels.size else 2)
        if self.num_classes < 2:
            raise ValueError("num_classes must be at least 2")
        if self.labels.size and self.labels.max() >= self.num_classes:
            raise ValueError("label outside [0, num_classes)")

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    def points(self) -> list[LabeledPoint]:
        return [
            LabeledPoint(i, tuple(float(x) for x in row), int(y))
            for i, (row, y) in enumerate(zip(self.features, self.labels))
        ]

    def subset(self, ids: Sequence[int]) -> "Dataset":
        ids = np.asarray(ids, dtype=np.int64)
        return Dataset(self.features[ids], self.labels[ids], self.num_classes)

    def with_labels(self, labels: np.ndarray) -> "Dataset":
        return Dataset(self.features.copy(), np.asarray(labels), self.num_classes)


@dataclass(frozen=True)
class GameSpec:
    """How a test point turns a dataset into a game.

    ``epsilon`` parameterizes the inverse-distance scheme and ``sigma`` the
    RBF scheme; both are ignored otherwise. Distance ties are always broken
    by ascending point id.
    """

    k: int = 5
    weight_scheme: WeightScheme = WeightScheme.UNIFORM
    distance_metric: DistanceMetric = DistanceMetric.EUCLIDEAN
    bits: int = 7
    epsilon: float = 1e-3
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "weight_scheme", WeightScheme(self.weight_scheme))
        object.__setattr__(self, "distance_metric", DistanceMetric(self.distance_metric))
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if self.epsilon <= 0 or self.sigma <= 0:
            raise ValueError("epsilon and sigma must be positive")

    @property
    def is_uniform(self) -> bool:
        return self.weight_scheme is WeightScheme.UNIFORM


@dataclass(frozen=True)
class PreparedGame:
    """A binary kNN game for one test point.

    ``order[r]`` is the id of the point at rank ``r`` (rank 0 is closest) and
    ``signed_weights[r]`` its signed integer weight. ``W`` bounds the sum of
    any top-k weight magnitudes.
    """

    order: tuple[int, ...]
    signed_weights: tuple[int, ...]
    k: int
    W: int
    test_label: int = 1

    @property
    def n(self) -> int:
        return len(self.order)

    @cached_property
    def rank_of(self) -> dict[int, int]:
        return {pid: r for r, pid in enumerate(self.order)}

    @property
    def is_unweighted(self) -> bool:
        return all(abs(w) <= 1 for w in self.signed_weights)

    def scatter(self, by_rank: Sequence) -> list:
        """Reorder a per-rank sequence into per-id order."""
        out = [None] * self.n
        for r, pid in enumerate(self.order):
            out[pid] = by_rank[r]
        return out


@dataclass(frozen=True)
class BinarySubgame:
    """One class-vs-class game of a multi-class decomposition.

    ``game`` carries the modified weights: points whose label is neither the
    test label nor ``negative_class`` have weight zero but keep their rank.
    """

    game: PreparedGame
    negative_class: int
    zero_mask: tuple[bool, ...]

    @property
    def base(self) -> PreparedGame:
        return self.game


@dataclass(frozen=True)
class ExactValueVector:
    """Exact values ``numerators[i] / (divisor * 2**denominator_log2)`` by point id."""

    numerators: tuple[int, ...]
    denominator_log2: int
    divisor: int = 1

    def __post_init__(self):
        object.__setattr__(self, "numerators", tuple(int(x) for x in self.numerators))
        if self.divisor < 1:
            raise ValueError("divisor must be positive")

    def __len__(self) -> int:
        return len(self.numerators)

    @property
    def denominator(self) -> int:
        return self.divisor << self.denominator_log2

    def fractions(self) -> list[Fraction]:
        den = self.denominator
        return [Fraction(x, den) for x in self.numerators]

    def to_float(self) -> np.ndarray:
        den = self.denominator
        # int / int true division is correctly rounded even for huge operands
        return np.array([x / den for x in self.numerators], dtype=float)

    def same_values(self, other: "ExactValueVector") -> bool:
        """Rational equality, independent of the chosen denominator."""
        if len(self) != len(other):
            return False
        a, b = self.denominator, other.denominator
        return all(x * b == y * a for x, y in zip(self.numerators, other.numerators))


def game_from_weights(
    signed_weights: Sequence[int],
    k: int,
    *,
    order: Sequence[int] | None = None,
    W: int | None = None,
    test_label: int = 1,
) -> PreparedGame:
    """Build a game directly from integer signed weights listed closest first."""
    weights = tuple(int(w) for w in signed_weights)
    if k < 1:
        raise ValueError("k must be a positive integer")
    if order is None:
        order = range(len(weights))
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(len(weights))):
        raise ValueError("order must be a permutation of 0..n-1")
    if W is None:
        W = top_k_bound([abs(w) for w in weights], k)
    if any(abs(w) > W for w in weights):
        raise ValueError("weight magnitude exceeds W")
    return PreparedGame(order, weights, k, int(W), test_label)


def top_k_bound(magnitudes: Iterable[int], k: int) -> int:
    return int(sum(sorted(magnitudes, reverse=True)[:k]))


def discretize_weights(raw: Sequence[float], bits: int) -> list[int]:
    """Map non-negative weights onto the integer levels ``0 .. 2**bits - 1``.

    Levels are equally spaced on ``[0, max(raw)]`` with halves rounded up, so
    the mapping is monotone and the largest weight always lands on the top
    level.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        raise ValueError("cannot discretize an empty weight vector")
    if not np.all(np.isfinite(raw)) or np.any(raw < 0):
        raise ValueError("weights must be finite and non-negative")
    top = raw.max()
    if top == 0:
        return [0] * raw.size
    levels = (1 << bits) - 1
    return [int(x) for x in np.floor(raw / top * levels + 0.5)]


def distances(features: np.ndarray, query: np.ndarray, metric: DistanceMetric) -> np.ndarray:
    metric = DistanceMetric(metric)
    features = np.asarray(features, dtype=float)
    query = np.asarray(query, dtype=float).reshape(-1)
    if metric is DistanceMetric.EUCLIDEAN:
        return np.sqrt(((features - query) ** 2).sum(axis=1))
    if metric is DistanceMetric.MANHATTAN:
        return np.abs(features - query).sum(axis=1)
    norms = np.linalg.norm(features, axis=1) * np.linalg.norm(query)
    dots = features @ query
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(norms > 0, dots / np.where(norms > 0, norms, 1.0), 0.0)
    return 1.0 - sim


def raw_weights(dist: np.ndarray, spec: GameSpec) -> np.ndarray:
    if spec.weight_scheme is WeightScheme.UNIFORM:
        return np.ones_like(dist)
    if spec.weight_scheme is WeightScheme.INVERSE_DISTANCE:
        return 1.0 / (dist + spec.epsilon)
    return np.exp(-(dist**2) / (2.0 * spec.sigma**2))


def _ranked(train: Dataset, test_features, spec: GameSpec):
    if train.n == 0:
        raise ValueError("training set is empty")
    query = np.asarray(test_features, dtype=float).reshape(-1)
    if query.shape[0] != train.d:
        raise ValueError(f"test point has {query.shape[0]} features, dataset has {train.d}")
    if np.isnan(query).any() or np.isnan(train.features).any():
        raise ValueError("NaN in features")
    dist = distances(train.features, query, spec.distance_metric)
    if np.isnan(dist).any():
        raise ValueError("NaN distance")
    order = np.lexsort((np.arange(train.n), dist))
    sorted_dist = dist[order]
    if spec.is_uniform:
        magnitudes = [1] * train.n
        W = spec.k + 1
    else:
        magnitudes = discretize_weights(raw_weights(sorted_dist, spec), spec.bits)
        W = top_k_bound(magnitudes, spec.k)
    return order, magnitudes, W


def prepare_game(train: Dataset, test_features, test_label: int, spec: GameSpec) -> PreparedGame:
    """Sort, weight and sign the training set for one binary test point."""
    if train.num_classes != 2:
        raise ValueError(
            f"dataset has {train.num_classes} classes; use decompose_multiclass"
        )
    order, magnitudes, W = _ranked(train, test_features, spec)
    labels = train.labels[order]
    signed = tuple(m if y == test_label else -m for m, y in zip(magnitudes, labels))
    return PreparedGame(tuple(int(i) for i in order), signed, spec.k, W, int(test_label))


def decompose_multiclass(
    train: Dataset, test_features, test_label: int, spec: GameSpec
) -> list[BinarySubgame]:
    """One binary game per wrong class; combine values with :func:`combine_subgames`."""
    if train.num_classes < 2:
        raise ValueError("need at least two classes")
    order, magnitudes, W = _ranked(train, test_features, spec)
    labels = train.labels[order]
    subgames = []
    for c in range(train.num_classes):
        if c == test_label:
            continue
        weights = []
        zero = []
        for m, y in zip(magnitudes, labels):
            if y == test_label:
                weights.append(m)
                zero.append(False)
            elif y == c:
                weights.append(-m)
                zero.append(False)
            else:
                weights.append(0)
                zero.append(True)
        game = PreparedGame(tuple(int(i) for i in order), tuple(weights), spec.k, W, int(test_label))
        subgames.append(BinarySubgame(game, c, tuple(zero)))
    return subgames


def combine_subgames(values: Sequence[ExactValueVector]) -> ExactValueVector:
    """Average per-subgame exact values, as licensed by Banzhaf linearity."""
    if not values:
        raise ValueError("no subgame values to combine")
    return _exact_mean(values)


def _exact_mean(values: Sequence[ExactValueVector]) -> ExactValueVector:
    n = len(values[0])
    if any(len(v) != n for v in values):
        raise ValueError("value vectors differ in length")
    log2 = max(v.denominator_log2 for v in values)
    div = math.lcm(*(v.divisor for v in values))
    total = [0] * n
    for v in values:
        scale = (div // v.divisor) << (log2 - v.denominator_log2)
        for j, x in enumerate(v.numerators):
            total[j] += x * scale
    count = len(values)
    # keep the rational reduced in the odd part of the divisor
    g = math.gcd(count * div, *total) if any(total) else count * div
    g = _odd_part(g) if g else 1
    return ExactValueVector(tuple(x // g for x in total), log2, count * div // g)


def _odd_part(x: int) -> int:
    x = abs(x)
    while x and x % 2 == 0:
        x //= 2
    return x or 1


def average_over_tests(per_test):
    """Elementwise mean of per-test value vectors.

    Exact vectors average exactly; anything else is treated as floats.
    """
    per_test = list(per_test)
    if not per_test:
        raise ValueError("no test points to average over")
    if all(isinstance(v, ExactValueVector) for v in per_test):
        return _exact_mean(per_test)
    arrays = [v.to_float() if isinstance(v, ExactValueVector) else np.asarray(v, dtype=float)
              for v in per_test]
    if len({a.shape for a in arrays}) != 1:
        raise ValueError("value vectors differ in length")
    return np.mean(np.stack(arrays), axis=0)


def evaluate_knn_accuracy(train_subset, train: Dataset, test: Dataset, spec: GameSpec) -> float:
    """Accuracy of the kNN classifier trained on ``train[train_subset]``.

    A test point counts as correct only when its label strictly wins the
    weighted vote over the ``min(|S|, k)`` nearest subset members; ties and
    the empty subset score zero.
    """
    ids = np.unique(np.asarray(list(train_subset), dtype=np.int64))
    if test.n == 0:
        raise ValueError("empty test set")
    if ids.size == 0:
        return 0.0
    feats = train.features[ids]
    labels = train.labels[ids]
    k = min(spec.k, ids.size)
    correct = 0
    for x, y in zip(test.features, test.labels):
        dist = distances(feats, x, spec.distance_metric)
        top = np.lexsort((ids, dist))[:k]
        w = raw_weights(dist[top], spec)
        votes = np.bincount(labels[top], weights=w, minlength=train.num_classes)
        mine = votes[y]
        votes[y] = -np.inf
        correct += bool(mine > votes.max())
    return correct / test.n
