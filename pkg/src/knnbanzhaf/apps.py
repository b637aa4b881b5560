"""Downstream experiments driven by a value vector.

Every curve is scored with an unweighted kNN classifier, whatever weight
scheme produced the values. Rankings break value ties by ascending id.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.metrics import roc_auc_score

from .model import Dataset, ExactValueVector, GameSpec, WeightScheme, distances


@dataclass
class Curve:
    x: list
    y: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("curve x and y differ in length")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ValueError("curve x must be strictly increasing")

    def area(self) -> float:
        """Trapezoidal area under the curve."""
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.size < 2:
            return 0.0
        return float(((y[1:] + y[:-1]) / 2 * np.diff(x)).sum())


@dataclass(frozen=True)
class NoiseMask:
    flipped_ids: frozenset
    rate: float = 0.05
    seed: int = 0


def as_float_values(values) -> np.ndarray:
    if isinstance(values, ExactValueVector):
        return values.to_float()
    if hasattr(values, "values") and not isinstance(values, np.ndarray):
        return np.asarray(values.values, dtype=float)
    return np.asarray(values, dtype=float)


def descending_order(values) -> np.ndarray:
    """Ids from highest to lowest value, ties by ascending id."""
    v = as_float_values(values)
    return np.lexsort((np.arange(v.size), -v))


def ascending_order(values) -> np.ndarray:
    """Ids from lowest to highest value, ties by ascending id."""
    v = as_float_values(values)
    return np.lexsort((np.arange(v.size), v))


class AccuracyEvaluator:
    """Unweighted kNN accuracy on a fixed test set for many training subsets.

    Neighbour orders are computed once per test point, so each evaluation
    only scans a boolean mask.
    """

    def __init__(self, train: Dataset, test: Dataset, spec: GameSpec):
        if test.n == 0:
            raise ValueError("empty test set")
        self.k = spec.k
        self.num_classes = max(train.num_classes, test.num_classes)
        self.test_labels = test.labels
        ids = np.arange(train.n)
        self.order = np.stack(
            [np.lexsort((ids, distances(train.features, x, spec.distance_metric))) for x in test.features]
        )
        self.labels = train.labels

    def accuracy(self, mask: np.ndarray, labels: np.ndarray | None = None) -> float:
        """Share of test points whose label strictly wins the vote of ``train[mask]``."""
        labels = self.labels if labels is None else np.asarray(labels)
        present = np.asarray(mask, dtype=bool)[self.order]
        chosen = present & (np.cumsum(present, axis=1) <= self.k)
        votes = np.stack(
            [(chosen & (labels[self.order] == c)).sum(axis=1) for c in range(self.num_classes)],
            axis=1,
        )
        rows = np.arange(votes.shape[0])
        mine = votes[rows, self.test_labels].copy()
        votes[rows, self.test_labels] = -1
        return float(np.mean(mine > votes.max(axis=1)))


def _unweighted(spec: GameSpec) -> GameSpec:
    return replace(spec, weight_scheme=WeightScheme.UNIFORM)


def _meta(spec: GameSpec, **extra) -> dict:
    return {"k": spec.k, **extra}


def _check_length(values, n: int) -> np.ndarray:
    v = as_float_values(values)
    if v.size != n:
        raise ValueError(f"{v.size} values for {n} training points")
    return v


def point_removal_curve(train, test, values, spec, steps: int, *, stride: int = 1, algorithm="") -> Curve:
    """Accuracy after removing the t highest-valued points, t = 0, stride, ..., steps."""
    v = _check_length(values, train.n)
    if not 0 <= steps <= train.n:
        raise ValueError(f"steps={steps} outside 0..{train.n}")
    ev = AccuracyEvaluator(train, test, _unweighted(spec))
    order = descending_order(v)
    xs = _grid(steps, stride)
    ys = []
    for t in xs:
        mask = np.ones(train.n, dtype=bool)
        mask[order[:t]] = False
        ys.append(ev.accuracy(mask))
    return Curve(xs, ys, _meta(spec, algorithm=algorithm, experiment="removal"))


def data_selection_curve(
    train, test, values, spec, warmup: int, steps: int, seed: int = 0, *, stride: int = 1, algorithm=""
) -> Curve:
    """Accuracy of a random warm-up set plus the t highest-valued remaining points."""
    v = _check_length(values, train.n)
    if warmup < 1:
        raise ValueError("warmup must be at least 1")
    if steps < 0 or warmup + steps > train.n:
        raise ValueError(f"warmup + steps = {warmup + steps} exceeds n = {train.n}")
    rng = np.random.default_rng(seed)
    start = rng.choice(train.n, size=warmup, replace=False)
    order = descending_order(v)
    rest = order[~np.isin(order, start)]
    ev = AccuracyEvaluator(train, test, _unweighted(spec))
    xs = _grid(steps, stride)
    ys = []
    for t in xs:
        mask = np.zeros(train.n, dtype=bool)
        mask[start] = True
        mask[rest[:t]] = True
        ys.append(ev.accuracy(mask))
    return Curve(xs, ys, _meta(spec, algorithm=algorithm, experiment="selection", seed=seed))


def _grid(steps: int, stride: int) -> list[int]:
    if stride < 1:
        raise ValueError("stride must be positive")
    xs = list(range(0, steps + 1, stride))
    if xs[-1] != steps:
        xs.append(steps)
    return xs


def noise_count(rate: float, n: int) -> int:
    return int(np.floor(rate * n + 0.5))


def inject_label_noise(train: Dataset, rate: float, seed: int) -> tuple[Dataset, NoiseMask]:
    """Give ``round(rate * n)`` random points a uniformly random different label."""
    if not 0 < rate < 1:
        raise ValueError("rate must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    count = noise_count(rate, train.n)
    ids = np.sort(rng.choice(train.n, size=count, replace=False))
    labels = train.labels.copy()
    c = train.num_classes
    for i in ids:
        # shifting by 1..c-1 picks each other class with equal probability
        labels[i] = (labels[i] + rng.integers(1, c)) % c
    return train.with_labels(labels), NoiseMask(frozenset(int(i) for i in ids), rate, seed)


def mislabel_detection_scores(values, mask, rate: float) -> dict:
    """Precision, recall, F1 and AUC-ROC of flagging the lowest-valued points."""
    v = as_float_values(values)
    n = v.size
    flipped = mask.flipped_ids if isinstance(mask, NoiseMask) else frozenset(int(i) for i in mask)
    predicted = set(int(i) for i in ascending_order(v)[: noise_count(rate, n)])
    hit = len(predicted & flipped)
    precision = hit / len(predicted) if predicted else 0.0
    recall = hit / len(flipped) if flipped else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    truth = np.zeros(n, dtype=int)
    truth[list(flipped)] = 1
    if 0 < truth.sum() < n:
        auc = float(roc_auc_score(truth, -v))
    else:
        auc = float("nan")
    return {"precision": precision, "recall": recall, "f1": f1, "auc_roc": auc}


def label_flip_repair_curve(train_corrupted, test, values, spec, steps: int, *, stride: int = 1, algorithm="") -> Curve:
    """Accuracy after flipping the labels of the t lowest-valued points (binary only)."""
    if train_corrupted.num_classes != 2:
        raise ValueError("label flipping needs a binary dataset")
    v = _check_length(values, train_corrupted.n)
    if not 0 <= steps <= train_corrupted.n:
        raise ValueError(f"steps={steps} outside 0..{train_corrupted.n}")
    ev = AccuracyEvaluator(train_corrupted, test, _unweighted(spec))
    order = ascending_order(v)
    full = np.ones(train_corrupted.n, dtype=bool)
    xs = _grid(steps, stride)
    ys = []
    for t in xs:
        labels = train_corrupted.labels.copy()
        labels[order[:t]] = 1 - labels[order[:t]]
        ys.append(ev.accuracy(full, labels))
    return Curve(xs, ys, _meta(spec, algorithm=algorithm, experiment="repair"))


def two_gaussians(n: int, d: int = 2, separation: float = 2.0, seed: int = 0) -> Dataset:
    """Balanced binary data: class c is a unit Gaussian centred at ``c * separation / sqrt(d)`` per axis."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    rng.shuffle(labels)
    centres = labels[:, None] * (separation / np.sqrt(d))
    return Dataset(rng.standard_normal((n, d)) + centres, labels, 2)
