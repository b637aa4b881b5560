"""Run configuration, dataset-level valuation and the runtime benchmark."""

from __future__ import annotations

import enum
import math
import multiprocessing as mp
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .dataio import DataError, ValuationReport, load_csv_dataset
from .dp_efficient import banzhaf_dp_efficient
from .dp_standard import banzhaf_dp_standard
from .dp_unweighted import banzhaf_dp_unweighted
from .model import (
    Dataset,
    DistanceMetric,
    ExactValueVector,
    GameSpec,
    WeightScheme,
    average_over_tests,
    combine_subgames,
    decompose_multiclass,
    prepare_game,
)
from .montecarlo import banzhaf_mc_coalition, banzhaf_mc_permutation
from .oracle import (
    DEFAULT_CAP,
    EnumerationCapError,
    banzhaf_bruteforce_multiclass,
    banzhaf_exact_bruteforce,
)


class Algo(str, enum.Enum):
    BRUTEFORCE = "bruteforce"
    STANDARD = "standard"
    EFFICIENT = "efficient"
    UNWEIGHTED = "unweighted"
    MC_COALITION = "mc-coalition"
    MC_PERMUTATION = "mc-permutation"

    @property
    def is_exact(self) -> bool:
        return self not in (Algo.MC_COALITION, Algo.MC_PERMUTATION)


class ConfigError(ValueError):
    """Inconsistent or invalid run configuration."""


@dataclass
class RunConfig:
    """Everything that determines a run's output. ``algo=None`` picks a default."""

    data: str | None = None
    algo: Algo | None = None
    k: int = 5
    bits: int = 7
    weights: WeightScheme = WeightScheme.UNIFORM
    metric: DistanceMetric = DistanceMetric.EUCLIDEAN
    epsilon: float = 1e-3
    sigma: float = 1.0
    samples: int = 1000
    seed: int = 0
    test_fraction: float = 0.1
    test_file: str | None = None
    out: str | None = None
    threads: int | None = None
    budget_secs: float = 600.0
    cap_override: int | None = None

    def __post_init__(self):
        try:
            self.weights = WeightScheme(self.weights)
            self.metric = DistanceMetric(self.metric)
            if self.algo is not None:
                self.algo = Algo(self.algo)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.algo is None:
            self.algo = Algo.UNWEIGHTED if self.weights is WeightScheme.UNIFORM else Algo.EFFICIENT
        if self.algo is Algo.UNWEIGHTED and self.weights is not WeightScheme.UNIFORM:
            raise ConfigError("the unweighted engine requires --weights uniform")
        if self.k < 1:
            raise ConfigError("k must be positive")
        if self.bits < 1:
            raise ConfigError("bits must be positive")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.test_file is None and not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must lie strictly between 0 and 1")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.budget_secs <= 0:
            raise ConfigError("budget_secs must be positive")

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        """Build from string or typed values keyed by field name; unknown keys are errors."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key '{key}'")
            kwargs[key] = _coerce(key, raw)
        return cls(**kwargs)

    @property
    def spec(self) -> GameSpec:
        return GameSpec(self.k, self.weights, self.metric, self.bits, self.epsilon, self.sigma)

    def echo(self) -> dict:
        out = asdict(self)
        for key, value in out.items():
            if isinstance(value, enum.Enum):
                out[key] = value.value
        return out


_INT_KEYS = {"k", "bits", "samples", "seed", "threads", "cap_override"}
_FLOAT_KEYS = {"epsilon", "sigma", "test_fraction", "budget_secs"}


def _coerce(key: str, raw):
    if not isinstance(raw, str):
        return raw
    if raw.lower() in ("", "none"):
        return None
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"config key '{key}': cannot parse {raw!r}") from None
    return raw


def split_dataset(data: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded random split; both halves keep the full class count."""
    if data.n < 2:
        raise DataError("need at least two rows to split into train and test")
    n_test = min(max(int(round(test_fraction * data.n)), 1), data.n - 1)
    perm = np.random.default_rng(seed).permutation(data.n)
    return data.subset(np.sort(perm[n_test:])), data.subset(np.sort(perm[:n_test]))


def load_split(config: RunConfig) -> tuple[Dataset, Dataset]:
    if config.data is None:
        raise ConfigError("no dataset given")
    data = load_csv_dataset(config.data)
    if config.test_file is not None:
        test = load_csv_dataset(config.test_file)
        if test.d != data.d:
            raise DataError(f"test file has {test.d} features, training file has {data.d}")
        classes = max(data.num_classes, test.num_classes)
        return Dataset(data.features, data.labels, classes), Dataset(test.features, test.labels, classes)
    return split_dataset(data, config.test_fraction, config.seed)


def _exact_engine(algo: Algo, cap: int | None):
    if algo is Algo.BRUTEFORCE:
        return lambda game: banzhaf_exact_bruteforce(game, cap)
    if algo is Algo.STANDARD:
        return banzhaf_dp_standard
    if algo is Algo.EFFICIENT:
        return banzhaf_dp_efficient
    return banzhaf_dp_unweighted


def value_one_test(train: Dataset, x, y: int, config: RunConfig, test_index: int = 0):
    """Values of every training point for one test point.

    Exact engines return an :class:`ExactValueVector`; sampling engines a float
    array. Multi-class data is split into one game per wrong class.
    """
    spec = config.spec
    cap = config.cap_override if config.cap_override is not None else DEFAULT_CAP
    if config.algo is Algo.BRUTEFORCE and train.num_classes > 2:
        return banzhaf_bruteforce_multiclass(decompose_multiclass(train, x, y, spec), cap)
    if train.num_classes == 2:
        games = [prepare_game(train, x, y, spec)]
    else:
        games = [sub.game for sub in decompose_multiclass(train, x, y, spec)]
    if config.algo.is_exact:
        engine = _exact_engine(config.algo, cap)
        parts = [engine(g) for g in games]
        return parts[0] if len(parts) == 1 else combine_subgames(parts)
    mc = banzhaf_mc_coalition if config.algo is Algo.MC_COALITION else banzhaf_mc_permutation
    # distinct generator keys per test point and subgame
    parts = [
        mc(g, config.samples, (config.seed + 1_000_003 * test_index + 7919 * j) % (1 << 64)).values
        for j, g in enumerate(games)
    ]
    return np.mean(parts, axis=0)


def _task(args):
    train, x, y, config, index = args
    return value_one_test(train, x, y, config, index)


def value_dataset(train: Dataset, test: Dataset, config: RunConfig):
    """Values averaged over all test points, in test order for any thread count."""
    if test.n == 0:
        raise DataError("empty test set")
    if config.algo is Algo.BRUTEFORCE:
        cap = config.cap_override if config.cap_override is not None else DEFAULT_CAP
        if train.n > cap:
            raise EnumerationCapError(
                f"brute force over n={train.n} points exceeds the cap of {cap}; use --cap-override"
            )
    tasks = [(train, x, int(y), config, j) for j, (x, y) in enumerate(zip(test.features, test.labels))]
    threads = config.threads or os.cpu_count() or 1
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(tasks))) as pool:
            per_test = list(pool.map(_task, tasks))
    else:
        per_test = [_task(t) for t in tasks]
    return average_over_tests(per_test)


def run_value(config: RunConfig, train: Dataset | None = None, test: Dataset | None = None) -> ValuationReport:
    """Load, value, and (if ``config.out`` is set) write a report."""
    t0 = time.perf_counter()
    if train is None or test is None:
        train, test = load_split(config)
    t1 = time.perf_counter()
    result = value_dataset(train, test, config)
    t2 = time.perf_counter()
    exact = result if isinstance(result, ExactValueVector) else None
    values = exact.to_float() if exact is not None else np.asarray(result, dtype=float)
    report = ValuationReport(
        [float(v) for v in values],
        config.echo(),
        {"load_seconds": t1 - t0, "value_seconds": t2 - t1},
        exact,
        {"n_train": train.n, "n_test": test.n, "num_classes": train.num_classes},
    )
    if config.out:
        report.write(config.out)
    return report


@dataclass
class BenchRow:
    n: int
    seconds: float | None
    status: str


def synthetic_gaussian(n: int, d: int = 32, seed: int = 0) -> tuple[Dataset, np.ndarray, int]:
    """Two-class Gaussian data in ``d`` dimensions plus one random test point."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n)
    feats = rng.standard_normal((n, d)) + labels[:, None] * (1.0 / np.sqrt(d))
    test_label = int(rng.integers(0, 2))
    test_x = rng.standard_normal(d) + test_label * (1.0 / np.sqrt(d))
    return Dataset(feats, labels, 2), test_x, test_label


def time_once(config: RunConfig, n: int, d: int = 32, repeats: int = 1) -> float:
    """Wall time of game preparation plus one engine call on synthetic data.

    With ``repeats > 1`` the fastest of that many runs is returned.
    """
    train, x, y = synthetic_gaussian(n, d, config.seed)
    engine_cfg = RunConfig(**{**asdict(config), "data": None, "out": None, "threads": 1})
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        value_one_test(train, x, y, engine_cfg)
        best = min(best, time.perf_counter() - start)
    return best


def _bench_child(conn, config, n, d, repeats):
    try:
        conn.send(("ok", time_once(config, n, d, repeats)))
    except Exception as exc:  # reported to the parent as a failed row
        conn.send(("error", f"{type(exc).__name__}: {exc}"))
    finally:
        conn.close()


def run_bench(config: RunConfig, sizes, d: int = 32, repeats: int = 1) -> tuple[list[BenchRow], float | None]:
    """Time the configured engine at each size, single-threaded, in a child process.

    Each row is the fastest of ``repeats`` runs. A size whose runs together
    exceed ``config.budget_secs`` is killed and marked ``timed-out``; larger
    sizes are then skipped. Returns the rows and the log-log slope fitted
    over the completed ones.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes) or not sizes or sizes[0] < 1:
        raise ConfigError("sizes must be positive and ascending")
    if repeats < 1:
        raise ConfigError("repeats must be positive")
    rows: list[BenchRow] = []
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
    stop = False
    for n in sizes:
        if stop:
            rows.append(BenchRow(n, None, "skipped"))
            continue
        parent, child = ctx.Pipe(duplex=False)
        proc = ctx.Process(target=_bench_child, args=(child, config, n, d, repeats))
        proc.start()
        child.close()
        if parent.poll(config.budget_secs):
            status, payload = parent.recv()
            proc.join()
            if status == "ok":
                rows.append(BenchRow(n, payload, "ok"))
            else:
                rows.append(BenchRow(n, None, payload))
        else:
            proc.kill()
            proc.join()
            rows.append(BenchRow(n, None, "timed-out"))
            stop = True
        parent.close()
    return rows, loglog_slope(rows)


def loglog_slope(rows) -> float | None:
    done = [(r.n, r.seconds) for r in rows if r.status == "ok" and r.seconds and r.seconds > 0]
    if len(done) < 2:
        return None
    n, t = np.log(np.array(done, dtype=float)).T
    return float(np.polyfit(n, t, 1)[0])


def write_bench_csv(path, rows) -> None:
    lines = ["n,seconds,status"]
    for r in rows:
        lines.append(f"{r.n},{'' if r.seconds is None else repr(r.seconds)},{r.status}")
    Path(path).write_text("\n".join(lines) + "\n")
