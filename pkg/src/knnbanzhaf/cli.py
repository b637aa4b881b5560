"""Command-line entry point: ``knnbanzhaf <command> [options]``.

Failures exit nonzero and print one JSON object ``{"error": category,
"message": ...}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import apps
from .dataio import DataError, ValuationReport, read_config_file, write_curve_csv
from .oracle import EnumerationCapError
from .runner import (
    Algo,
    ConfigError,
    RunConfig,
    load_split,
    run_bench,
    run_value,
    value_dataset,
    write_bench_csv,
)

EXIT_CODES = {"usage": 2, "config": 2, "data": 3, "cap": 4, "engine": 5, "io": 6}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, data: bool = True) -> None:
    if data:
        p.add_argument("data", nargs="?", help="training CSV with a 'label' column")
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--algo", choices=[a.value for a in Algo])
    p.add_argument("--k", type=int)
    p.add_argument("--bits", type=int)
    p.add_argument("--weights", choices=["uniform", "inverse-distance", "rbf"])
    p.add_argument("--metric", choices=["euclidean", "manhattan", "cosine"])
    p.add_argument("--epsilon", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--test-file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int)
    p.add_argument("--budget-secs", type=float)
    p.add_argument("--cap-override", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="knnbanzhaf", description="Banzhaf data values for kNN classifiers.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _common(sub.add_parser("value", help="exact or sampled values with the chosen engine"))
    _common(sub.add_parser("oracle", help="brute-force values (small n only)"))
    mc = sub.add_parser("mc", help="Monte Carlo estimates")
    _common(mc)
    mc.add_argument("--method", choices=["coalition", "permutation"], default="coalition")

    bench = sub.add_parser("bench", help="time an engine on synthetic 32-dimensional data")
    _common(bench, data=False)
    bench.add_argument("--sizes", default="1000,10000,100000", help="comma-separated ascending n")
    bench.add_argument("--dim", type=int, default=32)
    bench.add_argument("--repeats", type=int, default=1, help="report the fastest of this many runs per size")

    for name, text in [
        ("remove", "accuracy as the highest-valued points are removed"),
        ("select", "accuracy as the highest-valued points are added to a random warm-up set"),
        ("mislabel", "inject label noise and score its detection by low values"),
        ("flip", "inject label noise, then flip the lowest-valued labels"),
    ]:
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--steps", type=int, help="curve length (default: n for remove/flip)")
        p.add_argument("--stride", type=int, default=1)
        if name == "select":
            p.add_argument("--warmup", type=int, default=10)
        if name in ("mislabel", "flip"):
            p.add_argument("--noise-rate", type=float, default=0.05)
    return parser


_CONFIG_KEYS = (
    "algo k bits weights metric epsilon sigma samples seed test_fraction test_file "
    "out threads budget_secs cap_override"
).split()


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config:
        values.update(read_config_file(args.config))
    if getattr(args, "data", None):
        values["data"] = args.data
    for key in _CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if args.command == "oracle":
        values["algo"] = Algo.BRUTEFORCE.value
    elif args.command == "mc":
        values["algo"] = f"mc-{args.method}"
    return RunConfig.from_mapping(values)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _value_command(config: RunConfig) -> None:
    report = run_value(config)
    summary = {
        "algo": config.algo.value,
        "n_train": report.extra["n_train"],
        "n_test": report.extra["n_test"],
        "values": report.values if len(report.values) <= 50 else f"{len(report.values)} values",
    }
    if config.out:
        summary["out"] = str(Path(config.out) / "report.json")
    _emit(summary)


def _bench_command(config: RunConfig, args) -> None:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse --sizes {args.sizes!r}") from None
    rows, slope = run_bench(config, sizes, args.dim, args.repeats)
    print("n,seconds,status")
    for r in rows:
        print(f"{r.n},{'' if r.seconds is None else f'{r.seconds:.6f}'},{r.status}")
    print(f"slope,{'' if slope is None else f'{slope:.4f}'}")
    if config.out:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        write_bench_csv(out / "bench.csv", rows)
        (out / "bench.json").write_text(
            json.dumps({"config": config.echo(), "sizes": sizes, "repeats": args.repeats, "slope": slope,
                        "rows": [r.__dict__ for r in rows]}, indent=2, sort_keys=True) + "\n"
        )


def _curve_command(config: RunConfig, args) -> None:
    train, test = load_split(config)
    spec = config.spec
    mask = None
    if args.command in ("mislabel", "flip"):
        train, mask = apps.inject_label_noise(train, args.noise_rate, config.seed)
    values = value_dataset(train, test, config)
    floats = apps.as_float_values(values)
    result: dict = {"config": config.echo(), "n_train": train.n, "n_test": test.n}
    curve = None
    steps = args.steps
    algo = config.algo.value
    if args.command == "remove":
        curve = apps.point_removal_curve(train, test, floats, spec, train.n if steps is None else steps,
                                         stride=args.stride, algorithm=algo)
    elif args.command == "select":
        steps = train.n - args.warmup if steps is None else steps
        curve = apps.data_selection_curve(train, test, floats, spec, args.warmup, steps, config.seed,
                                          stride=args.stride, algorithm=algo)
    elif args.command == "mislabel":
        result["detection"] = apps.mislabel_detection_scores(floats, mask, args.noise_rate)
        result["flipped_ids"] = sorted(mask.flipped_ids)
    else:
        curve = apps.label_flip_repair_curve(train, test, floats, spec, train.n if steps is None else steps,
                                             stride=args.stride, algorithm=algo)
        result["flipped_ids"] = sorted(mask.flipped_ids)
    if curve is not None:
        result["curve"] = {"x": curve.x, "y": curve.y, "metadata": curve.metadata, "area": curve.area()}
    if config.out:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        ValuationReport(list(map(float, floats)), config.echo()).write(out)
        (out / f"{args.command}.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
        if curve is not None:
            write_curve_csv(out / f"{args.command}_curve.csv", curve)
    if curve is not None and len(curve.x) > 50:
        result["curve"]["x"] = f"{len(curve.x)} steps"
        result["curve"]["y"] = f"first {np.round(curve.y[:5], 4).tolist()} ... last {round(curve.y[-1], 4)}"
    _emit(result)


def _category(exc: BaseException) -> str:
    if isinstance(exc, UsageError):
        return "usage"
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, EnumerationCapError):
        return "cap"
    if isinstance(exc, DataError):
        return "data"
    if isinstance(exc, OSError):
        return "io"
    return "engine"


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = config_from_args(args)
        if args.command in ("value", "oracle", "mc"):
            _value_command(config)
        elif args.command == "bench":
            _bench_command(config, args)
        else:
            _curve_command(config, args)
    except Exception as exc:
        category = _category(exc)
        print(json.dumps({"error": category, "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES[category]
    return 0


if __name__ == "__main__":
    sys.exit(main())
