"""Dataset ingestion, config files and report serialization."""

from __future__ import annotations

import contextlib
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Dataset, ExactValueVector


class DataError(ValueError):
    """Malformed input data."""


def load_csv_dataset(path, label_column: str = "label", num_classes: int | None = None) -> Dataset:
    """Read a header-first CSV; every column except ``label_column`` is a feature.

    Point ids follow row order. Errors name the 1-based data row and the column.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_column not in header:
            raise DataError(f"{path}: missing '{label_column}' column")
        li = header.index(label_column)
        feats, labels = [], []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {row_no} has {len(row)} cells, header has {len(header)}")
            values = []
            for col, cell in zip(header, row):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataError(f"{path}: row {row_no}, column '{col}': non-numeric value {cell!r}") from None
            label = values.pop(li)
            if label != int(label) or label < 0:
                raise DataError(f"{path}: row {row_no}, column '{label_column}': labels must be non-negative integers")
            feats.append(values)
            labels.append(int(label))
    if not labels:
        raise DataError(f"{path}: no data rows")
    d = len(header) - 1
    return Dataset(np.array(feats, dtype=float).reshape(len(labels), d), np.array(labels), num_classes)


def write_csv_dataset(path, data: Dataset, label_column: str = "label") -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j}" for j in range(data.d)] + [label_column])
        for row, y in zip(data.features, data.labels):
            w.writerow([repr(float(x)) for x in row] + [int(y)])


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment. Keys use flag spelling."""
    out = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}: line {line_no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


@contextlib.contextmanager
def unlimited_int_digits():
    """Lift the interpreter's cap on int <-> str conversion length, if it has one."""
    getter = getattr(sys, "get_int_max_str_digits", None)
    if getter is None:
        yield
        return
    old = getter()
    sys.set_int_max_str_digits(0)
    try:
        yield
    finally:
        sys.set_int_max_str_digits(old)


@dataclass
class ValuationReport:
    """Values by point id plus everything needed to rerun the computation."""

    values: list[float]
    config: dict
    timings: dict = field(default_factory=dict)
    exact: ExactValueVector | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"config": self.config, "values": [float(v) for v in self.values]}
        if self.exact is not None:
            with unlimited_int_digits():
                out["exact"] = {
                    "denominator_log2": self.exact.denominator_log2,
                    "divisor": str(self.exact.divisor),
                    "numerators": [str(x) for x in self.exact.numerators],
                }
        if self.extra:
            out["extra"] = self.extra
        out["timings"] = self.timings
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ValuationReport":
        exact = None
        if "exact" in data:
            e = data["exact"]
            with unlimited_int_digits():
                exact = ExactValueVector(
                    tuple(int(x) for x in e["numerators"]), int(e["denominator_log2"]), int(e["divisor"])
                )
        return cls(list(data["values"]), data["config"], data.get("timings", {}), exact, data.get("extra", {}))

    @classmethod
    def from_json(cls, text: str) -> "ValuationReport":
        return cls.from_dict(json.loads(text))

    def write(self, out_dir) -> dict[str, Path]:
        """Write ``report.json`` and ``values.csv`` into ``out_dir``."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {"report": out_dir / "report.json", "values": out_dir / "values.csv"}
        paths["report"].write_text(self.to_json() + "\n")
        write_values_csv(paths["values"], self.values, self.exact)
        return paths


def write_values_csv(path, values, exact: ExactValueVector | None = None) -> None:
    with Path(path).open("w", newline="") as fh, unlimited_int_digits():
        w = csv.writer(fh)
        if exact is None:
            w.writerow(["id", "value"])
            for i, v in enumerate(values):
                w.writerow([i, repr(float(v))])
        else:
            w.writerow(["id", "value", "numerator", "denominator"])
            den = str(exact.denominator)
            for i, (v, num) in enumerate(zip(values, exact.numerators)):
                w.writerow([i, repr(float(v)), str(num), den])


def write_curve_csv(path, curve) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "accuracy"])
        for x, y in zip(curve.x, curve.y):
            w.writerow([x, repr(float(y))])


def load_report(path) -> ValuationReport:
    return ValuationReport.from_json(Path(path).read_text())
