"""Column-oriented view over emitted CSV files, with filter predicates."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import (
    ColumnTypeError,
    EmptySelectionError,
    InvalidInputError,
    UnknownColumnError,
)

_FILTER_OPS = ("==", "!=", "<=", ">=", "<", ">")


@dataclass(frozen=True)
class FilterSpec:
    """``column op value`` row predicate. Order ops need a numeric column."""

    column: str
    op: str
    value: str

    def __post_init__(self):
        if self.op not in _FILTER_OPS:
            raise InvalidInputError(f"unsupported filter op {self.op!r}")


def parse_filter(expr: str) -> FilterSpec:
    """Parse ``col==value`` style expressions from the CLI and service."""
    for op in _FILTER_OPS:
        if op in expr:
            column, value = expr.split(op, 1)
            return FilterSpec(column.strip(), op, value.strip())
    raise InvalidInputError(f"cannot parse filter {expr!r}; expected <col><op><value>")


class Dataset:
    """Named columns of equal length; numeric when every value parses."""

    def __init__(self, columns: dict[str, list]):
        lengths = {len(v) for v in columns.values()}
        if len(lengths) > 1:
            raise InvalidInputError("columns must all have the same length")
        self.columns = columns
        self.n_rows = lengths.pop() if lengths else 0

    @classmethod
    def from_rows(cls, header: list[str], rows: Iterable[list[str]]) -> "Dataset":
        raw: dict[str, list[str]] = {name: [] for name in header}
        for row in rows:
            if len(row) != len(header):
                raise InvalidInputError(
                    f"row has {len(row)} fields, header has {len(header)}"
                )
            for name, value in zip(header, row):
                raw[name].append(value)
        columns: dict[str, list] = {}
        for name, values in raw.items():
            columns[name] = _coerce(values)
        return cls(columns)

    @classmethod
    def from_csv(cls, paths: Path | str | list) -> "Dataset":
        """Load one CSV, or concatenate several with identical headers."""
        if isinstance(paths, (str, Path)):
            paths = [paths]
        if not paths:
            raise InvalidInputError("no csv paths given")
        header: list[str] | None = None
        rows: list[list[str]] = []
        for path in paths:
            path = Path(path)
            with path.open(encoding="utf-8", newline="") as fh:
                reader = csv.reader(fh)
                try:
                    this_header = next(reader)
                except StopIteration:
                    raise InvalidInputError(f"{path}: empty csv") from None
                if header is None:
                    header = this_header
                elif this_header != header:
                    raise InvalidInputError(
                        f"{path}: header differs from first file"
                    )
                rows.extend(reader)
        return cls.from_rows(header, rows)

    @property
    def column_names(self) -> list[str]:
        return list(self.columns)

    def column(self, name: str) -> list:
        if name not in self.columns:
            raise UnknownColumnError(
                f"unknown column {name!r}; have {', '.join(self.columns)}"
            )
        return self.columns[name]

    def is_numeric(self, name: str) -> bool:
        values = self.column(name)
        return all(isinstance(v, float) for v in values)

    def numeric_column(self, name: str) -> list[float]:
        values = self.column(name)
        if not all(isinstance(v, float) for v in values):
            raise ColumnTypeError(f"column {name!r} is not numeric")
        return values

    def filtered(self, spec: FilterSpec | None) -> "Dataset":
        """Rows passing the predicate; raises when nothing survives."""
        if spec is None:
            return self
        values = self.column(spec.column)
        if self.is_numeric(spec.column):
            try:
                target = float(spec.value)
            except ValueError:
                raise ColumnTypeError(
                    f"filter value {spec.value!r} is not numeric but column "
                    f"{spec.column!r} is"
                ) from None
        else:
            if spec.op not in ("==", "!="):
                raise ColumnTypeError(
                    f"order comparison {spec.op!r} needs a numeric column"
                )
            target = spec.value
        keep = [i for i, v in enumerate(values) if _compare(v, spec.op, target)]
        if not keep:
            raise EmptySelectionError(
                f"filter {spec.column}{spec.op}{spec.value} selected zero rows"
            )
        return Dataset(
            {name: [col[i] for i in keep] for name, col in self.columns.items()}
        )


def _coerce(values: list[str]) -> list:
    try:
        return [float(v) for v in values]
    except ValueError:
        return list(values)


def _compare(value, op: str, target) -> bool:
    if op == "==":
        return value == target
    if op == "!=":
        return value != target
    if op == "<":
        return value < target
    if op == "<=":
        return value <= target
    if op == ">":
        return value > target
    return value >= target
