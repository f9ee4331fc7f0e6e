"""Loading binary transaction tables from CSV and generating synthetic ones."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np


class DatasetError(ValueError):
    """Raised when a dataset file cannot be turned into a BinaryMatrix."""


@dataclass(frozen=True, eq=False)
class BinaryMatrix:
    """Immutable rows x items presence table.

    ``cells[r, i]`` is True when row ``r`` contains item ``i``. Item ids are
    column positions and never change for a given matrix.
    """

    items: tuple[str, ...]
    cells: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=bool, copy=True)
        if cells.ndim != 2:
            raise DatasetError("cells must be a 2-d array")
        if cells.shape[0] < 1:
            raise DatasetError("dataset has no rows")
        if cells.shape[1] != len(self.items):
            raise DatasetError(
                f"{len(self.items)} item names for {cells.shape[1]} columns"
            )
        if len(set(self.items)) != len(self.items):
            raise DatasetError("item names must be unique")
        cells.flags.writeable = False
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "cells", cells)

    @property
    def n_rows(self) -> int:
        return self.cells.shape[0]

    @property
    def n_items(self) -> int:
        return self.cells.shape[1]

    @cached_property
    def column_bits(self) -> tuple[int, ...]:
        """One Python int per item; bit ``r`` is set when row ``r`` holds it."""
        # little-endian bit order so that bit r of the int is row r
        packed = np.packbits(self.cells.T, axis=1, bitorder="little")
        return tuple(int.from_bytes(col.tobytes(), "little") for col in packed)

    @cached_property
    def all_rows_bits(self) -> int:
        return (1 << self.n_rows) - 1

    def item_index(self, name: str) -> int:
        try:
            return self.items.index(name)
        except ValueError:
            raise KeyError(f"unknown item {name!r}") from None

    def __eq__(self, other):
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return self.items == other.items and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.items, self.cells.tobytes()))

    def __repr__(self):
        return f"BinaryMatrix(rows={self.n_rows}, items={self.n_items})"


@dataclass(frozen=True)
class SyntheticSpec:
    rows: int
    items: int
    planted_pairs: Sequence[tuple[int, int, float]] = field(default_factory=tuple)
    background_density: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.items < 1:
            raise ValueError("rows and items must be positive")
        if not 0.0 <= self.background_density <= 1.0:
            raise ValueError("background_density must lie in [0, 1]")
        for a, c, p in self.planted_pairs:
            if a == c or not (0 <= a < self.items and 0 <= c < self.items):
                raise ValueError(f"invalid planted pair ({a}, {c})")
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"planted probability {p} outside [0, 1]")


def _read_rows(path, delimiter=","):
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh, delimiter=delimiter)]
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    # a trailing blank line is common in UCI dumps
    while rows and not rows[-1]:
        rows.pop()
    if not rows:
        raise DatasetError(f"{path} is empty")
    return rows


def load_categorical_csv(path, has_header: bool = False) -> BinaryMatrix:
    """One-hot encode a categorical CSV.

    Every (column, value) pair becomes an item named ``"<col>=<value>"``,
    where ``<col>`` is the header name or ``c<k>`` without a header. Items
    follow column order, then first appearance of each value. Blank cells
    are kept as the value ``""``.
    """
    rows = _read_rows(path)
    if has_header:
        header, rows = [h.strip() for h in rows[0]], rows[1:]
        if not rows:
            raise DatasetError(f"{path} has a header but no data rows")
    else:
        header = [f"c{k}" for k in range(len(rows[0]))]
    width = len(header)
    for lineno, row in enumerate(rows, start=2 if has_header else 1):
        if len(row) != width:
            raise DatasetError(
                f"{path}:{lineno}: expected {width} fields, got {len(row)}"
            )

    names: list[str] = []
    columns: list[np.ndarray] = []
    for k, col_name in enumerate(header):
        values = [row[k].strip() for row in rows]
        # dict preserves first-appearance order
        for value in dict.fromkeys(values):
            names.append(f"{col_name}={value}")
            columns.append(np.fromiter((v == value for v in values), bool, len(values)))
    return BinaryMatrix(tuple(names), np.column_stack(columns))


def load_binary_csv(path) -> BinaryMatrix:
    """Load a 0/1 CSV whose header row names the items."""
    rows = _read_rows(path)
    header, body = [h.strip() for h in rows[0]], rows[1:]
    if len(set(header)) != len(header):
        raise DatasetError(f"{path}: duplicate item names in header")
    if not body:
        raise DatasetError(f"{path} has no data rows")
    cells = np.zeros((len(body), len(header)), dtype=bool)
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise DatasetError(f"{path}:{r + 2}: expected {len(header)} fields")
        for i, value in enumerate(row):
            value = value.strip()
            if value == "1":
                cells[r, i] = True
            elif value != "0":
                raise DatasetError(f"{path}:{r + 2}: non-binary cell {value!r}")
    return BinaryMatrix(tuple(header), cells)


def load_transactions(path, skip_first: bool = True, delimiter: str = ",") -> BinaryMatrix:
    """Load a basket file (one transaction per line, variable length).

    With ``skip_first`` the leading field of each line is treated as a row
    label and ignored, which is the layout of the UCI Plants file. Items are
    ordered by first appearance.
    """
    rows = _read_rows(path, delimiter=delimiter)
    baskets = []
    for row in rows:
        fields = row[1:] if skip_first else row
        baskets.append([f.strip() for f in fields if f.strip()])
    names = list(dict.fromkeys(item for basket in baskets for item in basket))
    index = {name: i for i, name in enumerate(names)}
    cells = np.zeros((len(baskets), len(names)), dtype=bool)
    for r, basket in enumerate(baskets):
        cells[r, [index[name] for name in basket]] = True
    return BinaryMatrix(tuple(names), cells)


def write_binary_csv(data: BinaryMatrix, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(data.items)
        writer.writerows(data.cells.astype(np.uint8).tolist())


def detect_format(path) -> str:
    """Guess ``binary``, ``categorical`` or ``transactions`` from file content.

    Ragged rows mean a basket file; a header over 0/1 cells means a binary
    table; anything else is read as headerless categorical data.
    """
    rows = _read_rows(path)
    if len({len(r) for r in rows}) > 1:
        return "transactions"
    body = rows[1:]
    if body and all(cell.strip() in ("0", "1") for row in body for cell in row):
        if not all(cell.strip() in ("0", "1") for cell in rows[0]):
            return "binary"
    return "categorical"


def load_dataset(path, fmt: str = "auto", has_header: bool = False) -> BinaryMatrix:
    """Dispatch on a format name: ``binary``, ``categorical``, ``transactions`` or ``auto``."""
    if fmt == "auto":
        fmt = detect_format(path)
    if fmt == "binary":
        return load_binary_csv(path)
    if fmt == "categorical":
        return load_categorical_csv(path, has_header=has_header)
    if fmt == "transactions":
        return load_transactions(path)
    raise ValueError(f"unknown dataset format {fmt!r}")


def generate_synthetic(spec: SyntheticSpec) -> BinaryMatrix:
    """Random matrix with planted co-occurrences.

    Cells are first drawn independently with ``background_density``. Then,
    for each planted pair ``(a, c, p)`` in order, the ``c`` cell of every row
    holding ``a`` is redrawn as present with probability ``p``.
    """
    rng = np.random.default_rng(spec.seed)
    cells = rng.random((spec.rows, spec.items)) < spec.background_density
    for a, c, p in spec.planted_pairs:
        holders = np.flatnonzero(cells[:, a])
        cells[holders, c] = rng.random(holders.size) < p
    names = tuple(f"i{k}" for k in range(spec.items))
    return BinaryMatrix(names, cells)
