"""CSV ingestion and labeled/unlabeled index bookkeeping."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from poolal.errors import DatasetError


def load_csv(path, label_column: str | None = None):
    """Read a numeric CSV file with a header line.

    Returns ``(features, labels)`` where ``features`` is an ``(n, N)`` float
    array in file column order (label column removed) and ``labels`` is an
    ``(n,)`` array, or None when ``label_column`` is not given.

    Row numbers in error messages are file line numbers (the header is line 1).
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"data file not found: {path}")

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [name.strip() for name in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file, header line expected") from None

        if len(set(header)) != len(header):
            raise DatasetError(f"{path}: duplicate column names in header")
        if label_column is not None and label_column not in header:
            raise DatasetError(f"{path}: label column {label_column!r} not in header {header}")

        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}: row {lineno} has {len(row)} fields, header has {len(header)}"
                )
            values = []
            for name, cell in zip(header, row):
                try:
                    value = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}: non-numeric value {cell.strip()!r} at row {lineno}, column {name!r}"
                    ) from None
                if not math.isfinite(value):
                    raise DatasetError(
                        f"{path}: non-finite value at row {lineno}, column {name!r}"
                    )
                values.append(value)
            rows.append(values)

    if not rows:
        raise DatasetError(f"{path}: no data rows")

    table = np.array(rows, dtype=float)
    if label_column is None:
        return table, None
    j = header.index(label_column)
    if table.shape[1] == 1:
        raise DatasetError(f"{path}: no feature columns besides label column {label_column!r}")
    features = np.delete(table, j, axis=1)
    return features, table[:, j].copy()


@dataclass
class IndexSets:
    """Disjoint labeled list and unlabeled set over pool indices.

    ``labeled`` keeps labeling order. ``unlabeled`` is a set; iterate it via
    :meth:`unlabeled_sorted` when order matters.
    """

    labeled: list[int]
    unlabeled: set[int] = field(default_factory=set)

    def __post_init__(self):
        self.labeled = [int(i) for i in self.labeled]
        self.unlabeled = {int(i) for i in self.unlabeled}
        if len(set(self.labeled)) != len(self.labeled):
            raise DatasetError("duplicate indices in labeled set")
        if self.unlabeled & set(self.labeled):
            raise DatasetError("labeled and unlabeled sets overlap")

    @classmethod
    def from_labeled(cls, labeled, n: int) -> "IndexSets":
        labeled = [int(i) for i in labeled]
        for i in labeled:
            if not 0 <= i < n:
                raise DatasetError(f"index {i} outside pool of size {n}")
        chosen = set(labeled)
        return cls(labeled, {i for i in range(n) if i not in chosen})

    def unlabeled_sorted(self) -> np.ndarray:
        return np.array(sorted(self.unlabeled), dtype=int)

    def move_to_labeled(self, index: int) -> None:
        index = int(index)
        if index not in self.unlabeled:
            raise DatasetError(f"index {index} is not in the unlabeled set")
        self.unlabeled.remove(index)
        self.labeled.append(index)

    def __len__(self):
        return len(self.labeled) + len(self.unlabeled)


def draw_initial_set(n: int, init_set_size: int, rng: np.random.Generator) -> IndexSets:
    """Draw ``init_set_size`` distinct pool indices uniformly without replacement."""
    if not 1 <= init_set_size < n:
        raise DatasetError(
            f"init_set_size must satisfy 1 <= init_set_size < n={n}, got {init_set_size}"
        )
    drawn = rng.choice(n, size=init_set_size, replace=False)
    return IndexSets.from_labeled(drawn.tolist(), n)
