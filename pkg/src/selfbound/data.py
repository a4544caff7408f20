"""Labeled tabular datasets: CSV loading and seeded splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Recorded in output metadata; reproducibility is promised within this implementation only.
RNG_ALGORITHM = "numpy.random.PCG64"


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        if x.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        m, d = x.shape
        if m < 1 or d < 1:
            raise DataError(f"need at least one example and one feature, got shape {x.shape}")
        if y.shape != (m,):
            raise DataError(f"expected {m} labels, got shape {y.shape}")
        if not np.all(np.isin(y, (-1, 1))):
            raise DataError("labels must be -1 or +1")
        if not np.all(np.isfinite(x)):
            raise DataError("features contain missing or non-finite entries")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y.astype(np.int8))

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, idx, name: str | None = None) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], name or self.name)

    def class_counts(self) -> dict[int, int]:
        return {-1: int(np.sum(self.labels == -1)), 1: int(np.sum(self.labels == 1))}


@dataclass(frozen=True)
class SplitSpec:
    seed: int = 0
    test_fraction: float = 0.5
    voter_fraction: float = 0.5

    def __post_init__(self):
        for name in ("test_fraction", "voter_fraction"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise DataError(f"{name} must lie strictly between 0 and 1, got {v}")
        if not 0 <= int(self.seed) < 2**64:
            raise DataError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def _parse_label(raw: str, row: int, col: int) -> int:
    try:
        v = float(raw)
    except ValueError:
        raise DataError(f"row {row}, column {col}: label {raw!r} is not numeric") from None
    if v == 1.0:
        return 1
    if v in (-1.0, 0.0):
        return -1
    raise DataError(f"row {row}, column {col}: label {raw!r} is not in {{-1, +1}} or {{0, 1}}")


def load_csv(path, label_column: int = -1, has_header: bool = False, name: str | None = None) -> Dataset:
    """Read a comma-separated file with one example per row.

    Labels in {0, 1} are mapped to {-1, +1}; rows are kept in file order.
    `label_column` may be negative (counted from the end).
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if has_header and rows:
        rows = rows[1:]
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, found {len(rows)}")
    width = len(rows[0])
    if width < 2:
        raise DataError(f"{path}: need a label column and at least one feature column")
    col = label_column if label_column >= 0 else width + label_column
    if not 0 <= col < width:
        raise DataError(f"{path}: label column {label_column} out of range for {width} columns")

    first_row = 2 if has_header else 1
    feats, labels = [], []
    for i, r in enumerate(rows):
        lineno = first_row + i
        if len(r) != width:
            raise DataError(f"{path}: row {lineno} has {len(r)} columns, expected {width}")
        labels.append(_parse_label(r[col].strip(), lineno, col))
        vals = []
        for j, cell in enumerate(r):
            if j == col:
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {lineno}, column {j}: cannot parse {cell!r} as a number") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: row {lineno}, column {j}: missing or non-finite value {cell!r}")
            vals.append(v)
        feats.append(vals)
    return Dataset(np.array(feats, dtype=float), np.array(labels), name or path.stem)


def _two_way(dataset: Dataset, second_fraction: float, seed: int, tag: int):
    m = dataset.m
    n_second = math.floor(m * second_fraction)
    n_first = m - n_second
    if n_first < 1 or n_second < 1:
        raise DataError(f"splitting {m} examples with fraction {second_fraction} leaves an empty part")
    rng = np.random.Generator(np.random.PCG64([int(seed), tag]))
    perm = rng.permutation(m)
    first = np.sort(perm[:n_first])
    second = np.sort(perm[n_first:])
    return first, second


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Unstratified train/test split; the test part gets floor(m * test_fraction) rows."""
    tr, te = _two_way(dataset, spec.test_fraction, spec.seed, 0)
    return dataset.subset(tr, f"{dataset.name}:train"), dataset.subset(te, f"{dataset.name}:test")


def split_for_voters(train: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Split a training set into the part that grows the voters and the part that fits the posterior.

    The posterior part gets floor(m * (1 - voter_fraction)) rows.
    """
    vt, pt = _two_way(train, 1.0 - spec.voter_fraction, spec.seed, 1)
    return train.subset(vt, f"{train.name}:voters"), train.subset(pt, f"{train.name}:posterior")


def split_metadata(train: Dataset, test: Dataset, voter: Dataset | None = None, post: Dataset | None = None) -> dict:
    meta = {"rng": RNG_ALGORITHM, "stratified": False,
            "train_counts": train.class_counts(), "test_counts": test.class_counts()}
    if voter is not None:
        meta["voter_counts"] = voter.class_counts()
    if post is not None:
        meta["posterior_counts"] = post.class_counts()
    return meta
