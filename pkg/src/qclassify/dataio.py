"""CSV datasets and the synthetic two-cluster generator."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._seeding import round_half_up

log = logging.getLogger(__name__)

LABEL_COLUMN = "label"


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    source: str = ""

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        y = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("dataset needs at least one row of features")
        if X.shape[0] != y.shape[0]:
            raise ValueError("features and labels differ in length")
        if not np.all(np.isfinite(X)):
            raise ValueError("dataset contains non-finite feature values")
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be -1/+1")
        if len(self.feature_names) != X.shape[1]:
            raise ValueError("feature_names length does not match feature count")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def class_counts(ds: Dataset) -> tuple[int, int]:
    n_pos = int(np.sum(ds.labels == 1))
    return n_pos, ds.n - n_pos


def _map_labels(raw: list[float], path) -> np.ndarray:
    values = set(raw)
    if values <= {0.0, 1.0}:
        return np.array([1 if v == 1.0 else -1 for v in raw])
    if values <= {-1.0, 1.0}:
        return np.array(raw, dtype=np.int64)
    if values <= {-1.0, 0.0, 1.0}:
        raise DatasetFormatError(f"{path}: mixed label conventions (found 0, -1 and/or 1)")
    bad = sorted(values - {-1.0, 0.0, 1.0})
    raise DatasetFormatError(f"{path}: unsupported label values {bad}")


def load_csv(path) -> Dataset:
    """Read a header-row CSV with a ``label`` column; other columns are features."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetFormatError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if LABEL_COLUMN not in header:
            raise DatasetFormatError(f"{path}: no '{LABEL_COLUMN}' column in header")
        li = header.index(LABEL_COLUMN)
        names = [h for k, h in enumerate(header) if k != li]
        rows, labels = [], []
        for rno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetFormatError(f"{path}: row {rno} has {len(row)} cells, header has {len(header)}")
            vals = []
            for k, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetFormatError(
                        f"{path}: cannot parse {cell!r} at row {rno}, column {header[k]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DatasetFormatError(f"{path}: non-finite value at row {rno}, column {header[k]!r}")
                vals.append(v)
            labels.append(vals.pop(li))
            rows.append(vals)
    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    y = _map_labels(labels, path)
    ds = Dataset(np.array(rows), y, names, source=f"csv:{path}")
    n_pos, n_neg = class_counts(ds)
    log.info("loaded %s: %d rows, %d features, %d positive / %d negative", path, ds.n, ds.d, n_pos, n_neg)
    return ds


def save_csv(ds: Dataset, path) -> None:
    """Write with shortest round-trip decimals so load(save(ds)) is exact."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(ds.feature_names) + [LABEL_COLUMN])
        for row, lab in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])


def generate_synthetic(n: int, d: int, pos_fraction: float, separation: float, rng_seed: int) -> Dataset:
    """Two unit-variance spherical Gaussians whose means are ``separation`` apart.

    The means sit at +-separation/2 along the all-ones diagonal, so every
    feature carries some of the signal. Exactly round_half_up(n * pos_fraction)
    rows are positive; rows are shuffled.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if d < 1:
        raise ValueError("need d >= 1")
    if not 0 < pos_fraction < 1:
        raise ValueError("pos_fraction must lie in (0, 1)")
    if separation < 0:
        raise ValueError("separation must be nonnegative")
    rng = np.random.default_rng(rng_seed)
    n_pos = round_half_up(n * pos_fraction)
    direction = np.ones(d) / math.sqrt(d)
    y = np.concatenate([np.ones(n_pos, dtype=np.int64), -np.ones(n - n_pos, dtype=np.int64)])
    X = rng.standard_normal((n, d)) + np.outer(y, direction) * (separation / 2.0)
    perm = rng.permutation(n)
    source = f"synthetic:n={n},d={d},pos_fraction={pos_fraction},separation={separation},seed={rng_seed}"
    return Dataset(X[perm], y[perm], [f"f{k}" for k in range(d)], source=source)
