"""Standardisation, PCA and stratified sampling.

Conventions: the scaler uses the population standard deviation (divisor n);
PCA uses the sample covariance (divisor n - 1). Columns whose standard
deviation is below 1e-12 are mapped to zeros by the scaler.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._seeding import round_half_up

DEGENERATE_STD = 1e-12


@dataclass(frozen=True, eq=False)
class ScalerParams:
    means: np.ndarray
    stddevs: np.ndarray

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stddevs": self.stddevs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(np.array(d["means"], dtype=float), np.array(d["stddevs"], dtype=float))


@dataclass(frozen=True, eq=False)
class PcaModel:
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray
    center: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def to_dict(self) -> dict:
        return {
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "center": self.center.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(np.array(d["components"], dtype=float), np.array(d["explained_variance"], dtype=float),
                   np.array(d["center"], dtype=float))


def _matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("expected a non-empty 2-D matrix")
    return X


def fit_scaler(X) -> ScalerParams:
    X = _matrix(X)
    return ScalerParams(X.mean(axis=0), X.std(axis=0))


def apply_scaler(X, params: ScalerParams) -> np.ndarray:
    X = _matrix(X)
    if X.shape[1] != params.means.shape[0]:
        raise ValueError(f"scaler fitted on {params.means.shape[0]} columns, got {X.shape[1]}")
    ok = params.stddevs >= DEGENERATE_STD
    safe = np.where(ok, params.stddevs, 1.0)
    return np.where(ok, (X - params.means) / safe, 0.0)


def fit_pca(X, k: int) -> PcaModel:
    """Top-``k`` eigenvectors of the sample covariance.

    Each component is signed so its largest-magnitude entry is positive
    (first such entry on ties).
    """
    X = _matrix(X)
    n, d = X.shape
    if n < 2:
        raise ValueError("PCA needs at least two rows")
    if not 1 <= k <= min(n, d):
        raise ValueError(f"k must be in [1, {min(n, d)}], got {k}")
    center = X.mean(axis=0)
    Xc = X - center
    cov = Xc.T @ Xc / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1][:k]
    comps = evecs[:, order].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(comps, evals[order].copy(), center)


def pca_transform(X, model: PcaModel) -> np.ndarray:
    X = _matrix(X)
    if X.shape[1] != model.center.shape[0]:
        raise ValueError(f"PCA fitted on {model.center.shape[0]} columns, got {X.shape[1]}")
    return (X - model.center) @ model.components.T


def pca_inverse(Z, model: PcaModel) -> np.ndarray:
    return np.asarray(Z, dtype=np.float64) @ model.components + model.center


class Split(NamedTuple):
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray


def _classes(y) -> tuple[np.ndarray, list[np.ndarray]]:
    y = np.asarray(y).reshape(-1)
    return y, [np.flatnonzero(y == c) for c in (1, -1)]


def stratified_split(X, y, test_fraction: float, rng_seed: int) -> Split:
    """Per-class seeded shuffle; each class sends round_half_up(count * fraction) rows to test.

    The per-class test count is clamped to [1, count - 1] so both partitions
    see both classes.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    X = np.asarray(X)
    y, groups = _classes(y)
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y lengths differ")
    rng = np.random.default_rng(rng_seed)
    test = []
    for label, idx in zip((1, -1), groups):
        if idx.shape[0] < 2:
            raise ValueError(f"class {label:+d} has {idx.shape[0]} member(s); need at least 2 to split")
        n_test = min(max(round_half_up(idx.shape[0] * test_fraction), 1), idx.shape[0] - 1)
        test.append(rng.permutation(idx)[:n_test])
    test_idx = np.sort(np.concatenate(test))
    mask = np.ones(y.shape[0], dtype=bool)
    mask[test_idx] = False
    train_idx = np.flatnonzero(mask)
    return Split(X[train_idx], y[train_idx], X[test_idx], y[test_idx], train_idx, test_idx)


def subsample(X, y, n: int, rng_seed: int, stratified: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Seeded subsample of ``n`` rows, returned in shuffled order."""
    X = np.asarray(X)
    y, (pos, neg) = _classes(y)
    total = y.shape[0]
    if not 1 <= n <= total:
        raise ValueError(f"cannot draw {n} samples from a dataset of {total}")
    rng = np.random.default_rng(rng_seed)
    if stratified:
        n_pos = round_half_up(n * pos.shape[0] / total)
        n_pos = min(max(n_pos, n - neg.shape[0]), pos.shape[0])
        chosen = np.concatenate([rng.permutation(pos)[:n_pos], rng.permutation(neg)[:n - n_pos]])
    else:
        chosen = rng.permutation(total)[:n]
    chosen = rng.permutation(chosen)
    return X[chosen], y[chosen]
