"""Fidelity kernel K(x, x') = |<phi(x)|phi(x')>|^2 on encoded states.

Two estimators:

* ``EXACT``: squared overlap of simulated statevectors.
* ``SHOTS``: the compute-uncompute (inversion) test. Run U(x_i) followed by
  U(x_j)^-1 on |0...0>, measure, and report the fraction of all-zero
  outcomes.

Diagonal entries of Gram matrices are set to 1 without evaluation. Every
off-diagonal unordered pair is evaluated once and mirrored.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._seeding import derive_seed
from .encode import FeatureMapSpec, apply_feature_map_batch, build_feature_map, encode, encode_batch
from .qstate import _multinomial, apply_circuit, inner_product, new_zero_state, sample_counts

EXACT = "EXACT"
SHOTS = "SHOTS"
DEFAULT_SHOTS = 1024


@dataclass(frozen=True)
class KernelMode:
    kind: str = EXACT
    shots: int | None = None

    def __post_init__(self):
        if self.kind not in (EXACT, SHOTS):
            raise ValueError(f"kernel mode must be EXACT or SHOTS, got {self.kind!r}")
        if self.kind == SHOTS and (self.shots is None or self.shots < 1):
            raise ValueError("SHOTS mode needs a positive shot count")

    def __str__(self) -> str:
        return EXACT if self.kind == EXACT else f"SHOTS({self.shots})"

    @classmethod
    def parse(cls, value) -> "KernelMode":
        """Accept ``"EXACT"``, ``"SHOTS(1024)"``, ``{"SHOTS": 1024}`` or a KernelMode."""
        if isinstance(value, KernelMode):
            return value
        if isinstance(value, dict):
            (kind, shots), = value.items()
            return cls(kind.upper(), None if shots is None else int(shots))
        text = str(value).strip().upper()
        if text.startswith(SHOTS):
            rest = text[len(SHOTS):].strip("() ")
            return cls(SHOTS, int(rest) if rest else DEFAULT_SHOTS)
        return cls(text)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    values: np.ndarray
    mode: KernelMode
    feature_map: FeatureMapSpec
    eval_count: int

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _pair(xi, xj, spec: FeatureMapSpec) -> tuple[np.ndarray, np.ndarray]:
    xi = np.asarray(xi, dtype=np.float64).reshape(-1)
    xj = np.asarray(xj, dtype=np.float64).reshape(-1)
    if xi.shape[0] != spec.n_features or xj.shape[0] != spec.n_features:
        raise ValueError(
            f"feature map expects {spec.n_features} features, got {xi.shape[0]} and {xj.shape[0]}"
        )
    return xi, xj


def kernel_entry_exact(xi, xj, spec: FeatureMapSpec) -> float:
    xi, xj = _pair(xi, xj, spec)
    return float(abs(inner_product(encode(xi, spec), encode(xj, spec))) ** 2)


def inversion_circuit(xi, xj, spec: FeatureMapSpec):
    """U(x_i) followed by the gate-wise inverse of U(x_j)."""
    xi, xj = _pair(xi, xj, spec)
    return build_feature_map(xi, spec) + build_feature_map(xj, spec).inverse()


def kernel_entry_shots(xi, xj, spec: FeatureMapSpec, shots: int, rng_seed: int) -> float:
    circuit = inversion_circuit(xi, xj, spec)
    state = apply_circuit(new_zero_state(spec.n_qubits), circuit)
    hist = sample_counts(state, shots, rng_seed)
    return hist.count("0" * spec.n_qubits) / shots


def pair_seed(rng_seed: int, i: int, j: int) -> int:
    """Seed for the (i, j) entry; independent of evaluation order."""
    return derive_seed("kernel-pair", rng_seed, i, j)


def _as_matrix(X, spec: FeatureMapSpec, name: str) -> np.ndarray:
    try:
        X = np.asarray(X, dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{name} is ragged") from exc
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix")
    if X.shape[1] != spec.n_features:
        raise ValueError(f"{name} has {X.shape[1]} columns, feature map expects {spec.n_features}")
    return X


def _overlaps(A: np.ndarray, B: np.ndarray, spec: FeatureMapSpec) -> np.ndarray:
    # the feature map is real, so real amplitudes give the same overlaps
    Sa = encode_batch(A, spec, np.float64)
    Sb = Sa if B is A else encode_batch(B, spec, np.float64)
    return (Sa @ Sb.T) ** 2


def _shot_estimates(A: np.ndarray, B: np.ndarray, spec: FeatureMapSpec, shots: int,
                    pairs: dict[int, list[int]], seed_of) -> dict[tuple[int, int], float]:
    """Inversion-test estimates for ``pairs`` (left row -> right rows)."""
    out = {}
    for a, cols in pairs.items():
        if not cols:
            continue
        states = encode_batch(np.repeat(A[a:a + 1], len(cols), axis=0), spec, np.float64)
        apply_feature_map_batch(states, B[cols], spec, inverse=True)
        probs = states ** 2
        for r, b in enumerate(cols):
            counts = _multinomial(probs[r], shots, seed_of(a, b))
            out[a, b] = counts[0] / shots
    return out


def kernel_matrix(X, spec: FeatureMapSpec, mode="EXACT", shots: int | None = None,
                  rng_seed: int = 0) -> KernelMatrix:
    """Gram matrix over the rows of ``X``.

    In SHOTS mode entry (i, j), i < j, equals
    ``kernel_entry_shots(X[i], X[j], spec, shots, pair_seed(rng_seed, i, j))``.
    ``eval_count`` is the number of off-diagonal evaluations, n(n-1)/2.
    """
    mode = _resolve_mode(mode, shots)
    X = _as_matrix(X, spec, "X")
    n = X.shape[0]
    if n < 1:
        raise ValueError("kernel_matrix needs at least one row")
    if mode.kind == EXACT:
        K = _overlaps(X, X, spec)
        K = 0.5 * (K + K.T)
    else:
        K = np.empty((n, n))
        pairs = {i: list(range(i + 1, n)) for i in range(n)}
        est = _shot_estimates(X, X, spec, mode.shots, pairs, lambda i, j: pair_seed(rng_seed, i, j))
        for (i, j), v in est.items():
            K[i, j] = K[j, i] = v
    np.fill_diagonal(K, 1.0)
    np.clip(K, 0.0, 1.0, out=K)
    return KernelMatrix(K, mode, spec, eval_count=n * (n - 1) // 2)


def gram_cross(X_test, X_train, spec: FeatureMapSpec, mode="EXACT", shots: int | None = None,
               rng_seed: int = 0) -> np.ndarray:
    """Kernel between every test row (rows of the result) and every train row."""
    mode = _resolve_mode(mode, shots)
    A = _as_matrix(X_test, spec, "X_test")
    B = _as_matrix(X_train, spec, "X_train")
    if mode.kind == EXACT:
        return np.clip(_overlaps(A, B, spec), 0.0, 1.0)
    # cross entries draw from a seed namespace disjoint from the training Gram
    cross_seed = derive_seed("cross", rng_seed)
    pairs = {i: list(range(B.shape[0])) for i in range(A.shape[0])}
    est = _shot_estimates(A, B, spec, mode.shots, pairs, lambda i, j: pair_seed(cross_seed, i, j))
    out = np.empty((A.shape[0], B.shape[0]))
    for (i, j), v in est.items():
        out[i, j] = v
    return out


def _resolve_mode(mode, shots) -> KernelMode:
    if isinstance(mode, str) and mode.upper() == SHOTS:
        if shots is None:
            raise ValueError("SHOTS mode requires a shot count")
        return KernelMode(SHOTS, int(shots))
    return KernelMode.parse(mode)


def save_gram_csv(values: np.ndarray, path) -> None:
    """Headerless square CSV, row-major, shortest round-trip decimals."""
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in values:
            w.writerow(repr(float(v)) for v in row)


def load_gram_csv(path) -> np.ndarray:
    with open(Path(path), newline="") as fh:
        rows = [[float(c) for c in row] for row in csv.reader(fh) if row]
    K = np.array(rows, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"{path}: Gram matrix CSV must be square")
    return K
