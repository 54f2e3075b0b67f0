"""Angle-encoding feature maps: one qubit per feature, RY(x_i) on qubit i."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import CircuitDescription, Gate, StateVector, apply_circuit_batch, cx, ry, zero_batch

MAX_REPETITIONS = 4


@dataclass(frozen=True)
class FeatureMapSpec:
    n_features: int
    entangling: bool = True
    repetitions: int = 1

    def __post_init__(self):
        if not 1 <= self.n_features <= 20:
            raise ValueError(f"n_features must be in [1, 20], got {self.n_features}")
        if not 1 <= self.repetitions <= MAX_REPETITIONS:
            raise ValueError(f"repetitions must be in [1, {MAX_REPETITIONS}], got {self.repetitions}")

    @property
    def n_qubits(self) -> int:
        return self.n_features

    def to_dict(self) -> dict:
        return {"n_features": self.n_features, "entangling": self.entangling, "repetitions": self.repetitions}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMapSpec":
        return cls(int(d["n_features"]), bool(d["entangling"]), int(d["repetitions"]))


def _check_vector(x, spec: FeatureMapSpec) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != spec.n_features:
        raise ValueError(f"expected {spec.n_features} features, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature vector contains non-finite values")
    return x


def _template(spec: FeatureMapSpec) -> list[tuple[Gate, int | None]]:
    """Gate layout with the feature index feeding each rotation (None for CX)."""
    n = spec.n_features
    out: list[tuple[Gate, int | None]] = []
    for _ in range(spec.repetitions):
        out.extend((ry(i, 0.0), i) for i in range(n))
        if spec.entangling:
            out.extend((cx(i, i + 1), None) for i in range(n - 1))
    return out


def build_feature_map(x, spec: FeatureMapSpec) -> CircuitDescription:
    x = _check_vector(x, spec)
    gates = [g if k is None else ry(g.target, x[k]) for g, k in _template(spec)]
    return CircuitDescription(spec.n_features, gates)


def encode(x, spec: FeatureMapSpec) -> StateVector:
    states = encode_batch(_check_vector(x, spec)[None, :], spec)
    return StateVector(spec.n_features, states[0])


def apply_feature_map_batch(states: np.ndarray, X: np.ndarray, spec: FeatureMapSpec, inverse: bool = False) -> None:
    """Apply U(x_r) (or its inverse) to row r of ``states`` in place."""
    template = _template(spec)
    if inverse:
        template = template[::-1]
    gates = [g for g, _ in template]
    row_angles = [None if k is None else (-X[:, k] if inverse else X[:, k]) for _, k in template]
    apply_circuit_batch(states, gates, row_angles)


def encode_batch(X, spec: FeatureMapSpec, dtype=np.complex128) -> np.ndarray:
    """Encoded states for every row of ``X`` as a (rows, 2**n) array.

    The feature map is real (RY and CX only), so ``dtype=float64`` gives the
    same amplitudes at half the memory traffic.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.n_features:
        raise ValueError(f"expected an (m, {spec.n_features}) matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    states = zero_batch(X.shape[0], spec.n_features, dtype)
    apply_feature_map_batch(states, X, spec)
    return states
