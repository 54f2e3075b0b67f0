"""Variational quantum classifier.

Circuit: angle-encoding feature map, then the trainable ansatz
(RY column, entangler) x layers, final RY column. The score is the mean of
per-qubit <Z> (or <Z> on qubit 0), a number in [-1, 1]; the label is +1 when
the score reaches the threshold. Training minimises mean squared error
between score and +-1 label.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .encode import FeatureMapSpec, encode_batch
from .optim import OptimizerConfig, minimize
from .qstate import (
    CircuitDescription,
    _multinomial,
    apply_circuit_batch,
    batch_probabilities,
    cx,
    expectation_z_batch,
    ry,
    z_sign_matrix,
)

LINEAR_CHAIN = "LINEAR_CHAIN"
RING = "RING"
AGGREGATIONS = ("mean", "qubit0")
SHIFT = math.pi / 2


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    layers: int = 2
    entangler: str = LINEAR_CHAIN

    def __post_init__(self):
        if not 1 <= self.n_qubits <= 20:
            raise ValueError(f"n_qubits must be in [1, 20], got {self.n_qubits}")
        # layers=0 is a single RY column with no entangler
        if self.layers < 0:
            raise ValueError("layers must be >= 0")
        if self.entangler not in (LINEAR_CHAIN, RING):
            raise ValueError(f"entangler must be LINEAR_CHAIN or RING, got {self.entangler!r}")

    @property
    def n_params(self) -> int:
        return self.n_qubits * (self.layers + 1)

    def entangler_pairs(self) -> list[tuple[int, int]]:
        n = self.n_qubits
        pairs = [(i, i + 1) for i in range(n - 1)]
        if self.entangler == RING and n >= 3:
            pairs.append((n - 1, 0))
        return pairs

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "layers": self.layers, "entangler": self.entangler}


@dataclass(frozen=True, eq=False)
class VqcModel:
    theta: np.ndarray
    ansatz: AnsatzSpec
    feature_map: FeatureMapSpec
    threshold: float = 0.0
    training_log: tuple[tuple[int, float], ...] = field(default_factory=tuple)
    aggregation: str = "mean"

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64).reshape(-1).copy()
        if theta.shape[0] != self.ansatz.n_params:
            raise ValueError(f"theta has {theta.shape[0]} entries, ansatz needs {self.ansatz.n_params}")
        if self.ansatz.n_qubits != self.feature_map.n_qubits:
            raise ValueError("ansatz and feature map disagree on qubit count")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "training_log", tuple((int(e), float(v)) for e, v in self.training_log))

    def with_theta(self, theta) -> "VqcModel":
        return replace(self, theta=theta)

    def to_json(self) -> str:
        return json.dumps({
            "theta": [float(t) for t in self.theta],
            "ansatz": self.ansatz.to_dict(),
            "feature_map": self.feature_map.to_dict(),
            "threshold": self.threshold,
            "aggregation": self.aggregation,
            "training_log": [list(p) for p in self.training_log],
        })

    @classmethod
    def from_json(cls, text: str) -> "VqcModel":
        d = json.loads(text)
        return cls(np.array(d["theta"]), AnsatzSpec(**d["ansatz"]), FeatureMapSpec.from_dict(d["feature_map"]),
                   threshold=d["threshold"], training_log=tuple(tuple(p) for p in d["training_log"]),
                   aggregation=d["aggregation"])


def build_ansatz(theta, spec: AnsatzSpec) -> CircuitDescription:
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if theta.shape[0] != spec.n_params:
        raise ValueError(f"theta has {theta.shape[0]} entries, ansatz needs {spec.n_params}")
    n = spec.n_qubits
    gates = []
    for layer in range(spec.layers):
        gates.extend(ry(q, theta[layer * n + q]) for q in range(n))
        gates.extend(cx(c, t) for c, t in spec.entangler_pairs())
    gates.extend(ry(q, theta[spec.layers * n + q]) for q in range(n))
    return CircuitDescription(n, gates)


def _check_X(X, fmap: FeatureMapSpec) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != fmap.n_features:
        raise ValueError(f"expected {fmap.n_features} features, got {X.shape[1]}")
    return X


def _aggregate(z: np.ndarray, aggregation: str) -> np.ndarray:
    return z.mean(axis=1) if aggregation == "mean" else z[:, 0]


def _final_states(theta, encoded: np.ndarray, model) -> np.ndarray:
    states = encoded.copy()
    apply_circuit_batch(states, build_ansatz(theta, model.ansatz).gates)
    return states


def _scores_from_encoded(theta, encoded: np.ndarray, model) -> np.ndarray:
    states = _final_states(theta, encoded, model)
    return _aggregate(expectation_z_batch(states, model.ansatz.n_qubits), model.aggregation)


def scores(model: VqcModel, X, theta=None, *, shots: int | None = None, rng_seed: int = 0) -> np.ndarray:
    """Scores for every row of ``X``.

    With ``shots`` set, each row's <Z> values are estimated from a sampled
    histogram (evaluation only; training always uses exact expectations).
    """
    X = _check_X(X, model.feature_map)
    theta = model.theta if theta is None else theta
    encoded = encode_batch(X, model.feature_map, np.float64)
    if shots is None:
        return _scores_from_encoded(theta, encoded, model)
    states = _final_states(theta, encoded, model)
    probs = batch_probabilities(states)
    signs = z_sign_matrix(model.ansatz.n_qubits)
    rng = np.random.default_rng(rng_seed)
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        counts = _multinomial(probs[r], shots, int(rng.integers(2 ** 63)))
        z = (counts @ signs) / shots
        out[r] = _aggregate(z[None, :], model.aggregation)[0]
    return out


def forward(x, model: VqcModel, *, shots: int | None = None, rng_seed: int = 0) -> float:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.feature_map.n_features:
        raise ValueError(f"expected {model.feature_map.n_features} features, got {x.shape[0]}")
    return float(scores(model, x[None, :], shots=shots, rng_seed=rng_seed)[0])


def predict(model: VqcModel, x) -> int:
    return 1 if forward(x, model) >= model.threshold else -1


def predict_batch(model: VqcModel, X) -> np.ndarray:
    return np.where(scores(model, X) >= model.threshold, 1, -1)


def _check_data(X, y, model) -> tuple[np.ndarray, np.ndarray]:
    X = _check_X(X, model.feature_map)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.shape[0] == 0:
        raise ValueError("empty dataset")
    if y.shape[0] != X.shape[0]:
        raise ValueError("X and y lengths differ")
    return X, y


def loss(theta, X, y, model) -> float:
    """Mean squared error between scores and +-1 labels."""
    X, y = _check_data(X, y, model)
    s = _scores_from_encoded(theta, encode_batch(X, model.feature_map, np.float64), model)
    return float(np.mean((s - y) ** 2))


def _shift_gradient(theta, encoded, y, model) -> tuple[float, np.ndarray]:
    theta = np.asarray(theta, dtype=np.float64)
    s = _scores_from_encoded(theta, encoded, model)
    resid = s - y
    grad = np.empty_like(theta)
    for k in range(theta.shape[0]):
        shifted = theta.copy()
        shifted[k] += SHIFT
        s_plus = _scores_from_encoded(shifted, encoded, model)
        shifted[k] -= 2 * SHIFT
        s_minus = _scores_from_encoded(shifted, encoded, model)
        grad[k] = 2.0 * np.mean(resid * 0.5 * (s_plus - s_minus))
    return float(np.mean(resid ** 2)), grad


def parameter_shift_gradient(theta, X, y, model) -> np.ndarray:
    """Gradient of :func:`loss` via the +-pi/2 shift rule on every parameter."""
    X, y = _check_data(X, y, model)
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if theta.shape[0] != model.ansatz.n_params:
        raise ValueError(f"theta has {theta.shape[0]} entries, ansatz needs {model.ansatz.n_params}")
    return _shift_gradient(theta, encode_batch(X, model.feature_map, np.float64), y, model)[1]


def train_vqc(X, y, ansatz: AnsatzSpec, fmap: FeatureMapSpec, optimizer: OptimizerConfig,
              epochs: int, rng_seed: int, *, threshold: float = 0.0, aggregation: str = "mean") -> VqcModel:
    """Fit theta from a uniform (-pi, pi) start and return the best epoch's parameters."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if np.all(y == y[0]):
        raise ValueError("training labels contain a single class")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    rng = np.random.default_rng(rng_seed)
    theta0 = rng.uniform(-np.pi, np.pi, size=ansatz.n_params)
    model = VqcModel(theta0, ansatz, fmap, threshold=threshold, aggregation=aggregation)
    X, y = _check_data(X, y, model)
    encoded = encode_batch(X, fmap, np.float64)

    def objective(theta):
        return float(np.mean((_scores_from_encoded(theta, encoded, model) - y) ** 2))

    def gradient(theta):
        return _shift_gradient(theta, encoded, y, model)[1]

    best, trace = minimize(objective, theta0, optimizer, epochs, gradient=gradient)
    log = tuple((e + 1, v) for e, v in enumerate(trace))
    return replace(model, theta=best, training_log=log)


def circuit_evaluations_per_epoch(model: VqcModel, optimizer: OptimizerConfig, n_samples: int) -> int:
    """Circuit runs per epoch: one per sample per forward pass."""
    passes = 2 if optimizer.kind == "SPSA" else 2 * model.ansatz.n_params + 1
    return (passes + 1) * n_samples

