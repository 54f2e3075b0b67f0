"""Soft-margin SVM trained on a precomputed kernel.

The dual

    maximize   sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij
    subject to 0 <= a_i <= C,  sum(a_i y_i) = 0

is solved by SMO with second-order working-pair selection. The inner loop
lives in the compiled core when available (see ``_backend``).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _backend

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 100_000
DEFAULT_DIAG_EPS = 1e-8
SUPPORT_TOL = 1e-8


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SvmModel:
    alphas: np.ndarray
    bias: float
    labels: np.ndarray
    C: float
    support_indices: np.ndarray = field(default=None)
    converged: bool = True
    n_iter: int = 0
    diag_eps: float = 0.0
    training_ref: str = ""

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=np.float64).copy()
        y = np.asarray(self.labels, dtype=np.float64).copy()
        a.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "labels", y)
        if self.support_indices is None:
            object.__setattr__(self, "support_indices", np.flatnonzero(a > SUPPORT_TOL))

    @property
    def n_train(self) -> int:
        return self.alphas.shape[0]

    def to_json(self) -> str:
        return json.dumps({
            "alphas": [float(v) for v in self.alphas],
            "bias": float(self.bias),
            "labels": [int(v) for v in self.labels],
            "C": self.C,
            "converged": self.converged,
            "n_iter": self.n_iter,
            "diag_eps": self.diag_eps,
            "training_ref": self.training_ref,
        })

    @classmethod
    def from_json(cls, text: str) -> "SvmModel":
        d = json.loads(text)
        return cls(np.array(d["alphas"]), d["bias"], np.array(d["labels"]), d["C"],
                   converged=d["converged"], n_iter=d["n_iter"], diag_eps=d["diag_eps"],
                   training_ref=d["training_ref"])


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("labels must be -1 or +1")
    if np.all(y == 1) or np.all(y == -1):
        raise ValueError("training labels contain a single class")
    return y


def _bias(alpha, grad, y, C) -> float:
    minus_yg = -y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(minus_yg[free].mean())
    # no unbounded support vector: midpoint of the feasible bias interval
    pos = y > 0
    up = (pos & (alpha < C)) | (~pos & (alpha > 0))
    low = (pos & (alpha > 0)) | (~pos & (alpha < C))
    hi = minus_yg[up].max() if up.any() else minus_yg[low].min()
    lo = minus_yg[low].min() if low.any() else hi
    return float(0.5 * (hi + lo))


def train_svm(K, y, C: float = DEFAULT_C, tol: float = DEFAULT_TOL, *,
              max_iter: int = DEFAULT_MAX_ITER, diag_eps: float = DEFAULT_DIAG_EPS,
              backend: str | None = None, callback=None, training_ref: str = "") -> SvmModel:
    """Train on an n x n kernel matrix.

    ``diag_eps`` is added to the diagonal before solving, guarding against
    indefinite shot-estimated kernels. Hitting ``max_iter`` returns a usable
    model with ``converged=False`` and emits a ConvergenceWarning.

    ``callback(alpha, grad)`` is invoked after every pair update and forces
    the numpy backend.
    """
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("kernel matrix must be square")
    if not np.allclose(K, K.T, atol=1e-8, rtol=0):
        raise ValueError("kernel matrix is not symmetric")
    y = _check_labels(y)
    if y.shape[0] != K.shape[0]:
        raise ValueError("label count does not match kernel size")
    if C <= 0:
        raise ValueError("C must be positive")

    Q = np.ascontiguousarray(0.5 * (K + K.T))
    Q[np.diag_indices_from(Q)] += diag_eps
    n = K.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    if callback is not None:
        core = _backend.get("python")
        n_iter, converged = core.smo(Q, y, float(C), float(tol), int(max_iter), alpha, grad, callback=callback)
    else:
        core = _backend.get(backend) if backend else _backend.core
        n_iter, converged = core.smo(Q, y, float(C), float(tol), int(max_iter), alpha, grad)
    if not converged:
        warnings.warn(f"SMO hit the iteration cap ({max_iter}) before reaching tol={tol}",
                      ConvergenceWarning, stacklevel=2)
    return SvmModel(alpha, _bias(alpha, grad, y, C), y, float(C), converged=bool(converged),
                    n_iter=int(n_iter), diag_eps=float(diag_eps), training_ref=training_ref)


def decision_function(model: SvmModel, k_row) -> float:
    k_row = np.asarray(k_row, dtype=np.float64).reshape(-1)
    if k_row.shape[0] != model.n_train:
        raise ValueError(f"kernel row has length {k_row.shape[0]}, model was trained on {model.n_train}")
    return float((model.alphas * model.labels) @ k_row + model.bias)


def decision_values(model: SvmModel, k_rows) -> np.ndarray:
    k_rows = np.atleast_2d(np.asarray(k_rows, dtype=np.float64))
    if k_rows.shape[1] != model.n_train:
        raise ValueError(f"kernel rows have length {k_rows.shape[1]}, model was trained on {model.n_train}")
    return k_rows @ (model.alphas * model.labels) + model.bias


def predict(model: SvmModel, k_rows) -> np.ndarray:
    """Sign of the decision value per row; an exact 0 maps to +1."""
    return np.where(decision_values(model, k_rows) >= 0, 1, -1)


def rbf_kernel(X, X2, gamma: float) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    X2 = np.atleast_2d(np.asarray(X2, dtype=np.float64))
    if X.shape[1] != X2.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {X2.shape[1]}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    d2 = (X ** 2).sum(1)[:, None] + (X2 ** 2).sum(1)[None, :] - 2.0 * X @ X2.T
    return np.exp(-gamma * np.maximum(d2, 0.0))


def dual_objective(alpha, y, K) -> float:
    alpha = np.asarray(alpha, dtype=np.float64)
    ay = alpha * np.asarray(y, dtype=np.float64)
    return float(alpha.sum() - 0.5 * ay @ np.asarray(K) @ ay)


def kkt_violation(model: SvmModel, K) -> float:
    """Largest violation of the KKT conditions on the training rows.

    Uses the same diagonal shift the solver saw. A model with
    ``kkt_violation <= tol`` is tol-optimal for the convex dual.
    """
    Q = np.asarray(K, dtype=np.float64) + model.diag_eps * np.eye(model.n_train)
    margin = model.labels * decision_values(model, Q)
    a, C = model.alphas, model.C
    at_zero = a <= 0
    at_c = a >= C
    free = ~at_zero & ~at_c
    viol = np.zeros_like(margin)
    viol[at_zero] = np.maximum(0.0, 1.0 - margin[at_zero])
    viol[free] = np.abs(margin[free] - 1.0)
    viol[at_c] = np.maximum(0.0, margin[at_c] - 1.0)
    return float(viol.max())
