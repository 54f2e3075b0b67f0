"""SPSA and plain gradient descent for variational training."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np

from ._seeding import derive_seed

SPSA = "SPSA"
GRADIENT_DESCENT = "GRADIENT_DESCENT"

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = GRADIENT_DESCENT
    step: float = 0.2
    perturb: float = 0.1
    alpha_exp: float = 0.602
    gamma_exp: float = 0.101
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in (SPSA, GRADIENT_DESCENT):
            raise ValueError(f"optimizer kind must be SPSA or GRADIENT_DESCENT, got {self.kind!r}")
        if self.step <= 0 or self.perturb <= 0:
            raise ValueError("step and perturb must be positive")
        if self.kind == SPSA and not (0 < self.alpha_exp <= 1 and 0 < self.gamma_exp <= 1):
            raise ValueError("SPSA decay exponents must lie in (0, 1]")

    def with_seed(self, seed: int) -> "OptimizerConfig":
        return replace(self, rng_seed=seed)

    def label(self) -> str:
        """Compact description written into result files."""
        if self.kind == GRADIENT_DESCENT:
            return f"GRADIENT_DESCENT(step={self.step:g})"
        return (f"SPSA(a={self.step:g};c={self.perturb:g};"
                f"alpha={self.alpha_exp:g};gamma={self.gamma_exp:g})")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        return cls(**d)


def _finite(value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise FloatingPointError(f"objective returned a non-finite value: {value}")
    return value


def spsa_perturbation(config: OptimizerConfig, k: int, size: int) -> np.ndarray:
    """Rademacher vector for iteration ``k``; a pure function of (seed, k)."""
    rng = np.random.default_rng(derive_seed("spsa", config.rng_seed, k))
    return rng.choice(np.array([-1.0, 1.0]), size=size)


def spsa_gains(config: OptimizerConfig, k: int) -> tuple[float, float]:
    return config.step / k ** config.alpha_exp, config.perturb / k ** config.gamma_exp


def spsa_step(theta, objective: Objective, k: int, config: OptimizerConfig, *,
              delta=None, gains: tuple[float, float] | None = None) -> np.ndarray:
    """One SPSA update using exactly two objective evaluations.

    ``delta`` and ``gains`` override the seeded perturbation and the
    (a_k, c_k) schedule; both exist for hand-checkable examples.
    """
    if k < 1:
        raise ValueError("SPSA iteration index starts at 1")
    theta = np.asarray(theta, dtype=np.float64)
    if delta is None:
        delta = spsa_perturbation(config, k, theta.shape[0])
    delta = np.asarray(delta, dtype=np.float64).reshape(theta.shape)
    a_k, c_k = gains if gains is not None else spsa_gains(config, k)
    f_plus = _finite(objective(theta + c_k * delta))
    f_minus = _finite(objective(theta - c_k * delta))
    g = (f_plus - f_minus) / (2.0 * c_k) / delta
    return theta - a_k * g


def gd_step(theta, gradient, step: float) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    gradient = np.asarray(gradient, dtype=np.float64)
    if theta.shape != gradient.shape:
        raise ValueError(f"gradient shape {gradient.shape} does not match theta {theta.shape}")
    return theta - step * gradient


def minimize(objective: Objective, theta0, config: OptimizerConfig, iterations: int,
             gradient: Callable[[np.ndarray], np.ndarray] | None = None):
    """Run ``iterations`` optimizer steps.

    Returns ``(theta_best, loss_trace)`` where ``loss_trace[t]`` is the
    objective after step ``t + 1`` and ``theta_best`` is the lowest-objective
    point seen, the starting point included.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if config.kind == GRADIENT_DESCENT and gradient is None:
        raise ValueError("gradient descent needs a gradient function")
    theta = np.asarray(theta0, dtype=np.float64).copy()
    best_theta, best_val = theta.copy(), _finite(objective(theta))
    trace: list[float] = []
    for k in range(1, iterations + 1):
        if config.kind == SPSA:
            theta = spsa_step(theta, objective, k, config)
        else:
            theta = gd_step(theta, gradient(theta), config.step)
        val = _finite(objective(theta))
        trace.append(val)
        if val < best_val:
            best_theta, best_val = theta.copy(), val
    return best_theta, trace
