"""Dense statevector simulator over the gate alphabet {RY, RZ, H, CX}.

Qubit 0 is the least-significant bit of the amplitude index, so the basis
state ``|q_{n-1} ... q_1 q_0>`` has index ``sum(q_k << k)``. Bitstrings in
histograms are printed most-significant first, i.e. qubit 0 is the last
character.

All public functions are pure: they return new objects and never mutate
their inputs. The ``*_batch`` helpers operate in place on ``(rows, 2**n)``
arrays and are what the encoder, kernel and classifier use internally.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _backend

MAX_QUBITS = 20
GATE_KINDS = ("RY", "RZ", "H", "CX")


class CapacityError(ValueError):
    """Requested register is outside the simulator's 1..20 qubit range."""


class QubitIndexError(IndexError):
    pass


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128, copy=True).reshape(-1)
        if amps.shape[0] != 1 << self.n_qubits:
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got {amps.shape[0]}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __len__(self) -> int:
        return self.amplitudes.shape[0]


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    angle: float | None = None
    control: int | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in ("RY", "RZ") and self.angle is None:
            raise ValueError(f"{self.kind} needs an angle")
        if self.kind == "CX":
            if self.control is None:
                raise ValueError("CX needs a control qubit")
            if self.control == self.target:
                raise ValueError("CX control and target must differ")

    def qubits(self) -> tuple[int, ...]:
        return (self.target,) if self.control is None else (self.control, self.target)

    def inverse(self) -> "Gate":
        if self.kind in ("RY", "RZ"):
            return Gate(self.kind, self.target, angle=-self.angle)
        return self


def ry(target: int, angle: float) -> Gate:
    return Gate("RY", target, angle=float(angle))


def rz(target: int, angle: float) -> Gate:
    return Gate("RZ", target, angle=float(angle))


def h(target: int) -> Gate:
    return Gate("H", target)


def cx(control: int, target: int) -> Gate:
    return Gate("CX", target, control=control)


@dataclass(frozen=True)
class CircuitDescription:
    n_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        _check_capacity(self.n_qubits)
        for g in self.gates:
            _check_indices(g, self.n_qubits)

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "CircuitDescription") -> "CircuitDescription":
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot concatenate circuits of different width")
        return CircuitDescription(self.n_qubits, self.gates + other.gates)

    def inverse(self) -> "CircuitDescription":
        """Gate-wise inverse: reversed order, negated rotation angles."""
        return CircuitDescription(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)))


@dataclass(frozen=True)
class OutcomeHistogram:
    counts: dict[str, int]
    shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not sum to shots")

    def count(self, bitstring: str) -> int:
        return self.counts.get(bitstring, 0)

    def frequency(self, bitstring: str) -> float:
        return self.count(bitstring) / self.shots


def _check_capacity(n_qubits: int) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


def _check_indices(gate: Gate, n_qubits: int) -> None:
    for q in gate.qubits():
        if not 0 <= q < n_qubits:
            raise QubitIndexError(f"qubit {q} out of range for {n_qubits}-qubit register")


def new_zero_state(n_qubits: int) -> StateVector:
    _check_capacity(n_qubits)
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def zero_batch(rows: int, n_qubits: int, dtype=np.complex128) -> np.ndarray:
    """``rows`` copies of |0...0> as a writable (rows, 2**n) array.

    ``dtype=float64`` is valid for circuits built from RY, H and CX only.
    """
    _check_capacity(n_qubits)
    states = np.zeros((rows, 1 << n_qubits), dtype=dtype)
    states[:, 0] = 1.0
    return states


def apply_gate_batch(states: np.ndarray, gate: Gate, angles: np.ndarray | None = None) -> None:
    """Apply ``gate`` to every row of ``states`` in place.

    ``angles`` overrides ``gate.angle`` with one angle per row, which lets a
    single structural gate carry per-sample data (feature maps).
    """
    core = _backend.core
    if gate.kind in ("RY", "RZ"):
        if angles is None:
            angles = np.full(states.shape[0], gate.angle, dtype=np.float64)
        else:
            angles = np.ascontiguousarray(angles, dtype=np.float64)
        if gate.kind == "RY":
            core.ry_batch(states, gate.target, angles)
        elif np.iscomplexobj(states):
            core.rz_batch(states, gate.target, angles)
        else:
            raise TypeError("RZ needs a complex state batch")
    elif gate.kind == "H":
        core.h_batch(states, gate.target)
    else:
        core.cx_batch(states, gate.control, gate.target)


def apply_circuit_batch(states: np.ndarray, gates: Iterable[Gate], row_angles=None) -> None:
    """Apply a gate list to every row of ``states`` in place.

    ``row_angles``, if given, runs parallel to ``gates``; a non-None entry
    replaces that rotation's angle with one angle per row.
    """
    gates = list(gates)
    if row_angles is None:
        row_angles = [None] * len(gates)
    elif len(row_angles) != len(gates):
        raise ValueError("row_angles must run parallel to gates")
    rows = states.shape[0]
    n = len(gates)
    kinds = np.empty(n, dtype=np.intc)
    qa = np.empty(n, dtype=np.intc)
    qb = np.zeros(n, dtype=np.intc)
    angles = np.zeros((n, rows), dtype=np.float64)
    for k, (g, ra) in enumerate(zip(gates, row_angles)):
        kinds[k] = GATE_KINDS.index(g.kind)
        if g.kind == "CX":
            qa[k], qb[k] = g.control, g.target
        else:
            qa[k] = g.target
        if ra is not None:
            angles[k] = ra
        elif g.angle is not None:
            angles[k] = g.angle
    _backend.core.circuit_batch(states, kinds, qa, qb, angles)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    _check_indices(gate, state.n_qubits)
    buf = state.amplitudes.copy().reshape(1, -1)
    apply_gate_batch(buf, gate)
    return StateVector(state.n_qubits, buf[0])


def apply_circuit(state: StateVector, circuit: CircuitDescription) -> StateVector:
    if circuit.n_qubits != state.n_qubits:
        raise ValueError(f"circuit acts on {circuit.n_qubits} qubits, state has {state.n_qubits}")
    buf = state.amplitudes.copy().reshape(1, -1)
    apply_circuit_batch(buf, circuit.gates)
    return StateVector(state.n_qubits, buf[0])


def probabilities(state: StateVector) -> np.ndarray:
    amps = state.amplitudes
    return amps.real ** 2 + amps.imag ** 2


def bitstring(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def sample_counts(state: StateVector, shots: int, rng_seed: int) -> OutcomeHistogram:
    """Draw ``shots`` computational-basis outcomes.

    Uses numpy's PCG64 stream seeded with ``rng_seed``; the histogram is one
    multinomial draw over the outcome probabilities, which is the same
    distribution as ``shots`` independent single measurements.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    counts = _multinomial(probabilities(state), shots, rng_seed)
    nz = np.flatnonzero(counts)
    return OutcomeHistogram({bitstring(int(k), state.n_qubits): int(counts[k]) for k in nz}, shots)


def _multinomial(probs: np.ndarray, shots: int, rng_seed: int) -> np.ndarray:
    p = np.clip(probs, 0.0, None)
    p = p / p.sum()
    return np.random.default_rng(rng_seed).multinomial(shots, p)


def inner_product(a: StateVector, b: StateVector) -> complex:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def z_signs(n_qubits: int, qubit: int) -> np.ndarray:
    """+1 where ``qubit`` is 0 in the basis index, -1 where it is 1."""
    idx = np.arange(1 << n_qubits)
    return 1.0 - 2.0 * ((idx >> qubit) & 1)


def expectation_z(state: StateVector, qubit: int) -> float:
    if not 0 <= qubit < state.n_qubits:
        raise QubitIndexError(f"qubit {qubit} out of range for {state.n_qubits}-qubit register")
    return float(probabilities(state) @ z_signs(state.n_qubits, qubit))


def batch_probabilities(states: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(states):
        return states.real ** 2 + states.imag ** 2
    return states ** 2


_SIGN_CACHE: dict[int, np.ndarray] = {}


def z_sign_matrix(n_qubits: int) -> np.ndarray:
    """(2**n, n) matrix whose column q is :func:`z_signs` for qubit q."""
    if n_qubits not in _SIGN_CACHE:
        _SIGN_CACHE[n_qubits] = np.stack([z_signs(n_qubits, q) for q in range(n_qubits)], axis=1)
    return _SIGN_CACHE[n_qubits]


def expectation_z_batch(states: np.ndarray, n_qubits: int) -> np.ndarray:
    """Per-row, per-qubit <Z>: returns shape (rows, n_qubits)."""
    return batch_probabilities(states) @ z_sign_matrix(n_qubits)


def states_close(a: StateVector, b: StateVector, atol: float = 1e-10) -> bool:
    return a.n_qubits == b.n_qubits and np.allclose(a.amplitudes, b.amplitudes, atol=atol, rtol=0)


__all__ = [
    "CapacityError",
    "CircuitDescription",
    "Gate",
    "OutcomeHistogram",
    "QubitIndexError",
    "StateVector",
    "apply_circuit",
    "apply_circuit_batch",
    "apply_gate",
    "apply_gate_batch",
    "cx",
    "expectation_z",
    "h",
    "inner_product",
    "new_zero_state",
    "probabilities",
    "ry",
    "rz",
    "sample_counts",
]
