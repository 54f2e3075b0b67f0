"""Compiled core vs numpy fallback on the hot kernels.

    python3 benchmarks/bench_core.py [--repeat 5] [--qubits 8] [--rows 256] [--svm-n 400]

Reports the best-of-``repeat`` wall time per kernel for each available
backend and the speedup of the compiled core.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from qclassify import _backend
from qclassify.encode import FeatureMapSpec
from qclassify.qstate import GATE_KINDS, zero_batch
from qclassify.svm import rbf_kernel
from qclassify.vqc import AnsatzSpec, build_ansatz


def best(fn, repeat: int) -> float:
    fn()  # warm caches
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def circuit_arrays(n_qubits: int, rows: int, rng):
    spec = AnsatzSpec(n_qubits, 4)
    gates = build_ansatz(rng.uniform(-np.pi, np.pi, spec.n_params), spec).gates
    kinds = np.array([GATE_KINDS.index(g.kind) for g in gates], dtype=np.intc)
    qa = np.array([g.control if g.kind == "CX" else g.target for g in gates], dtype=np.intc)
    qb = np.array([g.target for g in gates], dtype=np.intc)
    angles = np.array([[g.angle or 0.0] * rows for g in gates])
    return kinds, qa, qb, angles


def cases(args, rng):
    n, rows = args.qubits, args.rows
    angles = rng.uniform(-np.pi, np.pi, rows)
    kinds, qa, qb, circ_angles = circuit_arrays(n, rows, rng)
    X = rng.normal(size=(args.svm_n, 4))
    y = np.where(X[:, 0] + 0.5 * rng.normal(size=args.svm_n) > 0, 1.0, -1.0)
    K = np.ascontiguousarray(rbf_kernel(X, X, 0.25) + 1e-8 * np.eye(args.svm_n))

    def ry(core):
        s = zero_batch(rows, n, dtype=np.float64)
        return lambda: [core.ry_batch(s, q, angles) for q in range(n)]

    def cx(core):
        s = zero_batch(rows, n, dtype=np.float64)
        return lambda: [core.cx_batch(s, q, (q + 1) % n) for q in range(n)]

    def rz(core):
        s = zero_batch(rows, n)
        return lambda: [core.rz_batch(s, q, angles) for q in range(n)]

    def circuit(core):
        s = zero_batch(rows, n, dtype=np.float64)
        return lambda: core.circuit_batch(s, kinds, qa, qb, circ_angles)

    def smo(core):
        def run():
            alpha, grad = np.zeros(args.svm_n), -np.ones(args.svm_n)
            core.smo(K, y, 1.0, 1e-3, 100_000, alpha, grad)
        return run

    return [(f"ry_batch x{n} ({rows} rows, real)", ry), (f"rz_batch x{n} ({rows} rows, complex)", rz),
            (f"cx_batch x{n} ({rows} rows, real)", cx),
            (f"circuit_batch {kinds.shape[0]} gates ({rows} rows)", circuit),
            (f"smo n={args.svm_n}", smo)]


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--qubits", type=int, default=8)
    p.add_argument("--rows", type=int, default=256)
    p.add_argument("--svm-n", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    names = _backend.available()
    print(f"backends: {', '.join(names)} (default {_backend.NAME})")
    print(f"{'kernel':42s}" + "".join(f"{b:>12s}" for b in names) + ("     speedup" if len(names) > 1 else ""))
    for label, make in cases(args, np.random.default_rng(args.seed)):
        times = [best(make(_backend.get(b)), args.repeat) for b in names]
        line = f"{label:42s}" + "".join(f"{t * 1e3:10.3f}ms" for t in times)
        if len(times) > 1:
            line += f"{times[1] / times[0]:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
