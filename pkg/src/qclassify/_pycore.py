"""Numpy fallback for the compiled core.

Same signatures and in-place semantics as ``_core.pyx``. The gate kernels
are vectorised over the batch with reshape views; the SMO loop is a Python
loop with numpy row updates, following the compiled solver step for step
(including first-index tie-breaking) so both backends walk the same path.
"""
from __future__ import annotations

import math

import numpy as np


def _pair_view(states: np.ndarray, qubit: int) -> tuple[np.ndarray, np.ndarray]:
    rows, dim = states.shape
    low = 1 << qubit
    view = states.reshape(rows, dim // (2 * low), 2, low)
    return view[:, :, 0, :], view[:, :, 1, :]


def ry_batch(states: np.ndarray, qubit: int, angles: np.ndarray) -> None:
    angles = np.asarray(angles, dtype=np.float64)
    if angles.shape[0] != states.shape[0]:
        raise ValueError("one angle per row required")
    c = np.cos(0.5 * angles)[:, None, None]
    s = np.sin(0.5 * angles)[:, None, None]
    a, b = _pair_view(states, qubit)
    a_old = a.copy()
    a *= c
    a -= s * b
    b *= c
    b += s * a_old


def rz_batch(states: np.ndarray, qubit: int, angles: np.ndarray) -> None:
    angles = np.asarray(angles, dtype=np.float64)
    if angles.shape[0] != states.shape[0]:
        raise ValueError("one angle per row required")
    c = np.cos(0.5 * angles)[:, None, None]
    s = np.sin(0.5 * angles)[:, None, None]
    a, b = _pair_view(states, qubit)
    a *= c - 1j * s
    b *= c + 1j * s


def h_batch(states: np.ndarray, qubit: int) -> None:
    norm = 1.0 / math.sqrt(2.0)
    a, b = _pair_view(states, qubit)
    a_old = a.copy()
    a += b
    a *= norm
    b *= -1.0
    b += a_old
    b *= norm


_CX_INDEX_CACHE: dict[tuple[int, int, int], tuple[np.ndarray, np.ndarray]] = {}


def _cx_indices(dim: int, control: int, target: int) -> tuple[np.ndarray, np.ndarray]:
    key = (dim, control, target)
    if key not in _CX_INDEX_CACHE:
        idx = np.arange(dim)
        src = idx[((idx >> control) & 1 == 1) & ((idx >> target) & 1 == 0)]
        _CX_INDEX_CACHE[key] = (src, src | (1 << target))
    return _CX_INDEX_CACHE[key]


def cx_batch(states: np.ndarray, control: int, target: int) -> None:
    src, dst = _cx_indices(states.shape[1], control, target)
    tmp = states[:, src]
    states[:, src] = states[:, dst]
    states[:, dst] = tmp


def circuit_batch(states: np.ndarray, kinds, qa, qb, angles) -> None:
    """Gate-by-gate twin of the compiled row-blocked circuit kernel."""
    kinds = np.asarray(kinds)
    angles = np.asarray(angles, dtype=np.float64)
    if not (len(qa) == len(qb) == kinds.shape[0] == angles.shape[0]):
        raise ValueError("gate arrays disagree in length")
    if kinds.shape[0] and angles.shape[1] != states.shape[0]:
        raise ValueError("angles must have one column per row")
    if np.any((kinds < 0) | (kinds > 3)):
        raise ValueError("unknown gate code")
    if not np.iscomplexobj(states) and np.any(kinds == 1):
        raise TypeError("RZ needs a complex state batch")
    for g, kind in enumerate(kinds):
        if kind == 0:
            ry_batch(states, int(qa[g]), angles[g])
        elif kind == 1:
            rz_batch(states, int(qa[g]), angles[g])
        elif kind == 2:
            h_batch(states, int(qa[g]))
        else:
            cx_batch(states, int(qa[g]), int(qb[g]))


def smo(K, y, C, tol, max_iter, alpha, grad, callback=None):
    """Numpy SMO with second-order working-pair selection.

    ``callback(alpha, grad)``, if given, runs after every pair update; the
    compiled twin has no such hook.
    """
    K = np.asarray(K)
    y = np.asarray(y)
    diag = np.diag(K).copy()
    pos = y > 0
    tau = 1e-12
    it = 0
    converged = False
    while it < max_iter:
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < C))
        minus_yg = -y * grad
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, minus_yg, -np.inf)))
        gmax = minus_yg[i]
        yg = y * grad
        gmax2 = np.max(np.where(low, yg, -np.inf))
        b = gmax + yg
        cand = low & (b > 0)
        if not cand.any() or gmax + gmax2 <= tol:
            converged = True
            break
        a = diag[i] + diag - 2.0 * K[i]
        a = np.where(a <= 0, tau, a)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        it += 1

        old_i, old_j = alpha[i], alpha[j]
        quad = diag[i] + diag[j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = tau
        ai, aj = old_i, old_j
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        di = (ai - old_i) * y[i]
        dj = (aj - old_j) * y[j]
        grad += y * (K[:, i] * di + K[:, j] * dj)
        if callback is not None:
            callback(alpha, grad)
    return it, converged
