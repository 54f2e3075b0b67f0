# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: batched gate application and the SMO dual solver.

Every function here has a numpy twin in ``_pycore`` with the same signature
and the same in-place semantics. Batches are C-contiguous ``(rows, 2**n)``
arrays, complex128 or (for circuits without RZ) float64; qubit 0 is the
least-significant bit of the index.
"""
from libc.math cimport cos, sin, sqrt, INFINITY

ctypedef double complex cplx

ctypedef fused amp_t:
    double
    double complex


def ry_batch(amp_t[:, ::1] states, int qubit, const double[::1] angles):
    cdef Py_ssize_t rows = states.shape[0]
    cdef Py_ssize_t half = states.shape[1] >> 1
    cdef Py_ssize_t low = (<Py_ssize_t>1 << qubit) - 1
    cdef Py_ssize_t bit = <Py_ssize_t>1 << qubit
    cdef Py_ssize_t r, k, i0, i1
    cdef double c, s
    cdef amp_t a, b
    if angles.shape[0] != rows:
        raise ValueError("one angle per row required")
    with nogil:
        for r in range(rows):
            c = cos(0.5 * angles[r])
            s = sin(0.5 * angles[r])
            for k in range(half):
                i0 = ((k & ~low) << 1) | (k & low)
                i1 = i0 | bit
                a = states[r, i0]
                b = states[r, i1]
                states[r, i0] = c * a - s * b
                states[r, i1] = s * a + c * b


def rz_batch(cplx[:, ::1] states, int qubit, const double[::1] angles):
    cdef Py_ssize_t rows = states.shape[0]
    cdef Py_ssize_t dim = states.shape[1]
    cdef Py_ssize_t bit = <Py_ssize_t>1 << qubit
    cdef Py_ssize_t r, i
    cdef double c, s
    cdef cplx lo_phase, hi_phase
    if angles.shape[0] != rows:
        raise ValueError("one angle per row required")
    with nogil:
        for r in range(rows):
            c = cos(0.5 * angles[r])
            s = sin(0.5 * angles[r])
            lo_phase = c - 1j * s
            hi_phase = c + 1j * s
            for i in range(dim):
                if i & bit:
                    states[r, i] = states[r, i] * hi_phase
                else:
                    states[r, i] = states[r, i] * lo_phase


def h_batch(amp_t[:, ::1] states, int qubit):
    cdef Py_ssize_t rows = states.shape[0]
    cdef Py_ssize_t half = states.shape[1] >> 1
    cdef Py_ssize_t low = (<Py_ssize_t>1 << qubit) - 1
    cdef Py_ssize_t bit = <Py_ssize_t>1 << qubit
    cdef Py_ssize_t r, k, i0, i1
    cdef double norm = 1.0 / sqrt(2.0)
    cdef amp_t a, b
    with nogil:
        for r in range(rows):
            for k in range(half):
                i0 = ((k & ~low) << 1) | (k & low)
                i1 = i0 | bit
                a = states[r, i0]
                b = states[r, i1]
                states[r, i0] = norm * (a + b)
                states[r, i1] = norm * (a - b)


def cx_batch(amp_t[:, ::1] states, int control, int target):
    cdef Py_ssize_t rows = states.shape[0]
    cdef Py_ssize_t dim = states.shape[1]
    cdef Py_ssize_t cbit = <Py_ssize_t>1 << control
    cdef Py_ssize_t tbit = <Py_ssize_t>1 << target
    cdef Py_ssize_t r, i, j
    cdef amp_t tmp
    with nogil:
        for r in range(rows):
            for i in range(dim):
                if (i & cbit) and not (i & tbit):
                    j = i | tbit
                    tmp = states[r, i]
                    states[r, i] = states[r, j]
                    states[r, j] = tmp


# gate codes shared with qstate.GATE_CODES
DEF G_RY = 0
DEF G_RZ = 1
DEF G_H = 2
DEF G_CX = 3


cdef inline void _ry_row(amp_t* v, Py_ssize_t dim, Py_ssize_t bit, double c, double s) noexcept nogil:
    cdef Py_ssize_t base, k
    cdef amp_t a, b
    cdef amp_t* p
    cdef amp_t* q
    base = 0
    while base < dim:
        p = v + base
        q = p + bit
        for k in range(bit):
            a = p[k]
            b = q[k]
            p[k] = c * a - s * b
            q[k] = s * a + c * b
        base += 2 * bit


cdef inline void _h_row(amp_t* v, Py_ssize_t dim, Py_ssize_t bit, double norm) noexcept nogil:
    cdef Py_ssize_t base, k
    cdef amp_t a, b
    cdef amp_t* p
    cdef amp_t* q
    base = 0
    while base < dim:
        p = v + base
        q = p + bit
        for k in range(bit):
            a = p[k]
            b = q[k]
            p[k] = norm * (a + b)
            q[k] = norm * (a - b)
        base += 2 * bit


cdef inline void _cx_row(amp_t* v, Py_ssize_t dim, Py_ssize_t cbit, Py_ssize_t tbit) noexcept nogil:
    # swap the target pair inside every block where the control bit is set
    cdef Py_ssize_t base, k
    cdef amp_t tmp
    cdef amp_t* p
    cdef amp_t* q
    base = 0
    while base < dim:
        for k in range(tbit):
            if (base + k) & cbit:
                p = v + base + k
                q = p + tbit
                tmp = p[0]
                p[0] = q[0]
                q[0] = tmp
        base += 2 * tbit


def circuit_batch(amp_t[:, ::1] states, const int[::1] kinds, const int[::1] qa, const int[::1] qb,
                  const double[:, ::1] angles):
    """Apply a whole gate list to each row before moving to the next row.

    ``kinds`` holds gate codes (RY=0, RZ=1, H=2, CX=3); ``qa`` is the target
    (control for CX), ``qb`` the CX target. ``angles`` is (n_gates, rows);
    rows for non-rotation gates are ignored. Keeping one row hot in cache
    for the full circuit beats streaming the batch once per gate.
    """
    cdef Py_ssize_t rows = states.shape[0]
    cdef Py_ssize_t dim = states.shape[1]
    cdef Py_ssize_t n_gates = kinds.shape[0]
    cdef Py_ssize_t r, g, i, bit
    cdef double c, s, norm = 1.0 / sqrt(2.0)
    cdef amp_t* v
    cdef cplx lo_phase, hi_phase
    if qa.shape[0] != n_gates or qb.shape[0] != n_gates or angles.shape[0] != n_gates:
        raise ValueError("gate arrays disagree in length")
    if n_gates and angles.shape[1] != rows:
        raise ValueError("angles must have one column per row")
    for g in range(n_gates):
        if kinds[g] < G_RY or kinds[g] > G_CX:
            raise ValueError(f"unknown gate code {kinds[g]}")
        if amp_t is double and kinds[g] == G_RZ:
            raise TypeError("RZ needs a complex state batch")
    with nogil:
        for r in range(rows):
            v = &states[r, 0]
            for g in range(n_gates):
                bit = <Py_ssize_t>1 << qa[g]
                if kinds[g] == G_RY:
                    c = cos(0.5 * angles[g, r])
                    s = sin(0.5 * angles[g, r])
                    _ry_row(v, dim, bit, c, s)
                elif kinds[g] == G_CX:
                    _cx_row(v, dim, bit, <Py_ssize_t>1 << qb[g])
                elif kinds[g] == G_H:
                    _h_row(v, dim, bit, norm)
                else:
                    if amp_t is cplx:
                        c = cos(0.5 * angles[g, r])
                        s = sin(0.5 * angles[g, r])
                        lo_phase = c - 1j * s
                        hi_phase = c + 1j * s
                        for i in range(dim):
                            if i & bit:
                                v[i] = v[i] * hi_phase
                            else:
                                v[i] = v[i] * lo_phase


def smo(const double[:, ::1] K, const double[::1] y, double C, double tol,
        long max_iter, double[::1] alpha, double[::1] grad):
    """Solve min 0.5 a'Qa - e'a, 0 <= a <= C, y'a = 0 with Q_ij = y_i y_j K_ij.

    ``alpha`` and ``grad`` hold the starting point (feasible) and its
    gradient on entry and the solution on exit. Returns
    ``(iterations, converged)``.
    """
    cdef Py_ssize_t n = K.shape[0]
    cdef Py_ssize_t t, i, j
    cdef long it = 0
    cdef bint converged = False
    cdef double gmax, gmax2, obj_min, b, a, quad, delta, diff, total, v
    cdef double old_i, old_j, di, dj
    cdef double tau = 1e-12
    with nogil:
        while it < max_iter:
            gmax = -INFINITY
            i = -1
            for t in range(n):
                if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                    v = -y[t] * grad[t]
                    if v > gmax:
                        gmax = v
                        i = t
            gmax2 = -INFINITY
            j = -1
            obj_min = INFINITY
            for t in range(n):
                if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                    v = y[t] * grad[t]
                    if v > gmax2:
                        gmax2 = v
                    if i >= 0:
                        b = gmax + v
                        if b > 0:
                            a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                            if a <= 0:
                                a = tau
                            if -(b * b) / a < obj_min:
                                obj_min = -(b * b) / a
                                j = t
            if i < 0 or j < 0 or gmax + gmax2 <= tol:
                converged = True
                break
            it += 1
            old_i = alpha[i]
            old_j = alpha[j]
            quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if quad <= 0:
                quad = tau
            if y[i] != y[j]:
                delta = (-grad[i] - grad[j]) / quad
                diff = alpha[i] - alpha[j]
                alpha[i] += delta
                alpha[j] += delta
                if diff > 0:
                    if alpha[j] < 0:
                        alpha[j] = 0
                        alpha[i] = diff
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0
                        alpha[j] = -diff
                if diff > 0:
                    if alpha[i] > C:
                        alpha[i] = C
                        alpha[j] = C - diff
                else:
                    if alpha[j] > C:
                        alpha[j] = C
                        alpha[i] = C + diff
            else:
                delta = (grad[i] - grad[j]) / quad
                total = alpha[i] + alpha[j]
                alpha[i] -= delta
                alpha[j] += delta
                if total > C:
                    if alpha[i] > C:
                        alpha[i] = C
                        alpha[j] = total - C
                else:
                    if alpha[j] < 0:
                        alpha[j] = 0
                        alpha[i] = total
                if total > C:
                    if alpha[j] > C:
                        alpha[j] = C
                        alpha[i] = total - C
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0
                        alpha[j] = total
            di = (alpha[i] - old_i) * y[i]
            dj = (alpha[j] - old_j) * y[j]
            for t in range(n):
                grad[t] += y[t] * (K[t, i] * di + K[t, j] * dj)
    return it, bool(converged)
