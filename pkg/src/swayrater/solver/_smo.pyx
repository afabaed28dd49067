# cython: language_level=3
"""Compiled SMO kernel, the hot path of every SVM fit.

Mirrors _smo_py.solve operation for operation; see that module's
docstring for the contract. The build compiles with -ffp-contract=off so
multiply-add sequences round exactly like the numpy fallback and the two
backends return bit-identical solutions. Keep the two in sync when
editing either.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

cdef double TAU = 1e-12
cdef double INF = float("inf")


@cython.boundscheck(False)
@cython.wraparound(False)
@cython.initializedcheck(False)
def solve(K, y, U, double tol, long long max_iter, alpha0=None, G0=None):
    """Same contract as _smo_py.solve; returns (alpha, G, n_iter, converged)."""
    K_arr = np.ascontiguousarray(K, dtype=np.float64)
    y_arr = np.ascontiguousarray(y, dtype=np.float64)
    U_arr = np.ascontiguousarray(U, dtype=np.float64)
    cdef Py_ssize_t n = K_arr.shape[0]
    Kd_arr = np.ascontiguousarray(np.diag(K_arr))
    if alpha0 is None:
        alpha_arr = np.zeros(n)
        G_arr = np.full(n, -1.0)
    else:
        alpha_arr = np.array(alpha0, dtype=np.float64, order="C", copy=True)
        G_arr = np.array(G0, dtype=np.float64, order="C", copy=True)

    cdef double[:, ::1] Kv = K_arr
    cdef double[::1] yv = y_arr
    cdef double[::1] Uv = U_arr
    cdef double[::1] Kd = Kd_arr
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] G = G_arr

    cdef long long it = 0
    cdef bint converged = False
    cdef Py_ssize_t i, j, t
    cdef bint in_up, in_low
    cdef double gt, m, M, Kii, bt, at, objt, best_obj
    cdef double quad, old_i, old_j, Ui, Uj, yi, yj, Gi, Gj
    cdef double delta, diff, total, ai, aj, ci, cj
    cdef double[::1] Ki
    cdef double[::1] Kj

    while it < max_iter:
        # First coordinate: maximal -y*G over the "up" set, first index wins.
        m = -INF
        i = -1
        for t in range(n):
            if yv[t] > 0.0:
                in_up = alpha[t] < Uv[t]
            else:
                in_up = alpha[t] > 0.0
            if in_up:
                gt = -(yv[t] * G[t])
                if gt > m:
                    m = gt
                    i = t
        if i < 0:
            converged = True
            break

        # Second coordinate: best second-order decrease over the "low" set;
        # M tracks the minimal -y*G for the stopping rule.
        Ki = Kv[i]
        Kii = Kd[i]
        M = INF
        best_obj = INF
        j = -1
        for t in range(n):
            if yv[t] > 0.0:
                in_low = alpha[t] > 0.0
            else:
                in_low = alpha[t] < Uv[t]
            if in_low:
                gt = -(yv[t] * G[t])
                if gt < M:
                    M = gt
                bt = m - gt
                if bt > 0.0:
                    at = (Kii + Kd[t]) - 2.0 * Ki[t]
                    if at <= 0.0:
                        at = TAU
                    objt = -(bt * bt) / at
                    if objt < best_obj:
                        best_obj = objt
                        j = t
        if m - M <= tol:
            converged = True
            break
        if j < 0:
            converged = True
            break

        Kj = Kv[j]
        quad = (Kii + Kd[j]) - 2.0 * Ki[j]
        if quad <= 0.0:
            quad = TAU
        old_i = alpha[i]
        old_j = alpha[j]
        Ui = Uv[i]
        Uj = Uv[j]
        yi = yv[i]
        yj = yv[j]
        Gi = G[i]
        Gj = G[j]

        # Unconstrained two-variable step, then projection back onto the
        # box while preserving y_i a_i + y_j a_j.
        if yi != yj:
            delta = (-Gi - Gj) / quad
            diff = old_i - old_j
            ai = old_i + delta
            aj = old_j + delta
            if diff > 0.0:
                if aj < 0.0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = -diff
            if diff > Ui - Uj:
                if ai > Ui:
                    ai = Ui
                    aj = Ui - diff
            else:
                if aj > Uj:
                    aj = Uj
                    ai = Uj + diff
        else:
            delta = (Gi - Gj) / quad
            total = old_i + old_j
            ai = old_i - delta
            aj = old_j + delta
            if total > Ui:
                if ai > Ui:
                    ai = Ui
                    aj = total - Ui
            else:
                if aj < 0.0:
                    aj = 0.0
                    ai = total
            if total > Uj:
                if aj > Uj:
                    aj = Uj
                    ai = total - Uj
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = total

        alpha[i] = ai
        alpha[j] = aj
        ci = yi * (ai - old_i)
        cj = yj * (aj - old_j)
        for t in range(n):
            G[t] += (yv[t] * Ki[t]) * ci + (yv[t] * Kj[t]) * cj
        it += 1

    return alpha_arr, G_arr, int(it), converged
