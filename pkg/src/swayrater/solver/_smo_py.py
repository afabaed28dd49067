"""Pure numpy SMO kernel for the weighted-hinge linear SVM dual.

Solves  min_a  1/2 a'Qa - sum(a)  s.t.  0 <= a_i <= U_i,  y'a = 0,
with Q_ij = y_i y_j K_ij, by two-coordinate updates with second-order
working-set selection and the maximal-violating-pair stopping rule
(m - M <= tol).

This module and the compiled kernel in _smo.pyx are written
operation-for-operation against each other: same expression trees, same
strict comparisons, same first-occurrence tie-breaking. Given identical
inputs they return bit-identical (alpha, G). Keep the two in sync when
editing either.
"""

from __future__ import annotations

import numpy as np

TAU = 1e-12


def solve(K, y, U, tol: float, max_iter: int, alpha0=None, G0=None):
    """Run the dual solver.

    K: (n, n) Gram matrix of the training rows, float64.
    y: (n,) labels in {-1.0, +1.0}.
    U: (n,) per-example upper bounds (cost times class weight).
    alpha0, G0: optional feasible starting point with its exact dual
    gradient, e.g. the state of an interrupted run or a solution for a
    nearby cost; both or neither must be given.

    Returns (alpha, G, n_iter, converged) where G is the final dual
    gradient Q alpha - 1.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    U = np.ascontiguousarray(U, dtype=np.float64)
    n = K.shape[0]
    Kd = np.ascontiguousarray(np.diag(K))
    Ky = K * y  # Ky[i, t] = K[i, t] * y[t], reused in gradient updates

    if alpha0 is None:
        alpha = np.zeros(n)
        G = np.full(n, -1.0)
    else:
        alpha = np.array(alpha0, dtype=np.float64, order="C", copy=True)
        G = np.array(G0, dtype=np.float64, order="C", copy=True)
    pos = y > 0.0
    it = 0
    converged = False

    while it < max_iter:
        g = -(y * G)
        up = np.where(pos, alpha < U, alpha > 0.0)
        low = np.where(pos, alpha > 0.0, alpha < U)

        gup = np.where(up, g, -np.inf)
        i = int(np.argmax(gup))
        m = float(gup[i])
        glow = np.where(low, g, np.inf)
        M = float(np.min(glow))
        if m - M <= tol:
            converged = True
            break

        Ki = K[i]
        b_vec = m - g
        a_vec = (Kd[i] + Kd) - 2.0 * Ki
        a_vec = np.where(a_vec > 0.0, a_vec, TAU)
        eligible = low & (b_vec > 0.0)
        obj = np.where(eligible, -(b_vec * b_vec) / a_vec, np.inf)
        j = int(np.argmin(obj))
        if not eligible[j]:
            converged = True
            break

        quad = float(a_vec[j])
        old_i = float(alpha[i])
        old_j = float(alpha[j])
        Ui = float(U[i])
        Uj = float(U[j])
        yi = float(y[i])
        yj = float(y[j])
        Gi = float(G[i])
        Gj = float(G[j])

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
        G += Ky[i] * ci + Ky[j] * cj
        it += 1

    return alpha, G, it, converged
