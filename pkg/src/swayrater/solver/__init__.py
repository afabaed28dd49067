"""Dual SMO solver with a compiled core and a pure numpy fallback.

The compiled extension (built from _smo.pyx) is preferred when it
imported cleanly; otherwise the numpy kernel is used. Both are written
to the same arithmetic, so swapping backends never changes results, only
speed. Set the environment variable SWAYRATER_PURE_PYTHON=1 before
import to force the fallback (useful for benchmarking and equivalence
tests, see benchmarks/bench_solver.py).

Stopping combines the kernels' maximal-violating-pair rule (m - M <=
tol) with a periodic relative-duality-gap check done here, between
kernel chunks. The gap check rescues ill-conditioned problems (large
cost with contradictory labels) whose dual value converges long before
the KKT gap closes. Both checks run identically for either backend, so
backend equivalence is preserved.
"""

from __future__ import annotations

import os

import numpy as np

from . import _smo_py

_impl = _smo_py
BACKEND = "python"

if os.environ.get("SWAYRATER_PURE_PYTHON", "") not in ("1", "true", "yes", "on"):
    try:
        from . import _smo as _smo_ext

        _impl = _smo_ext
        BACKEND = "compiled"
    except ImportError:
        pass


def backend_name() -> str:
    """Which kernel is active, "compiled" or "python"."""
    return BACKEND


def optimal_intercept(y, U, f):
    """Intercept minimizing the weighted hinge sum for fixed scores f.

    The objective sum_t U_t * max(0, 1 - y_t (f_t + b)) is convex
    piecewise linear in b with breakpoints y_t - f_t; its slope rises by
    U_t at each breakpoint, so the minimum sits at the first breakpoint
    where the accumulated slope turns non-negative.
    """
    breakpoints = y - f
    order = np.argsort(breakpoints, kind="stable")
    slope = -float(U[y > 0.0].sum())
    b = float(breakpoints[order[0]])
    for idx in order:
        b = float(breakpoints[idx])
        slope += float(U[idx])
        if slope >= 0.0:
            break
    return b


def relative_duality_gap(K, y, U, alpha):
    """(primal - dual) / (1 + |primal|) for the weighted-hinge problem.

    The primal is evaluated at w(alpha) with the intercept chosen
    optimally for that w, which makes the bound as tight as the current
    alpha allows.
    """
    ay = alpha * y
    f = K @ ay
    quad = 0.5 * float(ay @ f)
    dual = float(alpha.sum()) - quad
    b = optimal_intercept(y, U, f)
    hinge = np.maximum(0.0, 1.0 - y * (f + b))
    primal = quad + float(U @ hinge)
    return (primal - dual) / (1.0 + abs(primal))


def _restricted_minimum(K, y, U, free, at_upper):
    """Minimize the dual over the free variables with the rest pinned.

    Pinned variables sit at 0 or U; the free block is an equality-
    constrained QP whose KKT system is solved directly. Returns
    (alpha_free, nu) or None when the solve degenerates.
    """
    m = int(free.sum())
    a_bound = np.where(at_upper, U, 0.0)
    # (Q a_bound - 1) over all rows; its free part is the linear term.
    qb = (K @ (a_bound * y)) * y - 1.0
    yF = y[free]
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = K[np.ix_(free, free)] * yF[:, None] * yF[None, :]
    A[:m, m] = yF
    A[m, :m] = yF
    rhs = np.concatenate([-qb[free], [-float(y[at_upper] @ U[at_upper])]])
    try:
        sol, _, _, _ = np.linalg.lstsq(A, rhs, rcond=None)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    return sol[:m], float(sol[m])


def _free_set_jump(K, y, U, alpha, G, tol: float, max_steps: int):
    """Walk to the exact constrained optimum from the current iterate.

    Primal active-set descent on the dual QP, seeded with the iterate's
    bound structure: step toward the working-set optimum until a box
    wall blocks, pin the blocker, and release one pinned variable at a
    time when its multiplier sign is wrong. Every step is a monotone
    feasible descent, so the walk can finish a solve outright once pair
    updates (or a warm start) have roughed out the bound structure,
    cutting out the long tail of clipped steps that ill-conditioned
    large-cost problems suffer. The result is adopted only when it does
    not increase the dual objective; on any degeneracy the iterate is
    returned unchanged and plain pair updates continue.
    """
    a = alpha.copy()
    eps = 1e-12 * (1.0 + U)
    at_upper = a >= U - eps
    at_lower = (a <= eps) & ~at_upper
    free = ~(at_upper | at_lower)
    ay = a * y
    Kay = K @ ay
    g = Kay * y - 1.0
    f0 = 0.5 * float(ay @ Kay) - float(a.sum())
    step_tol = 1e-10 * (1.0 + float(U.max()))

    done = False
    for _ in range(max_steps):
        if not free.any():
            # Corner point: optimal iff some multiplier separates the
            # pinned-low (may only increase) and pinned-high (may only
            # decrease) reduced gradients.
            cg = -y * g
            up_best = np.where(at_lower, cg, -np.inf)
            dn_best = np.where(at_upper, cg, np.inf)
            i = int(np.argmax(up_best))
            j = int(np.argmin(dn_best))
            if up_best[i] - dn_best[j] <= tol:
                done = True
                break
            at_lower[i] = False
            at_upper[j] = False
            free[i] = free[j] = True
            continue
        res = _restricted_minimum(K, y, U, free, at_upper)
        if res is None:
            return alpha, G, False
        aF, nu = res
        idx = np.flatnonzero(free)
        p = aF - a[idx]
        if float(np.max(np.abs(p))) <= step_tol:
            # Stationary on the working set; release the worst pinned
            # variable whose multiplier has the wrong sign, if any.
            viol = np.where(at_lower, -(g + nu * y),
                            np.where(at_upper, g + nu * y, -np.inf))
            k = int(np.argmax(viol))
            if viol[k] <= 0.5 * tol:
                done = True
                break
            at_lower[k] = at_upper[k] = False
            free[k] = True
            continue
        if not float(g[idx] @ p) < 0.0:
            # Degenerate block (inconsistent KKT system); give up.
            return alpha, G, False
        room = np.full(p.shape, np.inf)
        pos = p > 0.0
        neg = p < 0.0
        room[pos] = (U[idx[pos]] - a[idx[pos]]) / p[pos]
        room[neg] = -a[idx[neg]] / p[neg]
        t = min(1.0, float(room.min()))
        if t > 0.0:
            a[idx] += t * p
            g = g + (K[:, idx] @ ((t * p) * y[idx])) * y
        hit_lo = a[idx] <= eps[idx]
        hit_up = a[idx] >= U[idx] - eps[idx]
        if t < 1.0 and not hit_lo.any() and not hit_up.any():
            # The blocker must leave the free set or the walk stalls.
            hit_lo = np.zeros(p.shape, dtype=bool)
            hit_lo[int(np.argmin(room))] = True
        at_lower[idx[hit_lo & ~hit_up]] = True
        at_upper[idx[hit_up]] = True
        free[idx[hit_lo | hit_up]] = False
    if not done:
        return alpha, G, False

    cand = np.where(at_upper, U, 0.0)
    cand[free] = a[free]
    cy = cand * y
    Kcy = K @ cy
    f_new = 0.5 * float(cy @ Kcy) - float(cand.sum())
    if not f_new <= f0:
        return alpha, G, False
    return cand, Kcy * y - 1.0, True


def solve(K, y, U, tol: float, max_iter: int, alpha0=None, G0=None):
    """Solve the box-constrained SVM dual; see _smo_py.solve for the contract.

    Converged means either stopping rule was met within max_iter total
    coordinate updates. Between chunks the wrapper also tries a closed-
    form jump on the current free set; an accepted jump is re-validated
    by the kernel's own KKT check on the next chunk.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    U = np.ascontiguousarray(U, dtype=np.float64)
    n = K.shape[0]
    # Gap checks cost O(n^2); a chunk of coordinate updates costs
    # O(chunk * n), so chunk >> n keeps the check overhead marginal.
    chunk = max(20_000, 16 * n)

    alpha = alpha0
    G = G0
    done = 0
    while True:
        budget = min(chunk, max_iter - done)
        alpha, G, it, converged = _impl.solve(K, y, U, tol, budget, alpha, G)
        done += it
        if converged:
            return alpha, G, done, True
        if relative_duality_gap(K, y, U, alpha) <= tol:
            return alpha, G, done, True
        if done >= max_iter:
            return alpha, G, done, False
        alpha, G, _ = _free_set_jump(K, y, U, alpha, G, tol, 4 * n + 100)
