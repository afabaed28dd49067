"""Independent reference implementations used only by the tests.

Nothing here shares code with the package under test: the QP oracle is
cvxopt's interior-point solver and the t-distribution oracle is mpmath
arbitrary-precision arithmetic, so agreement is meaningful evidence.
"""

import numpy as np


def dual_qp_reference(K, y, U):
    """Optimum of min 1/2 a'Qa - sum(a), 0 <= a <= U, y'a = 0 via cvxopt.

    A tiny ridge keeps the KKT system nonsingular when K is rank
    deficient (duplicated rows, fewer features than points); its effect
    on the reported objective is orders of magnitude below the test
    tolerances. Returns (alpha, objective) with the objective evaluated
    on the unridged Q.
    """
    from cvxopt import matrix, solvers

    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    n = len(y)
    Q = (y[:, None] * y[None, :]) * K
    scale = max(1.0, float(np.trace(Q)) / n)
    P = matrix(Q + 1e-10 * scale * np.eye(n))
    q = matrix(-np.ones(n))
    G = matrix(np.vstack([-np.eye(n), np.eye(n)]))
    h = matrix(np.concatenate([np.zeros(n), U]))
    A = matrix(y.reshape(1, n))
    b = matrix(np.zeros(1))

    saved = dict(solvers.options)
    solvers.options.update(
        {"show_progress": False, "abstol": 1e-10, "reltol": 1e-10,
         "feastol": 1e-10, "maxiters": 200}
    )
    try:
        sol = solvers.qp(P, q, G, h, A, b)
        if sol["status"] != "optimal":
            # fall back to the stock tolerances, still far tighter than
            # anything the tests assert
            solvers.options.update(
                {"abstol": 1e-7, "reltol": 1e-6, "feastol": 1e-7}
            )
            sol = solvers.qp(P, q, G, h, A, b)
    finally:
        solvers.options.clear()
        solvers.options.update(saved)
    if sol["status"] != "optimal":
        raise RuntimeError(f"reference QP did not converge: {sol['status']}")
    alpha = np.array(sol["x"]).ravel()
    alpha = np.clip(alpha, 0.0, U)
    objective = 0.5 * float(alpha @ (Q @ alpha)) - float(alpha.sum())
    return alpha, objective


def hinge_primal(w, b, X, y, U):
    """Weighted hinge objective 1/2 ||w||^2 + sum U_i max(0, 1 - y_i f_i)."""
    f = X @ np.asarray(w, dtype=np.float64) + b
    hinge = np.maximum(0.0, 1.0 - y * f)
    return 0.5 * float(np.dot(w, w)) + float(U @ hinge)


def random_problem(rng, n_max=20, d_max=3,
                   C_choices=(0.1, 1.0, 10.0, 100.0)):
    """A small random weighted binary SVM problem.

    Occasionally duplicates a row so the Gram matrix is singular; both
    classes are always present.
    """
    n = int(rng.integers(4, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    X = rng.normal(size=(n, d))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    X += 0.5 * y[:, None] * rng.normal(scale=1.0, size=(1, d))
    if rng.random() < 0.3:
        X[int(rng.integers(1, n))] = X[0]
    C = float(rng.choice(C_choices))
    w_neg = float(rng.uniform(0.3, 3.0))
    w_pos = float(rng.uniform(0.3, 3.0))
    U = np.where(y > 0, C * w_pos, C * w_neg)
    return X, y, U, C, w_neg, w_pos


def t_two_tailed_reference(t, df):
    """Two-tailed Student-t p-value via the regularized incomplete beta,
    evaluated in arbitrary precision."""
    import mpmath

    mpmath.mp.dps = 40
    tm = mpmath.mpf(repr(float(t)))
    dfm = mpmath.mpf(df)
    x = dfm / (dfm + tm * tm)
    p = mpmath.betainc(dfm / 2, mpmath.mpf(1) / 2, 0, x, regularized=True)
    return float(p)
