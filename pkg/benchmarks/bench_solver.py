"""Compare the compiled SMO kernel against the pure numpy fallback.

Runs both kernels on the same battery of dense dual problems, checks
that they agree bit for bit, and prints a timing table. Problem sizes
mimic the pairwise subproblems seen in practice: tens to hundreds of
sets, 61 standardized features, moderately overlapping classes with
asymmetric costs.

Usage:
    python3 benchmarks/bench_solver.py [--sizes 50,100,200,400]
                                       [--repeats 5] [--tol 1e-6]
"""

import argparse
import time

import numpy as np

from swayrater.solver import _smo_py

try:
    from swayrater.solver import _smo
except ImportError:
    _smo = None


def make_problem(rng, n, d=61, C=10.0):
    """A linearly-scored two-class problem with class-imbalanced costs."""
    y = np.where(rng.random(n) < 0.3, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    X = rng.normal(size=(n, d)) + 0.4 * y[:, None]
    K = X @ X.T
    n_pos = int((y > 0).sum())
    w_pos = n / (2.0 * n_pos)
    w_neg = n / (2.0 * (n - n_pos))
    U = np.where(y > 0, C * w_pos, C * w_neg)
    return K, y, U


def best_of(kernel, args, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = kernel(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="50,100,200,400")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--tol", type=float, default=1e-6)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]

    if _smo is None:
        print("compiled kernel not available in this build;"
              " timing the numpy fallback only")
    rng = np.random.default_rng(args.seed)
    budget = 10_000_000

    header = f"{'n':>6} {'iters':>8} {'python':>12} {'compiled':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        K, y, U = make_problem(rng, n)
        call = (K, y, U, args.tol, budget)
        t_py, ref = best_of(_smo_py.solve, call, args.repeats)
        line = f"{n:>6} {ref[2]:>8} {1e3 * t_py:>10.2f}ms"
        if _smo is not None:
            t_c, out = best_of(_smo.solve, call, args.repeats)
            if (out[0].tobytes() != ref[0].tobytes()
                    or out[1].tobytes() != ref[1].tobytes()
                    or out[2:] != ref[2:]):
                raise SystemExit(f"backends disagree at n={n}")
            line += f" {1e3 * t_c:>10.2f}ms {t_py / t_c:>7.1f}x"
        print(line)
    if _smo is not None:
        print("\nbackends agreed bit for bit on every problem")


if __name__ == "__main__":
    main()
