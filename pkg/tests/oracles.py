"""Independent reference implementations used only by the tests."""

import itertools

import numpy as np


def chord_error(y, J):
    """Total absolute error of linear interpolation through kept points ``J`` (np.interp based)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    t = np.arange(y.shape[1])
    return float(sum(np.abs(row - np.interp(t, J, row[list(J)])).sum() for row in y))


def brute_force_breakpoints(y, r):
    """Exhaustive minimum over all subsets; ties resolved by the lexicographically smallest J."""
    n = np.atleast_2d(y).shape[1]
    best, best_J = np.inf, None
    for inner in itertools.combinations(range(1, n - 1), r - 2):
        J = (0, *inner, n - 1)
        e = chord_error(y, J)
        if e < best - 1e-9:
            best, best_J = e, J
    return best, best_J


def quad_ramp_cost(a, b, p0, p1, delta, n=20001):
    """Numerical integral of a/2 P^2 + b P along a linear ramp (Simpson)."""
    from scipy.integrate import simpson

    s = np.linspace(0.0, 1.0, n)
    p = p0 + (p1 - p0) * s
    return float(delta * simpson(0.5 * a * p * p + b * p, x=s))
