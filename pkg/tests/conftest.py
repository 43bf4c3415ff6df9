"""Shared oracles for the test suite.

Everything here is deliberately naive: grid scans, finite differences,
dense SVDs, explicit enumeration.  Tests compare the package against
these, never against itself.
"""

import numpy as np


def finite_diff_grad(fn, x, h=1e-6):
    """Central-difference gradient, one coordinate at a time."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g


def golden_min(fn, lo, hi, iters=200):
    """Golden-section minimizer for a scalar unimodal function."""
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def prox_oracle_1d(value1, v, step, l1_weight=0.0, lo=None, hi=None,
                   span=50.0):
    """Scalar prox by golden-section over a wide bracket.

    Minimizes ``value1(t) + l1_weight |t| + (t - v)^2 / (2 step)`` over
    ``[lo, hi]`` (defaulting to a wide interval around ``v``).
    """
    if lo is None:
        lo = v - span
    if hi is None:
        hi = v + span

    def objective(t):
        return value1(t) + l1_weight * abs(t) + (t - v) ** 2 / (2.0 * step)

    # the objective is strictly convex, so unimodal on any interval
    return golden_min(objective, lo, hi)


def top_singular_value(A):
    return float(np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)[0])


def rng(*key):
    return np.random.default_rng(list(key))
