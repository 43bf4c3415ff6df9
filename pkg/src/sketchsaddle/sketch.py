"""Randomized projections and sketched couplings.

A projection ``R`` has entries drawn iid from a zero mean, unit variance
distribution and then scaled by ``1 / sqrt(m)``, so that ``||R^T x||^2``
concentrates around ``||x||^2`` for any fixed ``x``:

    Pr{ (1 - eps) ||x||^2 <= ||R^T x||^2 <= (1 + eps) ||x||^2 }
        >= 1 - 2 exp(-m eps^2 / c),    0 < eps <= 1/2,

with a distribution constant ``c`` that :func:`calibrate_c` estimates
empirically.  Sketching a saddle problem replaces the coupling ``A`` by
a factored product through ``R`` on one side; the factored form is kept
so coupling applications cost O(dm + nm) and the full d-by-n matrix is
never formed.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError
from .solver import operator_norm_factored
from .util import derive_rng, frozen_array

DISTRIBUTIONS = ("gaussian", "rademacher", "database_friendly")

#: default distribution constant in the concentration exponent; a
#: conservative classical value, replaceable by a calibrated one
DEFAULT_C = 8.0


def _sample_entries(rng, shape, distribution):
    """Unscaled iid entries with mean zero and unit variance."""
    if distribution == "gaussian":
        return rng.standard_normal(shape)
    if distribution == "rademacher":
        return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
    if distribution == "database_friendly":
        # +sqrt(3) w.p. 1/6, 0 w.p. 2/3, -sqrt(3) w.p. 1/6
        u = rng.random(shape)
        root3 = np.sqrt(3.0)
        return np.where(u < 1.0 / 6.0, root3,
                        np.where(u < 1.0 / 3.0, -root3, 0.0))
    raise ValueError(f"unknown distribution {distribution!r}")


@dataclass(frozen=True, eq=False)
class ProjectionMatrix:
    """A rows-by-m projection with its provenance (distribution, seed)."""

    entries: np.ndarray
    distribution: str
    seed: object
    m: int

    def __post_init__(self):
        e = frozen_array(self.entries)
        if e.ndim != 2 or e.shape[1] != self.m:
            raise DimensionError("projection entries must be rows x m")
        object.__setattr__(self, "entries", e)

    @property
    def rows(self):
        return self.entries.shape[0]

    def apply_t(self, x):
        """``R^T x``, the m-dimensional image of ``x``."""
        return self.entries.T @ x

    def apply(self, y):
        """``R y`` for an m-vector ``y``."""
        return self.entries @ y


def make_projection(rows, m, distribution, seed):
    """Draw a seeded rows-by-m projection, entries scaled by ``1/sqrt(m)``.

    ``distribution`` is one of "gaussian", "rademacher",
    "database_friendly", or "identity" (the latter requires
    ``rows == m`` and bypasses scaling; it exists so sketched code paths
    can be reduced to exact ones in tests).  ``seed`` may be an int or a
    tuple of ints.
    """
    if rows <= 0 or m <= 0:
        raise ValueError("projection dimensions must be positive")
    if distribution == "identity":
        if rows != m:
            raise DimensionError("identity projection needs rows == m")
        entries = np.eye(m)
    else:
        key = seed if isinstance(seed, (tuple, list)) else (seed,)
        rng = derive_rng(*key)
        entries = _sample_entries(rng, (rows, m), distribution) / np.sqrt(m)
    return ProjectionMatrix(entries=entries, distribution=distribution,
                            seed=seed, m=m)


@dataclass(frozen=True, eq=False)
class SketchedProblem:
    """A saddle problem with one side of the coupling replaced by a sketch.

    side = "right": ``A_hat = A R`` (d x m) and the coupling is
    ``A_hat R^T``; the primal support is what the companion guarantees
    recover.  side = "left": ``A_hat = R^T A`` (m x n) and the coupling
    is ``R A_hat``.  Applications are kept factored.
    """

    base: object
    R: ProjectionMatrix
    side: str
    A_hat: np.ndarray

    def __post_init__(self):
        if self.side not in ("right", "left"):
            raise ValueError("side must be 'right' or 'left'")
        object.__setattr__(self, "A_hat", frozen_array(self.A_hat))
        object.__setattr__(self, "_norm_cache", None)

    @property
    def m(self):
        return self.R.m

    def coupling_apply(self, lam):
        """Product of the sketched coupling with a dual vector."""
        if self.side == "right":
            return self.A_hat @ (self.R.entries.T @ lam)
        return self.R.entries @ (self.A_hat @ lam)

    def coupling_apply_t(self, w):
        """Product of the transposed sketched coupling with a primal vector."""
        if self.side == "right":
            return self.R.entries @ (self.A_hat.T @ w)
        return self.A_hat.T @ (self.R.entries.T @ w)

    def coupling_norm(self, iters=500, seed=0):
        """Top singular value of the factored coupling, cached."""
        if self._norm_cache is None:
            n = self.base.h.dim
            val = operator_norm_factored(self.coupling_apply,
                                         self.coupling_apply_t, n,
                                         iters=iters, seed=seed)
            object.__setattr__(self, "_norm_cache", val)
        return self._norm_cache


def apply_sketch(problem, R, side="right"):
    """Sketch one side of ``problem``'s coupling matrix with ``R``.

    The right side sketches the dual dimension (``R`` is n x m), the
    left side the primal dimension (``R`` is d x m).
    """
    A = problem.A
    if side == "right":
        if R.rows != problem.n:
            raise DimensionError(
                f"right sketch needs R with {problem.n} rows, got {R.rows}")
        A_hat = A @ R.entries
    elif side == "left":
        if R.rows != problem.d:
            raise DimensionError(
                f"left sketch needs R with {problem.d} rows, got {R.rows}")
        A_hat = R.entries.T @ A
    else:
        raise ValueError("side must be 'right' or 'left'")
    return SketchedProblem(base=problem, R=R, side=side, A_hat=np.asarray(A_hat))


# -- concentration diagnostics ----------------------------------------------

def jl_failure_rate(distribution, n, m, eps, trials, seed=0, x=None):
    """Fraction of projection draws that distort ``||x||^2`` by more than ``eps``.

    ``x`` defaults to a fixed dense unit vector derived from ``seed``.
    Draws are batched but the stream is fully determined by ``seed``.
    """
    if not 0 < eps <= 0.5:
        raise ValueError("eps must lie in (0, 1/2]")
    if x is None:
        rng_x = derive_rng(seed, 0x78)
        x = rng_x.standard_normal(n)
        x = x / np.linalg.norm(x)
    else:
        x = np.asarray(x, dtype=float)
        if x.shape != (n,):
            raise DimensionError("test vector has wrong length")
    target = float(x @ x)

    rng = derive_rng(seed, 0x6a6c)
    failures = 0
    chunk = max(1, int(1e7 / (n * m)))
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        S = _sample_entries(rng, (t, n, m), distribution)
        y = np.einsum('tnm,n->tm', S, x) / np.sqrt(m)
        sq = np.einsum('tm,tm->t', y, y)
        failures += int(np.count_nonzero((sq > (1 + eps) * target)
                                         | (sq < (1 - eps) * target)))
        done += t
    return failures / trials


def inner_product_distortion(R, u, v):
    """``|u^T R R^T v - u^T v|`` evaluated through the factored products."""
    ru = R.entries.T @ np.asarray(u, dtype=float)
    rv = R.entries.T @ np.asarray(v, dtype=float)
    return float(abs(ru @ rv - float(np.asarray(u) @ np.asarray(v))))


#: cells (m, eps) with measurable failure rates around the working range
DEFAULT_CALIBRATION_GRID = ((60, 0.5), (120, 0.5), (200, 0.5),
                            (60, 0.4), (120, 0.4), (200, 0.4),
                            (60, 0.3), (120, 0.3))


def calibrate_c(distribution, grid=DEFAULT_CALIBRATION_GRID, trials=30_000,
                seed=0, n=64, margin=2.0, floor=0.5):
    """Estimate the concentration constant ``c`` for a distribution.

    For each grid cell ``(m, eps)`` the empirical failure rate ``f`` over
    ``trials`` draws yields the smallest per-cell constant
    ``m eps^2 / log(2 / f)`` making the bound hold; cells with no
    observed failures impose no constraint.  The maximum over cells
    (floored away from zero) is inflated by ``margin`` as a Monte Carlo
    safety factor.  Grids too easy to show any failure return
    ``floor * margin``.
    """
    c0 = floor
    for i, (m, eps) in enumerate(grid):
        f = jl_failure_rate(distribution, n, m, eps, trials,
                            seed=derive_rng(seed, i).integers(2 ** 31))
        if f <= 0.0:
            continue
        c_cell = m * eps ** 2 / np.log(2.0 / f)
        c0 = max(c0, c_cell)
    return float(margin * c0)
