"""Problem data for regularized bilinear saddle objectives.

The central object is :class:`SaddleProblem`, the max-min problem

    max over lam in Delta  min over w in Omega
        g(w) - h(lam) - w^T A lam

with g strongly convex in w, h strongly convex in lam, and a coupling
matrix A whose rows or columns are bounded in Euclidean norm.  Objectives
are described by :class:`ConvexFn`, which is plain data plus callbacks;
all algorithmic work (proxes, iterations) lives in :mod:`.solver`.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, UnsupportedProblemError
from .util import frozen_array

#: coordinates with magnitude at or below this count as zero everywhere a
#: support or an l0 count is taken
SPARSITY_EPS = 1e-9

QUADRATIC = "quadratic"
SEPARABLE = "separable"
CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``{x : lower <= x <= upper}``; entries may be inf."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = frozen_array(np.broadcast_arrays(self.lower, self.upper)[0])
        hi = frozen_array(np.broadcast_arrays(self.lower, self.upper)[1])
        if np.any(lo > hi):
            raise ValueError("box has lower > upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def project(self, x):
        return np.clip(x, self.lower, self.upper)

    def contains(self, x, atol=0.0):
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))


@dataclass(frozen=True, eq=False)
class ConvexFn:
    """A strongly convex objective part, described by kind plus data.

    Kinds
    -----
    quadratic
        ``f(x) = (modulus / 2) * ||x - center||_2^2``.
    separable
        ``f(x) = sum_i value1(x)_i`` with per-coordinate callbacks; used
        for sums of loss conjugates.  The callbacks clamp to the
        function's own domain, recorded in ``domain``.
    custom
        Explicit ``value_fn`` / ``grad_fn`` / ``prox_fn`` callbacks.  No
        closed forms are assumed; the prox callback must accept
        ``(v, step, l1_weight)``.

    ``modulus`` is the strong convexity constant and must be positive.
    ``smoothness`` is an optional gradient Lipschitz constant (None when
    not declared).
    """

    kind: str
    dim: int
    modulus: float
    smoothness: Optional[float] = None
    center: Optional[np.ndarray] = None
    domain: Optional[Box] = None
    value1: Optional[Callable] = None
    grad1: Optional[Callable] = None
    prox1: Optional[Callable] = None
    value_fn: Optional[Callable] = None
    grad_fn: Optional[Callable] = None
    prox_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in (QUADRATIC, SEPARABLE, CUSTOM):
            raise ValueError(f"unknown ConvexFn kind {self.kind!r}")
        if self.modulus <= 0:
            raise ValueError("strong convexity modulus must be positive")
        if self.kind == QUADRATIC:
            c = np.zeros(self.dim) if self.center is None else self.center
            c = frozen_array(c)
            if c.shape != (self.dim,):
                raise DimensionError("quadratic center has wrong length")
            object.__setattr__(self, "center", c)
            if self.smoothness is None:
                object.__setattr__(self, "smoothness", float(self.modulus))
        elif self.kind == SEPARABLE:
            if self.value1 is None or self.grad1 is None or self.prox1 is None:
                raise UnsupportedProblemError(
                    "separable ConvexFn needs value1, grad1 and prox1 callbacks")
        else:
            if self.value_fn is None or self.grad_fn is None or self.prox_fn is None:
                raise UnsupportedProblemError(
                    "custom ConvexFn needs value_fn, grad_fn and prox_fn callbacks")

    # -- evaluation ---------------------------------------------------------

    def value(self, x):
        x = np.asarray(x, dtype=float)
        self._check_dim(x)
        if self.kind == QUADRATIC:
            diff = x - self.center
            return 0.5 * self.modulus * float(diff @ diff)
        if self.kind == SEPARABLE:
            self._check_domain(x)
            return float(np.sum(self.value1(x)))
        return float(self.value_fn(x))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        self._check_dim(x)
        if self.kind == QUADRATIC:
            return self.modulus * (x - self.center)
        if self.kind == SEPARABLE:
            self._check_domain(x)
            return np.asarray(self.grad1(x), dtype=float)
        return np.asarray(self.grad_fn(x), dtype=float)

    def _check_dim(self, x):
        if x.shape != (self.dim,):
            raise DimensionError(
                f"expected vector of length {self.dim}, got shape {x.shape}")

    def _check_domain(self, x):
        if self.domain is not None and not self.domain.contains(x, atol=1e-12):
            raise ValueError("argument lies outside the function's domain")

    # -- factories ----------------------------------------------------------

    @staticmethod
    def quadratic(center, modulus):
        center = np.asarray(center, dtype=float)
        return ConvexFn(kind=QUADRATIC, dim=center.shape[0],
                        modulus=float(modulus), center=center)

    @staticmethod
    def separable(dim, modulus, value1, grad1, prox1, domain=None, smoothness=None):
        return ConvexFn(kind=SEPARABLE, dim=dim, modulus=float(modulus),
                        smoothness=smoothness, domain=domain,
                        value1=value1, grad1=grad1, prox1=prox1)

    @staticmethod
    def custom(dim, modulus, value_fn, grad_fn, prox_fn, smoothness=None):
        return ConvexFn(kind=CUSTOM, dim=dim, modulus=float(modulus),
                        smoothness=smoothness,
                        value_fn=value_fn, grad_fn=grad_fn, prox_fn=prox_fn)


def _norm_axis(A, axis):
    if sp.issparse(A):
        return np.sqrt(np.asarray(A.multiply(A).sum(axis=axis)).ravel())
    return np.linalg.norm(A, axis=axis)


def row_norms(A):
    return _norm_axis(A, 1)


def col_norms(A):
    return _norm_axis(A, 0)


@dataclass(frozen=True, eq=False)
class SaddleProblem:
    """max-min problem ``g(w) - h(lam) - w^T A lam`` with declared moduli.

    ``bound_style`` records which side of the coupling matrix is known to
    be bounded by one in Euclidean norm: "rows", "columns", or None when
    neither is declared.  A declared bound is checked at construction.
    """

    g: ConvexFn
    h: ConvexFn
    A: object  # (d, n) ndarray or scipy.sparse matrix
    domain_w: Optional[Box] = None
    domain_lambda: Optional[Box] = None
    bound_style: Optional[str] = None

    def __post_init__(self):
        A = self.A
        if not sp.issparse(A):
            A = frozen_array(A)
            if A.ndim != 2:
                raise DimensionError("coupling matrix must be 2-d")
            object.__setattr__(self, "A", A)
        if A.shape != (self.g.dim, self.h.dim):
            raise DimensionError(
                f"coupling matrix shape {A.shape} does not match "
                f"objective dims ({self.g.dim}, {self.h.dim})")
        if self.bound_style not in (None, "rows", "columns"):
            raise ValueError("bound_style must be 'rows', 'columns' or None")
        if self.bound_style == "rows" and row_norms(A).max() > 1 + 1e-9:
            raise ValueError("declared row bound violated: max row norm > 1")
        if self.bound_style == "columns" and col_norms(A).max() > 1 + 1e-9:
            raise ValueError("declared column bound violated: max column norm > 1")

    @property
    def d(self):
        return self.g.dim

    @property
    def n(self):
        return self.h.dim

    @property
    def alpha(self):
        """Strong convexity of the primal part."""
        return self.g.modulus

    @property
    def beta(self):
        """Strong convexity of the dual part."""
        return self.h.modulus


def kkt_residual(problem, w, lam):
    """Stationarity residuals ``(||grad g(w) - A lam||_inf, ||grad h(lam) + A^T w||_inf)``.

    These are the interior first-order conditions of the unregularized
    saddle objective; both vanish at an exact saddle point with the
    optimizers strictly inside their domains.  Recomputed from scratch,
    independent of any solver state.
    """
    w = np.asarray(w, dtype=float)
    lam = np.asarray(lam, dtype=float)
    r_w = problem.g.grad(w) - problem.A @ lam
    r_l = problem.h.grad(lam) + problem.A.T @ w
    return float(np.max(np.abs(r_w))), float(np.max(np.abs(r_l)))


@dataclass(frozen=True, eq=False)
class SolutionPair:
    """A candidate saddle point with residuals recomputed at construction."""

    w: np.ndarray
    lam: np.ndarray
    kkt_w: float
    kkt_lam: float
    iterations: int = 0

    @staticmethod
    def from_iterates(problem, w, lam, iterations=0):
        # residuals always come from (w, lam, problem), never from solver state
        r_w, r_l = kkt_residual(problem, w, lam)
        return SolutionPair(w=frozen_array(w), lam=frozen_array(lam),
                            kkt_w=r_w, kkt_lam=r_l, iterations=int(iterations))


@dataclass(frozen=True)
class SparsityStats:
    """Support size and norms of a vector at threshold ``eps``."""

    l0: int
    l1: float
    l2: float
    ratio: float  # l1 / l2, and 0.0 for the zero vector
    eps: float


def sparsity_stats(x, eps=SPARSITY_EPS):
    """Count coordinates with ``|x_i| > eps`` and report l1, l2 and l1/l2."""
    x = np.asarray(x, dtype=float)
    l0 = int(np.count_nonzero(np.abs(x) > eps))
    l1 = float(np.sum(np.abs(x)))
    l2 = float(np.linalg.norm(x))
    ratio = l1 / l2 if l2 > 0 else 0.0
    return SparsityStats(l0=l0, l1=l1, l2=l2, ratio=ratio, eps=float(eps))


def support(x, eps=SPARSITY_EPS):
    """Indices of coordinates with magnitude above ``eps``."""
    return np.flatnonzero(np.abs(np.asarray(x)) > eps)
