"""Regularization prescriptions and recovery diagnostics.

Each prescription variant (T1 and T3 through T7) lower-bounds the two l1
weights so that, with probability at least ``1 - 3 delta`` over the
projection draw, the sketched solution recovers the sparse reference
pair on its guaranteed side:

    l2 error   <= 3 gamma sqrt(s) / modulus
    l1 error   <= 12 gamma s / modulus
    l1/l2 ratio of the error <= 4 sqrt(s)

The variants differ in which side is sketched, which side is guaranteed,
which norm bound on the coupling matrix they assume, and whether the
reference pair is exactly or only approximately optimal.  The formulas
take the concentration constant ``c`` and the failure level ``delta`` as
inputs; all logarithms are natural.
"""

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import BudgetExceededError, ConfigError
from .model import col_norms, row_norms, sparsity_stats
from .sketch import DEFAULT_C
from .solver import minimize_reg_linear

THEOREMS = ("T1", "T3", "T4", "T5", "T6", "T7")

#: theorem id -> (sketched side, guaranteed variable)
_THEOREM_SHAPE = {
    "T1": ("right", "w"),
    "T3": ("left", "lambda"),
    "T4": ("right", "w"),
    "T5": ("right", "lambda"),
    "T6": ("left", "w"),
    "T7": ("right", "w"),
}


def theorem_shape(theorem):
    """(sketched side, guaranteed variable) for a prescription id."""
    if theorem not in _THEOREM_SHAPE:
        raise ValueError(f"unknown theorem {theorem!r}, expected one of {THEOREMS}")
    return _THEOREM_SHAPE[theorem]


def minimum_sketch_size(c=DEFAULT_C, delta=0.05):
    """Smallest sketch size the guarantees support: ``ceil(4 c log(4/delta))``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return int(math.ceil(4.0 * c * math.log(4.0 / delta)))


@dataclass(frozen=True, eq=False)
class OracleQuantities:
    """Solution-dependent norms the prescriptions consume.

    These involve the unknown pair, so in experiments they come from the
    planted ground truth; a practical deployment would plug in estimates.
    """

    d: int
    n: int
    s_w: int
    s_lambda: int
    alpha: float
    beta: float
    norm_w: float  # ||w*||_2
    norm_lambda: float  # ||lam*||_2
    norm_At_w: float  # ||A^T w*||_2
    norm_A_lambda: float  # ||A lam*||_2

    @staticmethod
    def from_instance(instance):
        # planted instances carry the exact pair and declared supports;
        # erm instances provide a reference pair whose supports we measure
        problem = instance.problem
        w = getattr(instance, "w_star", None)
        lam = getattr(instance, "lambda_star", None)
        if w is None:
            w = instance.w_planted
        if lam is None:
            lam = instance.lambda_ref
        s_w = getattr(instance, "s_w", None)
        s_lambda = getattr(instance, "s_lambda", None)
        if s_w is None:
            s_w = sparsity_stats(w).l0
        if s_lambda is None:
            s_lambda = sparsity_stats(lam).l0
        A = problem.A
        return OracleQuantities(
            d=problem.d, n=problem.n,
            s_w=int(s_w), s_lambda=int(s_lambda),
            alpha=problem.alpha, beta=problem.beta,
            norm_w=float(np.linalg.norm(w)),
            norm_lambda=float(np.linalg.norm(lam)),
            norm_At_w=float(np.linalg.norm(A.T @ w)),
            norm_A_lambda=float(np.linalg.norm(A @ lam)))


@dataclass(frozen=True)
class RegPrescription:
    """The two l1 weights a variant prescribes, with their provenance."""

    theorem: str
    gamma_w: float
    gamma_lambda: float
    m: int
    c: float
    delta: float
    side: str  # which side of the coupling is sketched
    guaranteed: str  # "w" or "lambda"
    zeta: Optional[float] = None
    stationarity_gap: Optional[float] = None
    neighbor_distance: Optional[float] = None
    smoothness: Optional[float] = None

    def scaled(self, factor):
        """Both weights multiplied by ``factor`` (for sweep exploration)."""
        return RegPrescription(
            theorem=self.theorem, gamma_w=self.gamma_w * factor,
            gamma_lambda=self.gamma_lambda * factor, m=self.m, c=self.c,
            delta=self.delta, side=self.side, guaranteed=self.guaranteed,
            zeta=self.zeta, stationarity_gap=self.stationarity_gap,
            neighbor_distance=self.neighbor_distance, smoothness=self.smoothness)


def _cover_log(s, dim):
    # support-covering contribution; zero support contributes nothing
    if s == 0:
        return 0.0
    return 16.0 * s * math.log(9.0 * dim / (8.0 * s))


def _rate(c, m, log_term):
    return math.sqrt((c / m) * log_term)


def prescribe_regularization(theorem, oracle, m, c=DEFAULT_C, delta=0.05,
                             zeta=None, stationarity_gap=None,
                             neighbor_distance=None, smoothness=None,
                             enforce_minimum=True):
    """Theorem-exact lower bounds for the two l1 weights.

    ``zeta`` (a restricted operator norm of the coupling, see
    :func:`zeta_restricted`) is required by T5 and T6.
    ``stationarity_gap`` is required by T4; ``neighbor_distance`` and
    ``smoothness`` by T7.  Weights scale linearly in these certificates.
    Sketch sizes below :func:`minimum_sketch_size` void the guarantee and
    are rejected unless ``enforce_minimum`` is switched off for
    exploratory sweeps.
    """
    if theorem not in _THEOREM_SHAPE:
        raise ValueError(f"unknown prescription variant {theorem!r}")
    if m <= 0:
        raise ValueError("sketch size must be positive")
    if enforce_minimum and m < minimum_sketch_size(c, delta):
        raise ConfigError(
            f"sketch size {m} is below the guarantee floor "
            f"{minimum_sketch_size(c, delta)}; pass enforce_minimum=False "
            "to explore anyway")
    side, guaranteed = _THEOREM_SHAPE[theorem]
    o = oracle
    log_n = math.log(4.0 * o.n / delta)
    log_d = math.log(4.0 * o.d / delta)

    if theorem in ("T1", "T4", "T7"):
        gamma_lambda = 2.0 * o.norm_At_w * _rate(c, m, log_n)
        cover = _cover_log(o.s_lambda, o.n)
        gamma_w = (2.0 * o.norm_lambda * _rate(c, m, log_d)
                   + (6.0 * gamma_lambda * math.sqrt(o.s_lambda) / o.beta)
                   * (1.0 + 7.0 * _rate(c, m, log_d + cover)))
        if theorem == "T4":
            if stationarity_gap is None:
                raise ConfigError("T4 needs the stationarity_gap certificate")
            gamma_w += 2.0 * stationarity_gap
            gamma_lambda += 2.0 * stationarity_gap
        if theorem == "T7":
            if neighbor_distance is None or smoothness is None:
                raise ConfigError(
                    "T7 needs neighbor_distance and smoothness certificates")
            bump = 2.0 * (1.0 + smoothness) * neighbor_distance
            gamma_w += bump
            gamma_lambda += bump
    elif theorem == "T3":
        gamma_w = 2.0 * o.norm_A_lambda * _rate(c, m, log_d)
        cover = _cover_log(o.s_w, o.d)
        gamma_lambda = (2.0 * o.norm_w * _rate(c, m, log_n)
                        + (6.0 * gamma_w * math.sqrt(o.s_w) / o.alpha)
                        * (1.0 + 7.0 * _rate(c, m, log_n + cover)))
    elif theorem == "T5":
        if zeta is None:
            raise ConfigError("T5 needs the restricted norm certificate zeta")
        gamma_w = 2.0 * o.norm_lambda * _rate(c, m, log_d)
        cover = _cover_log(o.s_w, o.d)
        gamma_lambda = (2.0 * o.norm_At_w * _rate(c, m, log_n)
                        + (6.0 * gamma_w * math.sqrt(o.s_w) / o.alpha)
                        * (1.0 + 7.0 * zeta * _rate(c, m, log_n + cover)))
    else:  # T6
        if zeta is None:
            raise ConfigError("T6 needs the restricted norm certificate zeta")
        gamma_lambda = 2.0 * o.norm_w * _rate(c, m, log_n)
        cover = _cover_log(o.s_lambda, o.n)
        gamma_w = (2.0 * o.norm_A_lambda * _rate(c, m, log_d)
                   + (6.0 * gamma_lambda * math.sqrt(o.s_lambda) / o.beta)
                   * (1.0 + 7.0 * zeta * _rate(c, m, log_d + cover)))

    return RegPrescription(theorem=theorem, gamma_w=float(gamma_w),
                           gamma_lambda=float(gamma_lambda), m=int(m),
                           c=float(c), delta=float(delta), side=side,
                           guaranteed=guaranteed, zeta=zeta,
                           stationarity_gap=stationarity_gap,
                           neighbor_distance=neighbor_distance,
                           smoothness=smoothness)


@dataclass(frozen=True)
class RecoveryBounds:
    """Error bounds implied by a prescription on its guaranteed side."""

    side: str  # "w" or "lambda"
    l2: float
    l1: float
    ratio: float


def recovery_bounds(prescription, oracle, side=None):
    """The l2, l1 and ratio bounds for ``side`` (default: guaranteed side)."""
    side = side or prescription.guaranteed
    if side == "w":
        s, modulus, gamma = oracle.s_w, oracle.alpha, prescription.gamma_w
    elif side == "lambda":
        s, modulus, gamma = oracle.s_lambda, oracle.beta, prescription.gamma_lambda
    else:
        raise ValueError("side must be 'w' or 'lambda'")
    root_s = math.sqrt(s)
    return RecoveryBounds(side=side, l2=3.0 * gamma * root_s / modulus,
                          l1=12.0 * gamma * s / modulus,
                          ratio=4.0 * root_s)


# -- restricted operator norms ----------------------------------------------

#: largest number of support subsets the exact mode will enumerate
ZETA_ENUMERATION_BUDGET = 1_000_000


def zeta_restricted(A, s, side="columns", mode="exact"):
    """Smallest constant bounding ``A`` (or ``A^T``) on s-sparse inputs.

    side "columns" treats inputs in the column space (``||A z||`` over
    ``||z||_0 <= s``); side "rows" the transposed map.  mode "exact"
    enumerates all supports and takes the largest top singular value of
    the corresponding submatrix; it refuses to enumerate more than
    ``ZETA_ENUMERATION_BUDGET`` subsets.  mode "bound" returns the
    always-valid relaxation ``sqrt(s) * max single norm``.  ``s`` is
    capped at the available dimension; ``s == 0`` gives zero.
    """
    if sp.issparse(A):
        A = A.toarray()
    A = np.asarray(A, dtype=float)
    if side == "columns":
        norms = col_norms(A)
        gram = A.T @ A
    elif side == "rows":
        norms = row_norms(A)
        gram = A @ A.T
    else:
        raise ValueError("side must be 'columns' or 'rows'")
    dim = norms.shape[0]
    s = int(min(s, dim))
    if s < 0:
        raise ValueError("sparsity level must be nonnegative")
    if s == 0:
        return 0.0
    if mode == "bound":
        return float(math.sqrt(s) * norms.max())
    if mode != "exact":
        raise ValueError("mode must be 'exact' or 'bound'")
    count = math.comb(dim, s)
    if count > ZETA_ENUMERATION_BUDGET:
        raise BudgetExceededError(
            f"{count} supports exceed the enumeration budget; use mode='bound'")
    best = 0.0
    for subset in combinations(range(dim), s):
        sub = gram[np.ix_(subset, subset)]
        top = np.linalg.eigvalsh(sub)[-1]
        best = max(best, top)
    return float(math.sqrt(max(best, 0.0)))


# -- projection-draw diagnostics --------------------------------------------

@dataclass(frozen=True, eq=False)
class RhoDiagnostics:
    """Realized distortion quantities for one projection draw.

    ``rho_lambda`` and ``rho_w`` are the quantities whose doubled values
    the corresponding l1 weights must dominate for the support-recovery
    argument to go through on this draw; the ``gamma_ok_*`` flags report
    whether the supplied weights do.  For a right sketch ``rho_lambda``
    is the simple distortion term and ``rho_w`` the coupled one (it
    involves the partial-optimization pseudo solution); for a left
    sketch the roles mirror.
    """

    rho_w: float
    rho_lambda: float
    gamma_ok_w: bool
    gamma_ok_lambda: bool
    pseudo_solution: np.ndarray


def rho_diagnostics(sketched, w_star, lambda_star, gamma_w, gamma_lambda):
    """Evaluate the per-draw weight conditions at the reference pair."""
    base = sketched.base
    A = base.A
    R = sketched.R.entries
    w_star = np.asarray(w_star, dtype=float)
    lambda_star = np.asarray(lambda_star, dtype=float)

    if sketched.side == "right":
        u = A.T @ w_star
        rho_lambda = float(np.max(np.abs(R @ (R.T @ u) - u)))
        # pseudo problem: the dual subproblem at the true primal point
        lin = sketched.coupling_apply_t(w_star)
        lam_tilde = minimize_reg_linear(base.h, lin, gamma_lambda)
        resid = lambda_star - R @ (R.T @ lambda_star)
        moved = R @ (R.T @ (lambda_star - lam_tilde))
        rho_w = float(np.max(np.abs(A @ resid)) + np.max(np.abs(A @ moved)))
        pseudo = lam_tilde
    elif sketched.side == "left":
        u = A @ lambda_star
        rho_w = float(np.max(np.abs(R @ (R.T @ u) - u)))
        # pseudo problem: the primal subproblem at the true dual point
        lin = -sketched.coupling_apply(lambda_star)
        w_tilde = minimize_reg_linear(base.g, lin, gamma_w)
        resid = w_star - R @ (R.T @ w_star)
        moved = R @ (R.T @ (w_star - w_tilde))
        rho_lambda = float(np.max(np.abs(A.T @ resid)) + np.max(np.abs(A.T @ moved)))
        pseudo = w_tilde
    else:
        raise ValueError("sketched problem has an unknown side")

    return RhoDiagnostics(rho_w=rho_w, rho_lambda=rho_lambda,
                          gamma_ok_w=bool(gamma_w >= 2.0 * rho_w),
                          gamma_ok_lambda=bool(gamma_lambda >= 2.0 * rho_lambda),
                          pseudo_solution=pseudo)


def theorem2_bound(gamma_lambda, s_lambda, beta, R, A, w_hat, w_star):
    """Dual-side error bound from the primal error and the draw's distortion.

    ``3 gamma_lambda sqrt(s_lambda) / beta + (2 / beta)
    (1 + ||R R^T - I||_2) ||A^T (w_hat - w_star)||_2``.  The projection
    Gram matrix is materialized, so this is a diagnostic for moderate
    dual dimensions (at most 2000).
    """
    entries = R.entries if hasattr(R, "entries") else np.asarray(R)
    n = entries.shape[0]
    if n > 2000:
        raise BudgetExceededError(
            "spectral norm of the projection Gram needs n <= 2000")
    gram_dev = entries @ entries.T - np.eye(n)
    spec = float(np.linalg.norm(gram_dev, 2))
    tail = np.linalg.norm(A.T @ (np.asarray(w_hat) - np.asarray(w_star)))
    return float(3.0 * gamma_lambda * math.sqrt(s_lambda) / beta
                 + (2.0 / beta) * (1.0 + spec) * tail)
