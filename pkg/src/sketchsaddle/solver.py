"""Proximal primal-dual solver for the regularized saddle objectives.

The iteration is the classic two-prox scheme with primal extrapolation:
dual ascent prox against the extrapolated primal, then a primal descent
prox, with steps ``tau * sigma * L**2 <= 1`` for the coupling operator
norm ``L``.  Both objective parts are strongly convex here, so the fixed
step variant already converges linearly; an accelerated schedule with
``theta < 1`` is available behind an option.

The coupling enters only through matrix-vector products, so the same
loop serves the exact problem (``A`` itself) and sketched problems whose
coupling is applied in factored form.
"""

import time
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ConfigError, UnsupportedProblemError
from .model import (CUSTOM, QUADRATIC, SEPARABLE, SolutionPair, kkt_residual)
from .util import derive_rng

#: effective step used when a prox is asked for the bare minimizer of
#: f(x) + gamma * |x|_1 + c^T x; large enough that the proximity term is
#: far below solver tolerances
_PROX_FLAT_STEP = 1e12


# -- proximal maps ----------------------------------------------------------

def soft_threshold(x, threshold):
    """Shrink ``x`` toward zero: ``sign(x) * max(|x| - threshold, 0)``."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def prox_quadratic_plus_l1(v, center, modulus, gamma, step, box=None):
    """Prox of ``step * ((modulus/2)||x - center||^2 + gamma ||x||_1)`` at ``v``.

    Closed form: soft-threshold the weighted average of ``v`` and the
    quadratic's center, then clamp to the box (the objective is separable
    and convex per coordinate, so clamping is exact).
    """
    denom = 1.0 / step + modulus
    z = (v / step + modulus * center) / denom
    out = soft_threshold(z, gamma / denom)
    if box is not None:
        out = box.project(out)
    return out


def prox_step(fn, v, step, l1_weight=0.0, box=None):
    """Dispatch ``argmin_x ||x - v||^2 / (2 step) + fn(x) + l1_weight ||x||_1``.

    The box is honored in closed form for quadratics.  Separable
    functions clamp to their own recorded domain, which by construction
    equals the problem domain.  Custom functions must embed any
    constraint in their prox callback.
    """
    if fn.kind == QUADRATIC:
        return prox_quadratic_plus_l1(v, fn.center, fn.modulus, l1_weight, step, box)
    if fn.kind == SEPARABLE:
        return np.asarray(fn.prox1(v, step, l1_weight), dtype=float)
    if box is not None:
        raise UnsupportedProblemError(
            "custom ConvexFn cannot combine an external box with its prox")
    return np.asarray(fn.prox_fn(v, step, l1_weight), dtype=float)


def minimize_reg_linear(fn, linear, l1_weight=0.0):
    """``argmin_x fn(x) + l1_weight ||x||_1 + linear^T x`` over fn's domain.

    Solved exactly for quadratics; otherwise via a prox evaluation with a
    step long enough that the proximity term is negligible.
    """
    linear = np.asarray(linear, dtype=float)
    if fn.kind == QUADRATIC:
        return soft_threshold(fn.center - linear / fn.modulus, l1_weight / fn.modulus)
    return prox_step(fn, -linear * _PROX_FLAT_STEP, _PROX_FLAT_STEP, l1_weight)


# -- stationarity measure ---------------------------------------------------

def composite_residual(x, smooth_grad, l1_weight=0.0, box=None):
    """Distance from stationarity for ``min f(x) + l1_weight||x||_1 + I_box``.

    ``smooth_grad`` is the gradient of the smooth part at ``x``.  Per
    coordinate the subdifferential of the nonsmooth part is an interval;
    the residual is the largest distance from ``-smooth_grad_i`` to that
    interval.  Reduces to ``||smooth_grad||_inf`` with no regularizer and
    no box.
    """
    x = np.asarray(x, dtype=float)
    t = -np.asarray(smooth_grad, dtype=float)
    gamma = float(l1_weight)

    # subgradient interval of gamma * |x_i|
    lo_g = np.where(x > 0, gamma, np.where(x < 0, -gamma, -gamma))
    hi_g = np.where(x > 0, gamma, np.where(x < 0, -gamma, gamma))

    if box is not None:
        at_lower = x <= box.lower + 1e-12
        at_upper = x >= box.upper - 1e-12
        lo_g = np.where(at_lower, -np.inf, lo_g)
        hi_g = np.where(at_upper, np.inf, hi_g)

    return float(np.max(np.maximum(np.maximum(lo_g - t, t - hi_g), 0.0)))


# -- operator norm ----------------------------------------------------------

def operator_norm_factored(apply_fwd, apply_adj, dim_in, iters=500, rtol=1e-6, seed=0):
    """Top singular value of a linear map given as a (forward, adjoint) pair.

    Power iteration on the normal operator from a seeded random start,
    stopped when the singular value estimate stabilizes to ``rtol`` or
    after ``iters`` rounds.
    """
    rng = derive_rng(seed, dim_in, 0x6f70)
    v = rng.standard_normal(dim_in)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        u = apply_fwd(v)
        sigma_new = float(np.linalg.norm(u))
        if sigma_new == 0.0:
            return 0.0
        v = apply_adj(u / sigma_new)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return sigma_new
        v /= nv
        if abs(sigma_new - sigma) <= rtol * max(sigma_new, 1e-30):
            return sigma_new
        sigma = sigma_new
    return sigma


def operator_norm(A, iters=500, rtol=1e-6, seed=0):
    """Top singular value of a dense or sparse matrix by power iteration."""
    return operator_norm_factored(lambda v: A @ v, lambda u: A.T @ u,
                                  A.shape[1], iters=iters, rtol=rtol, seed=seed)


# -- options and report -----------------------------------------------------

@dataclass(frozen=True)
class SolverOptions:
    """Knobs for the primal-dual loop; defaults favor correctness.

    ``tolerance=None`` picks 1e-8 for exact solves and 1e-6 for sketched
    solves.  ``step_primal``/``step_dual`` override the automatic
    balanced steps; both must then be given and satisfy the step-size
    contract for the operator norm at hand.  ``accelerated`` switches to
    the strongly convex extrapolation schedule.
    """

    max_iterations: int = 200_000
    tolerance: Optional[float] = None
    check_every: int = 50
    step_primal: Optional[float] = None
    step_dual: Optional[float] = None
    accelerated: bool = False
    power_iters: int = 500
    seed: int = 0

    def __post_init__(self):
        if (self.step_primal is None) != (self.step_dual is None):
            raise ConfigError("override either both steps or neither")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be positive")
        if self.check_every < 1:
            raise ConfigError("check_every must be positive")
        if self.tolerance is not None and self.tolerance <= 0:
            raise ConfigError("tolerance must be positive")


@dataclass(frozen=True)
class SolveReport:
    """What the solver did: convergence flag, residuals, effort, steps."""

    converged: bool
    iterations: int
    residual_w: float
    residual_lam: float
    tolerance: float
    wall_time_ms: float
    operator_norm: float
    step_primal: float
    step_dual: float
    theta: float

    def to_dict(self):
        return asdict(self)


# -- main loop --------------------------------------------------------------

def _initial_point(dim, box):
    x = np.zeros(dim)
    return box.project(x) if box is not None else x


def _pd_solve(g, h, domain_w, domain_lambda, apply_M, apply_Mt, norm_M,
              gamma_w, gamma_lambda, options, default_tol):
    tol = options.tolerance if options.tolerance is not None else default_tol
    alpha, beta = g.modulus, h.modulus
    L = max(norm_M, 1e-30)

    if options.step_primal is not None or options.step_dual is not None:
        if options.step_primal is None or options.step_dual is None:
            raise ConfigError("override either both steps or neither")
        tau, sigma = float(options.step_primal), float(options.step_dual)
        if tau * sigma * L ** 2 > 1.0 + 1e-12:
            raise ConfigError("step sizes violate tau * sigma * L^2 <= 1")
    else:
        # balanced steps: tau * alpha == sigma * beta, tau * sigma * L^2 = 1
        tau = np.sqrt(beta / alpha) / L
        sigma = np.sqrt(alpha / beta) / L

    theta = 1.0
    if options.accelerated:
        theta = 1.0 / (1.0 + 2.0 * np.sqrt(alpha * beta) / L)

    w = _initial_point(g.dim, domain_w)
    lam = _initial_point(h.dim, domain_lambda)
    w_bar = w.copy()

    start = time.perf_counter()
    res_w = res_l = np.inf
    converged = False
    iterations = 0
    for k in range(options.max_iterations):
        lam = prox_step(h, lam - sigma * apply_Mt(w_bar), sigma,
                        gamma_lambda, domain_lambda)
        w_new = prox_step(g, w + tau * apply_M(lam), tau, gamma_w, domain_w)
        w_bar = w_new + theta * (w_new - w)
        w = w_new
        iterations = k + 1
        if iterations % options.check_every == 0 or iterations == options.max_iterations:
            res_w = composite_residual(w, g.grad(w) - apply_M(lam),
                                       gamma_w, domain_w)
            res_l = composite_residual(lam, h.grad(lam) + apply_Mt(w),
                                       gamma_lambda, domain_lambda)
            if res_w <= tol and res_l <= tol:
                converged = True
                break
    wall_ms = (time.perf_counter() - start) * 1e3

    report = SolveReport(converged=converged, iterations=iterations,
                         residual_w=res_w, residual_lam=res_l, tolerance=tol,
                         wall_time_ms=wall_ms, operator_norm=L,
                         step_primal=tau, step_dual=sigma, theta=theta)
    return w, lam, report


def solve_exact(problem, options=None):
    """Solve the unregularized saddle problem with the full coupling matrix.

    Returns ``(SolutionPair, SolveReport)``.  A run that exhausts its
    iteration budget returns normally with ``report.converged`` False;
    the pair's residual fields are always recomputed from the problem.
    """
    options = options or SolverOptions()
    A = problem.A
    norm_A = operator_norm(A, iters=options.power_iters, seed=options.seed)
    w, lam, report = _pd_solve(
        problem.g, problem.h, problem.domain_w, problem.domain_lambda,
        lambda v: A @ v, lambda u: A.T @ u, norm_A,
        0.0, 0.0, options, default_tol=1e-8)
    pair = SolutionPair.from_iterates(problem, w, lam, report.iterations)
    return pair, report


def solve_sketched(sketched, gamma_w, gamma_lambda, options=None):
    """Solve a sketched problem with l1 weights ``gamma_w``, ``gamma_lambda``.

    ``sketched`` supplies the factored coupling products; the base
    problem supplies objectives and domains.  Returns
    ``(SolutionPair, SolveReport)``; the pair's residual fields are the
    plain stationarity norms of the base problem and are diagnostic
    only, while ``report`` carries the sketched-objective residuals that
    drive convergence.
    """
    if gamma_w < 0 or gamma_lambda < 0:
        raise ValueError("l1 weights must be nonnegative")
    options = options or SolverOptions()
    base = sketched.base
    norm_M = sketched.coupling_norm(iters=options.power_iters, seed=options.seed)
    w, lam, report = _pd_solve(
        base.g, base.h, base.domain_w, base.domain_lambda,
        sketched.coupling_apply, sketched.coupling_apply_t, norm_M,
        float(gamma_w), float(gamma_lambda), options, default_tol=1e-6)
    pair = SolutionPair.from_iterates(base, w, lam, report.iterations)
    return pair, report


def solve_exact_quadratic(problem):
    """Direct solution when both objective parts are quadratic and unconstrained.

    Eliminating ``w = a + A lam / alpha`` from the stationarity system
    leaves the symmetric positive definite system
    ``(beta I + A^T A / alpha) lam = beta b - A^T a``; the primal then
    follows by substitution.  Serves as the oracle for the iterative
    path.
    """
    g, h = problem.g, problem.h
    if g.kind != QUADRATIC or h.kind != QUADRATIC:
        raise UnsupportedProblemError("direct solve needs quadratic g and h")
    if problem.domain_w is not None or problem.domain_lambda is not None:
        raise UnsupportedProblemError("direct solve needs unconstrained domains")
    A = problem.A
    alpha, beta = problem.alpha, problem.beta
    a, b = g.center, h.center
    if sp.issparse(A):
        A = A.toarray()
    G = beta * np.eye(problem.n) + (A.T @ A) / alpha
    rhs = beta * b - A.T @ a
    lam = scipy.linalg.solve(G, rhs, assume_a='pos')
    w = a + A @ lam / alpha
    return SolutionPair.from_iterates(problem, w, lam, iterations=0)
