"""Instance generators and loss conjugates.

Two families are provided.  Planted quadratic instances force an exact,
known sparse saddle point by choosing the quadratic centers so that the
stationarity conditions hold at the planted pair; they are the workhorse
for recovery experiments because every error is measured against ground
truth.  Linear-model instances (regularized classification losses in
dual form) supply realistic separable dual objectives with box domains.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UnsupportedProblemError
from .model import Box, ConvexFn, SaddleProblem, col_norms, row_norms
from .util import derive_rng, frozen_array

LOSSES = ("squared_hinge", "logistic")


# -- losses and their conjugates -------------------------------------------

def loss_value(loss, z):
    """Classification loss at margin ``z``."""
    z = np.asarray(z, dtype=float)
    if loss == "squared_hinge":
        return np.maximum(0.0, 1.0 - z) ** 2
    if loss == "logistic":
        return np.logaddexp(0.0, -z)
    raise ValueError(f"unknown loss {loss!r}")


def loss_derivative(loss, z):
    """Derivative of the loss at margin ``z``; maps into the dual domain."""
    z = np.asarray(z, dtype=float)
    if loss == "squared_hinge":
        return -2.0 * np.maximum(0.0, 1.0 - z)
    if loss == "logistic":
        return -1.0 / (1.0 + np.exp(z))
    raise ValueError(f"unknown loss {loss!r}")


def conjugate_domain(loss):
    """The dual box on which the loss conjugate is finite."""
    if loss == "squared_hinge":
        return (-np.inf, 0.0)
    if loss == "logistic":
        return (-1.0, 0.0)
    raise ValueError(f"unknown loss {loss!r}")


def conjugate_value(loss, lam):
    """Fenchel conjugate of the loss, per coordinate.

    squared_hinge: ``lam + lam^2 / 4`` on ``lam <= 0``.
    logistic: ``(-lam) log(-lam) + (1 + lam) log(1 + lam)`` on
    ``[-1, 0]`` with the convention ``0 log 0 = 0``.
    """
    lam = np.asarray(lam, dtype=float)
    lo, hi = conjugate_domain(loss)
    if np.any(lam < lo - 1e-12) or np.any(lam > hi + 1e-12):
        raise ValueError(f"argument outside the {loss} conjugate domain")
    if loss == "squared_hinge":
        return lam + lam ** 2 / 4.0
    neg = np.clip(-lam, 0.0, 1.0)
    with np.errstate(divide='ignore', invalid='ignore'):
        a = np.where(neg > 0, neg * np.log(np.maximum(neg, 1e-300)), 0.0)
        b = np.where(neg < 1, (1 - neg) * np.log(np.maximum(1 - neg, 1e-300)), 0.0)
    return a + b


def conjugate_grad(loss, lam):
    """Derivative of the conjugate; for logistic it diverges at the endpoints."""
    lam = np.asarray(lam, dtype=float)
    if loss == "squared_hinge":
        return 1.0 + lam / 2.0
    with np.errstate(divide='ignore'):
        return np.log1p(lam) - np.log(-lam)


def conjugate_prox(loss, v, step, l1_weight=0.0):
    """Prox of ``step * (conjugate + l1_weight |.|)`` at ``v``, clamped to domain.

    On the negative dual domain ``|x| = -x``, so the squared hinge case
    is an explicit clamped affine formula.  The logistic case solves the
    scalar stationarity equation by bisection-safeguarded Newton; the
    solution is always interior to ``(-1, 0)``.
    """
    v = np.asarray(v, dtype=float)
    t = float(step)
    gamma = float(l1_weight)
    if loss == "squared_hinge":
        return np.minimum(0.0, (v - t * (1.0 - gamma)) / (1.0 + t / 2.0))
    if loss != "logistic":
        raise ValueError(f"unknown loss {loss!r}")

    lo = np.full(v.shape, -1.0)
    hi = np.zeros(v.shape)
    x = np.full(v.shape, -0.5)
    for _ in range(90):
        fx = (x - v) / t + np.log1p(x) - np.log(-x) - gamma
        left = fx > 0  # root lies to the left of x
        hi = np.where(left, x, hi)
        lo = np.where(left, lo, x)
        fpx = 1.0 / t + 1.0 / (1.0 + x) - 1.0 / x
        x_new = x - fx / fpx
        bad = ~np.isfinite(x_new) | (x_new <= lo) | (x_new >= hi)
        x = np.where(bad, 0.5 * (lo + hi), x_new)
        if np.max(hi - lo) < 1e-16 and np.max(np.abs(fx)) < 1e-12:
            break
    return x


def make_conjugate(loss, n):
    """A separable ConvexFn summing the loss conjugate over n coordinates."""
    lo, hi = conjugate_domain(loss)
    domain = Box(lower=np.full(n, lo), upper=np.full(n, hi))
    modulus = 0.5 if loss == "squared_hinge" else 4.0
    smoothness = 0.5 if loss == "squared_hinge" else None
    return ConvexFn.separable(
        dim=n, modulus=modulus, smoothness=smoothness, domain=domain,
        value1=lambda x: conjugate_value(loss, x),
        grad1=lambda x: conjugate_grad(loss, x),
        prox1=lambda v, step, l1: conjugate_prox(loss, v, step, l1))


# -- normalization ----------------------------------------------------------

def normalize(A, style):
    """Scale ``A`` so its largest row or column norm equals one.

    Returns ``(scaled, factor)`` with ``scaled = A * factor``.
    """
    if style == "rows":
        biggest = float(row_norms(A).max())
    elif style == "columns":
        biggest = float(col_norms(A).max())
    else:
        raise ValueError("style must be 'rows' or 'columns'")
    if biggest == 0.0:
        raise ValueError("cannot normalize a zero matrix")
    factor = 1.0 / biggest
    return A * factor, factor


# -- planted quadratic instances -------------------------------------------

def _sparse_vector(rng, dim, nnz):
    """Random support, magnitudes uniform in [0.5, 1.5], random signs."""
    x = np.zeros(dim)
    if nnz > 0:
        idx = rng.choice(dim, size=nnz, replace=False)
        mags = rng.uniform(0.5, 1.5, size=nnz)
        signs = rng.integers(0, 2, size=nnz) * 2 - 1
        x[idx] = mags * signs
    return x


@dataclass(frozen=True, eq=False)
class PlantedInstance:
    """A quadratic saddle problem whose exact solution is a known sparse pair."""

    problem: SaddleProblem
    w_star: np.ndarray
    lambda_star: np.ndarray
    s_w: int
    s_lambda: int
    matrix_style: str
    scale: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "w_star", frozen_array(self.w_star))
        object.__setattr__(self, "lambda_star", frozen_array(self.lambda_star))


def gen_planted_quadratic(d, n, s_w, s_lambda, alpha=1.0, beta=1.0,
                          matrix_style="rows", seed=0):
    """Plant a sparse saddle point inside a Gaussian coupling matrix.

    The coupling is iid Gaussian normalized so the declared side has
    maximum norm one.  The quadratic centers are chosen as
    ``a = w* - A lam* / alpha`` and ``b = lam* + A^T w* / beta``, which
    makes the stationarity conditions hold exactly at the planted pair,
    so the pair is the unique saddle point.

    Draw order (coupling, primal support, dual support) is fixed so a
    seed pins the instance byte for byte.
    """
    if not (0 <= s_w <= d and 0 <= s_lambda <= n):
        raise ValueError("support sizes must fit the dimensions")
    rng = derive_rng(seed, 0x706c)
    A_raw = rng.standard_normal((d, n))
    A, scale = normalize(A_raw, matrix_style)
    w_star = _sparse_vector(rng, d, s_w)
    lambda_star = _sparse_vector(rng, n, s_lambda)
    a = w_star - A @ lambda_star / alpha
    b = lambda_star + A.T @ w_star / beta
    problem = SaddleProblem(g=ConvexFn.quadratic(a, alpha),
                            h=ConvexFn.quadratic(b, beta),
                            A=A, bound_style=matrix_style)
    return PlantedInstance(problem=problem, w_star=w_star,
                           lambda_star=lambda_star, s_w=s_w,
                           s_lambda=s_lambda, matrix_style=matrix_style,
                           scale=scale, seed=seed)


@dataclass(frozen=True, eq=False)
class PerturbedInstance:
    """A planted instance nudged away from exact sparse optimality.

    ``w_star`` and ``lambda_star`` remain the sparse reference pair; the
    perturbation certificate records how far from optimal they are.
    mode "stationarity": the centers are shifted so the reference pair
    violates the stationarity conditions by exactly ``amount`` in the
    max norm.  mode "neighbor": the exact solution is moved to a dense
    pair at Euclidean distance ``amount`` from each reference vector
    (kept in ``w_exact`` / ``lambda_exact``); ``mu`` is the smoothness
    constant relevant to prescriptions that consume this certificate.
    """

    problem: SaddleProblem
    w_star: np.ndarray
    lambda_star: np.ndarray
    s_w: int
    s_lambda: int
    mode: str
    amount: float
    mu: float
    w_exact: Optional[np.ndarray] = None
    lambda_exact: Optional[np.ndarray] = None


def perturb_to_approx_sparse(instance, mode, amount, seed=0):
    """Derive an approximately sparse instance from a planted one.

    See :class:`PerturbedInstance` for the two modes.  Only quadratic
    instances are supported: the center shifts rely on the gradient
    being linear in the center.
    """
    problem = instance.problem
    if problem.g.kind != "quadratic" or problem.h.kind != "quadratic":
        raise UnsupportedProblemError("perturbation needs quadratic objectives")
    if amount < 0:
        raise ValueError("perturbation amount must be nonnegative")
    rng = derive_rng(seed, 0x7065)
    alpha, beta = problem.alpha, problem.beta
    A = problem.A
    w_star, lambda_star = instance.w_star, instance.lambda_star
    mu = max(problem.g.smoothness, problem.h.smoothness)

    if mode == "stationarity":
        # shifting the center by delta changes the gradient at the fixed
        # reference pair by exactly -modulus * delta
        da = (amount / alpha) * (rng.integers(0, 2, size=problem.d) * 2 - 1)
        db = (amount / beta) * (rng.integers(0, 2, size=problem.n) * 2 - 1)
        g = ConvexFn.quadratic(problem.g.center + da, alpha)
        h = ConvexFn.quadratic(problem.h.center + db, beta)
        new_problem = SaddleProblem(g=g, h=h, A=A,
                                    bound_style=problem.bound_style)
        return PerturbedInstance(problem=new_problem, w_star=w_star,
                                 lambda_star=lambda_star, s_w=instance.s_w,
                                 s_lambda=instance.s_lambda, mode=mode,
                                 amount=float(amount), mu=mu)
    if mode == "neighbor":
        t_w = rng.standard_normal(problem.d)
        t_w *= amount / np.linalg.norm(t_w)
        t_l = rng.standard_normal(problem.n)
        t_l *= amount / np.linalg.norm(t_l)
        w_exact = w_star + t_w
        lambda_exact = lambda_star + t_l
        g = ConvexFn.quadratic(w_exact - A @ lambda_exact / alpha, alpha)
        h = ConvexFn.quadratic(lambda_exact + A.T @ w_exact / beta, beta)
        new_problem = SaddleProblem(g=g, h=h, A=A,
                                    bound_style=problem.bound_style)
        return PerturbedInstance(problem=new_problem, w_star=w_star,
                                 lambda_star=lambda_star, s_w=instance.s_w,
                                 s_lambda=instance.s_lambda, mode=mode,
                                 amount=float(amount), mu=mu,
                                 w_exact=frozen_array(w_exact),
                                 lambda_exact=frozen_array(lambda_exact))
    raise ValueError("mode must be 'stationarity' or 'neighbor'")


# -- linear-model (dual classification) instances ---------------------------

@dataclass(frozen=True, eq=False)
class ErmInstance:
    """Dual form of l2-regularized classification on synthetic data.

    The saddle objective is ``(reg n / 2)||w||^2 - sum_i conj(lam_i)
    - w^T A lam`` with coupling columns ``A_{*i} = -y_i x_i``; with that
    sign the dual optimum satisfies ``lam_i = loss'(y_i x_i^T w)`` at
    the primal optimum.  Features are scaled so the largest column norm
    is one, and the planted direction is scaled so that roughly
    ``margin_fraction`` of the examples sit at margin above one (those
    dual coordinates vanish under the squared hinge).
    """

    problem: SaddleProblem
    features: np.ndarray  # (d, n), columns are examples
    labels: np.ndarray  # (n,) in {-1, +1}
    w_planted: np.ndarray
    lambda_ref: np.ndarray  # loss'(margins of the planted direction)
    loss: str
    reg: float
    margin_fraction: float
    seed: int


def margins(instance, w):
    """Per-example margins ``y_i x_i^T w``."""
    return instance.labels * (instance.features.T @ w)


def dual_from_primal(instance, w):
    """The dual vector consistent with a primal ``w``: ``loss'(margins)``."""
    return loss_derivative(instance.loss, margins(instance, w))


def reference_pair(instance):
    """The sparse pair recovery is measured against.

    For planted instances that is the exact saddle point; for erm
    instances the planted direction and its consistent dual.
    """
    w = getattr(instance, "w_star", None)
    lam = getattr(instance, "lambda_star", None)
    if w is None:
        w = instance.w_planted
    if lam is None:
        lam = instance.lambda_ref
    return w, lam


def gen_erm(loss, d, n, s, reg=None, margin_fraction=0.5, seed=0):
    """Generate a synthetic classification instance in saddle form.

    A planted ``s``-sparse direction labels Gaussian feature vectors;
    the direction is then rescaled so the requested fraction of examples
    has margin at least one.  ``reg`` defaults to ``1 / sqrt(n)``, so
    the primal modulus is ``reg * n = sqrt(n)``.
    """
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}")
    if not 0 < margin_fraction <= 1:
        raise ValueError("margin_fraction must lie in (0, 1]")
    reg = 1.0 / np.sqrt(n) if reg is None else float(reg)
    rng = derive_rng(seed, 0x65726d)
    w0 = _sparse_vector(rng, d, s)
    X = rng.standard_normal((d, n))
    raw = X.T @ w0
    # relabel near-zero margins away to keep signs unambiguous
    raw = np.where(np.abs(raw) < 1e-9, 1e-9, raw)
    y = np.sign(raw)
    X, _ = normalize(X, "columns")
    base_margins = np.abs(X.T @ w0)
    cut = np.quantile(base_margins, 1.0 - margin_fraction)
    if cut <= 0:
        raise ValueError("degenerate margins; use a larger instance")
    w_planted = w0 / cut
    A = -X * y  # columns -y_i x_i
    g = ConvexFn.quadratic(np.zeros(d), reg * n)
    h = make_conjugate(loss, n)
    problem = SaddleProblem(g=g, h=h, A=A, domain_lambda=h.domain,
                            bound_style="columns")
    lambda_ref = loss_derivative(loss, y * (X.T @ w_planted))
    return ErmInstance(problem=problem, features=frozen_array(X),
                       labels=frozen_array(y), w_planted=frozen_array(w_planted),
                       lambda_ref=frozen_array(lambda_ref), loss=loss,
                       reg=reg, margin_fraction=float(margin_fraction),
                       seed=seed)
