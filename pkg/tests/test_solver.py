"""Solver components against slow independent oracles."""

import numpy as np
import pytest
import scipy.optimize

from conftest import prox_oracle_1d, rng, top_singular_value

from sketchsaddle import (Box, ConfigError, SolverOptions,
                          composite_residual, gen_erm,
                          gen_planted_quadratic, kkt_residual,
                          minimize_reg_linear, operator_norm,
                          operator_norm_factored, prox_quadratic_plus_l1,
                          prox_step, soft_threshold, solve_exact,
                          solve_exact_quadratic, solve_sketched)
from sketchsaddle.instances import loss_value
from sketchsaddle.model import ConvexFn, SaddleProblem
from sketchsaddle.sketch import apply_sketch, make_projection


class TestSoftThreshold:
    def test_hand_cases(self):
        x = np.array([3.0, -0.5, 0.2, -4.0])
        out = soft_threshold(x, 1.0)
        assert np.allclose(out, [2.0, 0.0, 0.0, -3.0])

    def test_zero_threshold_is_identity(self):
        x = rng(0).normal(size=10)
        assert np.allclose(soft_threshold(x, 0.0), x)


class TestProxQuadraticPlusL1:
    def test_matches_scalar_golden_section(self):
        r = rng(21)
        for _ in range(40):
            v = float(r.normal() * 2)
            center = float(r.normal())
            modulus = float(r.uniform(0.3, 3.0))
            gamma = float(r.uniform(0.0, 1.5))
            step = float(r.uniform(0.05, 5.0))
            got = prox_quadratic_plus_l1(np.array([v]), np.array([center]),
                                         modulus, gamma, step)[0]
            want = prox_oracle_1d(
                lambda t: 0.5 * modulus * (t - center) ** 2,
                v, step, l1_weight=gamma)
            # golden section resolves locations only to about sqrt(eps)
            assert got == pytest.approx(want, abs=5e-8)

    def test_box_clamp_matches_constrained_oracle(self):
        r = rng(22)
        box = Box(lower=np.array([-0.4]), upper=np.array([0.3]))
        for _ in range(25):
            v = float(r.normal() * 2)
            center = float(r.normal())
            got = prox_quadratic_plus_l1(np.array([v]), np.array([center]),
                                         1.0, 0.7, 0.8, box=box)[0]
            want = prox_oracle_1d(lambda t: 0.5 * (t - center) ** 2,
                                  v, 0.8, l1_weight=0.7, lo=-0.4, hi=0.3)
            assert got == pytest.approx(want, abs=5e-8)

    def test_nonexpansive(self):
        r = rng(23)
        center = r.normal(size=8)
        for _ in range(30):
            u = r.normal(size=8) * 3
            v = r.normal(size=8) * 3
            pu = prox_quadratic_plus_l1(u, center, 0.9, 0.4, 1.3)
            pv = prox_quadratic_plus_l1(v, center, 0.9, 0.4, 1.3)
            assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-12


class TestProxStep:
    def test_quadratic_dispatch(self):
        fn = ConvexFn.quadratic(center=np.array([1.0, -1.0]), modulus=2.0)
        v = np.array([0.3, 0.6])
        got = prox_step(fn, v, step=0.5, l1_weight=0.2)
        want = prox_quadratic_plus_l1(v, fn.center, 2.0, 0.2, 0.5)
        assert np.allclose(got, want)

    def test_separable_dispatch_against_oracle(self):
        from sketchsaddle import make_conjugate
        fn = make_conjugate("squared_hinge", 3)
        v = np.array([-0.5, 0.2, -2.0])
        got = prox_step(fn, v, step=0.7, l1_weight=0.1)
        for i in range(3):
            want = prox_oracle_1d(
                lambda t: t + t ** 2 / 4.0,
                float(v[i]), 0.7, l1_weight=0.1, lo=-60.0, hi=0.0)
            assert got[i] == pytest.approx(want, abs=1e-8)


class TestMinimizeRegLinear:
    def test_quadratic_closed_form_vs_golden(self):
        r = rng(31)
        fn = ConvexFn.quadratic(center=r.normal(size=5), modulus=1.7)
        linear = r.normal(size=5)
        got = minimize_reg_linear(fn, linear, l1_weight=0.6)
        for i in range(5):
            want = prox_oracle_1d(
                lambda t, i=i: 0.85 * (t - fn.center[i]) ** 2 + linear[i] * t,
                0.0, 1e9, l1_weight=0.6)
            assert got[i] == pytest.approx(want, abs=1e-7)

    def test_separable_path(self):
        from sketchsaddle import make_conjugate
        fn = make_conjugate("squared_hinge", 2)
        linear = np.array([0.4, -0.2])
        got = minimize_reg_linear(fn, linear, l1_weight=0.05)
        for i in range(2):
            want = prox_oracle_1d(
                lambda t, i=i: t + t ** 2 / 4.0 + linear[i] * t,
                0.0, 1e9, l1_weight=0.05, lo=-60.0, hi=0.0)
            assert got[i] == pytest.approx(want, abs=1e-6)


class TestCompositeResidual:
    def test_unconstrained_no_l1_is_grad_norm(self):
        g = np.array([0.3, -0.8, 0.1])
        x = np.zeros(3)
        assert composite_residual(x, g, 0.0) == pytest.approx(0.8)

    def test_zero_at_l1_minimizer(self):
        # x* minimizing 0.5||x - c||^2 + gamma ||x||_1 has zero residual
        c = np.array([2.0, -0.1, 0.5])
        gamma = 0.4
        x_star = soft_threshold(c, gamma)
        grad = x_star - c
        assert composite_residual(x_star, grad, gamma) == pytest.approx(0.0, abs=1e-12)

    def test_interior_subgradient_gap(self):
        # at x=0 the subdifferential of gamma|x| is [-gamma, gamma]
        assert composite_residual(np.zeros(1), np.array([0.9]), 0.5) == \
            pytest.approx(0.4)
        assert composite_residual(np.zeros(1), np.array([0.3]), 0.5) == 0.0

    def test_active_box_bound_one_sided(self):
        box = Box(lower=np.array([0.0]), upper=np.array([1.0]))
        # pushing further below the active lower bound is fine
        assert composite_residual(np.zeros(1), np.array([2.0]), 0.0, box=box) == 0.0
        # pulling away from it is a real violation
        assert composite_residual(np.zeros(1), np.array([-2.0]), 0.0, box=box) == \
            pytest.approx(2.0)


class TestOperatorNorm:
    def test_diagonal(self):
        A = np.diag([3.0, 1.0, 0.5])
        assert operator_norm(A) == pytest.approx(3.0, rel=1e-6)

    def test_random_vs_svd(self):
        A = rng(41).normal(size=(20, 30))
        assert operator_norm(A) == pytest.approx(top_singular_value(A), rel=1e-5)

    def test_factored_matches_materialized(self):
        r = rng(42)
        A = r.normal(size=(15, 25))
        B = r.normal(size=(25, 8))
        M = A @ B
        got = operator_norm_factored(lambda x: A @ (B @ x),
                                     lambda y: B.T @ (A.T @ y), 8)
        assert got == pytest.approx(top_singular_value(M), rel=1e-5)


class TestSolveExact:
    def test_matches_direct_solve_small(self):
        for seed in range(5):
            inst = gen_planted_quadratic(12, 15, 2, 3, seed=seed)
            direct = solve_exact_quadratic(inst.problem)
            pair, report = solve_exact(inst.problem)
            assert report.converged
            assert np.linalg.norm(pair.w - direct.w) < 1e-6
            assert np.linalg.norm(pair.lam - direct.lam) < 1e-6

    def test_unbalanced_moduli(self):
        inst = gen_planted_quadratic(10, 12, 2, 2, alpha=4.0, beta=0.25, seed=3)
        direct = solve_exact_quadratic(inst.problem)
        pair, report = solve_exact(inst.problem)
        assert report.converged
        assert np.linalg.norm(pair.w - direct.w) < 1e-6

    def test_accelerated_converges(self):
        inst = gen_planted_quadratic(10, 12, 2, 2, seed=7)
        direct = solve_exact_quadratic(inst.problem)
        pair, report = solve_exact(inst.problem, SolverOptions(accelerated=True))
        assert report.converged
        assert np.linalg.norm(pair.w - direct.w) < 1e-6

    def test_iteration_budget_exhaustion_flag(self):
        inst = gen_planted_quadratic(10, 12, 2, 2, seed=1)
        pair, report = solve_exact(
            inst.problem, SolverOptions(max_iterations=3, tolerance=1e-14))
        assert not report.converged
        assert report.iterations == 3

    def test_erm_matches_primal_oracle(self):
        # the primal half of the saddle point minimizes the regularized ERM
        # objective; check against a generic smooth optimizer
        for loss in ("squared_hinge", "logistic"):
            inst = gen_erm(loss, 8, 20, 2, seed=4)
            problem = inst.problem
            X, y, reg = inst.features, inst.labels, inst.reg

            def primal(w):
                z = y * (X.T @ w)
                return (float(np.sum(loss_value(loss, z)))
                        + 0.5 * reg * problem.n * float(w @ w))

            res = scipy.optimize.minimize(primal, np.zeros(8), method="BFGS",
                                          options={"gtol": 1e-12, "maxiter": 2000})
            pair, report = solve_exact(problem, SolverOptions(tolerance=1e-10))
            assert report.converged
            assert np.linalg.norm(pair.w - res.x) < 1e-5

    def test_box_constrained_stationarity(self):
        # clamp the primal domain so the unconstrained optimum is infeasible,
        # then verify the projected stationarity condition at the solution
        inst = gen_planted_quadratic(8, 10, 2, 2, seed=9)
        p = inst.problem
        bound = 0.25 * float(np.max(np.abs(inst.w_star)))
        box = Box(lower=np.full(8, -bound), upper=np.full(8, bound))
        problem = SaddleProblem(g=p.g, h=p.h, A=p.A, domain_w=box,
                                bound_style=p.bound_style)
        pair, report = solve_exact(problem, SolverOptions(tolerance=1e-10))
        assert report.converged
        assert np.all(np.abs(pair.w) <= bound + 1e-12)
        grad_w = p.g.grad(pair.w) - p.A @ pair.lam
        assert composite_residual(pair.w, grad_w, 0.0, box=box) < 1e-6


class TestSolveSketched:
    def test_identity_sketch_recovers_exact(self):
        inst = gen_planted_quadratic(14, 18, 3, 3, seed=2)
        direct = solve_exact_quadratic(inst.problem)
        R = make_projection(18, 18, "identity", seed=0)
        sk = apply_sketch(inst.problem, R, "right")
        pair, report = solve_sketched(sk, 0.0, 0.0,
                                      SolverOptions(tolerance=1e-10))
        assert report.converged
        assert np.linalg.norm(pair.w - direct.w) < 1e-6
        assert np.linalg.norm(pair.lam - direct.lam) < 1e-6

    def test_left_identity_sketch(self):
        inst = gen_planted_quadratic(14, 18, 3, 3, seed=2)
        direct = solve_exact_quadratic(inst.problem)
        R = make_projection(14, 14, "identity", seed=0)
        sk = apply_sketch(inst.problem, R, "left")
        pair, report = solve_sketched(sk, 0.0, 0.0,
                                      SolverOptions(tolerance=1e-10))
        assert report.converged
        assert np.linalg.norm(pair.w - direct.w) < 1e-6

    def test_sketched_solution_is_regularized_saddle(self):
        # optimality of each block at the other: subgradient residuals
        # of the sketched l1-regularized objective vanish at the output
        inst = gen_planted_quadratic(12, 16, 2, 3, seed=6)
        R = make_projection(16, 10, "gaussian", seed=5)
        sk = apply_sketch(inst.problem, R, "right")
        gw, gl = 0.08, 0.05
        pair, report = solve_sketched(sk, gw, gl, SolverOptions(tolerance=1e-10))
        assert report.converged
        grad_w = inst.problem.g.grad(pair.w) - sk.coupling_apply(pair.lam)
        grad_l = inst.problem.h.grad(pair.lam) + sk.coupling_apply_t(pair.w)
        assert composite_residual(pair.w, grad_w, gw) < 1e-6
        assert composite_residual(pair.lam, grad_l, gl) < 1e-6

    def test_negative_regularization_rejected(self):
        inst = gen_planted_quadratic(8, 10, 2, 2, seed=0)
        R = make_projection(10, 6, "gaussian", seed=0)
        sk = apply_sketch(inst.problem, R, "right")
        with pytest.raises(ValueError):
            solve_sketched(sk, -0.1, 0.0)


class TestSolverOptions:
    def test_partial_steps_rejected(self):
        with pytest.raises(ConfigError):
            SolverOptions(step_primal=0.1)

    def test_step_product_validated(self):
        inst = gen_planted_quadratic(8, 10, 2, 2, seed=0)
        opts = SolverOptions(step_primal=100.0, step_dual=100.0)
        with pytest.raises(ConfigError):
            solve_exact(inst.problem, opts)

    def test_manual_steps_accepted(self):
        inst = gen_planted_quadratic(8, 10, 2, 2, seed=0)
        direct = solve_exact_quadratic(inst.problem)
        opts = SolverOptions(step_primal=0.5, step_dual=0.5, tolerance=1e-10)
        pair, report = solve_exact(inst.problem, opts)
        assert report.converged
        assert np.linalg.norm(pair.w - direct.w) < 1e-6
