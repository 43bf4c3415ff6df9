"""Model objects: function values, gradients, problems, sparsity."""

import numpy as np
import pytest

from conftest import finite_diff_grad, rng

from sketchsaddle import (Box, ConvexFn, DimensionError, SaddleProblem,
                          col_norms, kkt_residual, row_norms, sparsity_stats,
                          support)
from sketchsaddle.model import SPARSITY_EPS


def quad_fn(dim, seed=0):
    r = rng(seed, 11)
    center = r.normal(size=dim)
    return ConvexFn.quadratic(center=center, modulus=1.5), center


class TestConvexFn:
    def test_quadratic_value_matches_formula(self):
        fn, center = quad_fn(6)
        x = rng(1).normal(size=6)
        expected = 0.75 * float(np.sum((x - center) ** 2))
        assert fn.value(x) == pytest.approx(expected, rel=1e-12)

    def test_quadratic_grad_matches_finite_differences(self):
        fn, _ = quad_fn(5, seed=3)
        x = rng(2).normal(size=5)
        g = fn.grad(x)
        g_fd = finite_diff_grad(fn.value, x)
        assert np.allclose(g, g_fd, rtol=1e-6, atol=1e-6)

    def test_separable_value_sums_coordinates(self):
        def quartic_prox(v, step, l1):
            # Newton on the scalar optimality condition, enough for a test
            t = np.zeros_like(np.asarray(v, dtype=float))
            for _ in range(60):
                grad = 4 * t ** 3 + 2 * t + l1 * np.sign(t) + (t - v) / step
                hess = 12 * t ** 2 + 2 + 1.0 / step
                t = t - grad / hess
            return t

        fn = ConvexFn.separable(
            dim=4,
            value1=lambda t: t ** 4 + t ** 2,
            grad1=lambda t: 4.0 * t ** 3 + 2.0 * t,
            prox1=quartic_prox,
            modulus=2.0)
        x = np.array([1.0, -2.0, 0.5, 0.1])
        assert fn.value(x) == pytest.approx(float(np.sum(x ** 4 + x ** 2)),
                                            rel=1e-12)
        g_fd = finite_diff_grad(fn.value, x, h=1e-5)
        assert np.allclose(fn.grad(x), g_fd, rtol=1e-5, atol=1e-5)

    def test_strong_convexity_along_segments(self):
        # f(y) >= f(x) + <g, y-x> + (mu/2)||y-x||^2 on sampled pairs
        fn, _ = quad_fn(7, seed=5)
        r = rng(9)
        for _ in range(25):
            x = r.normal(size=7)
            y = r.normal(size=7)
            lhs = fn.value(y)
            rhs = (fn.value(x) + float(fn.grad(x) @ (y - x))
                   + 0.5 * fn.modulus * float(np.sum((y - x) ** 2)))
            assert lhs >= rhs - 1e-10

    def test_dimension_mismatch_raises(self):
        fn, _ = quad_fn(4)
        with pytest.raises(DimensionError):
            fn.value(np.zeros(5))
        with pytest.raises(DimensionError):
            fn.grad(np.zeros(3))


class TestBox:
    def test_project_clamps(self):
        box = Box(lower=np.array([-1.0, 0.0]), upper=np.array([1.0, 2.0]))
        x = np.array([-3.0, 5.0])
        assert np.allclose(box.project(x), [-1.0, 2.0])

    def test_contains(self):
        box = Box(lower=np.array([-1.0]), upper=np.array([1.0]))
        assert box.contains(np.array([0.5]))
        assert not box.contains(np.array([1.5]))


class TestSaddleProblem:
    def make_problem(self, d=5, n=7, style="rows", seed=0):
        r = rng(seed, 17)
        A = r.normal(size=(d, n))
        scale = row_norms(A) if style == "rows" else col_norms(A)
        A = A / scale.max()
        g, _ = quad_fn(d, seed=seed)
        h, _ = quad_fn(n, seed=seed + 1)
        return SaddleProblem(g=g, h=h, A=A, bound_style=style), A

    def test_shapes_and_moduli(self):
        problem, _ = self.make_problem()
        assert (problem.d, problem.n) == (5, 7)
        assert problem.alpha == 1.5
        assert problem.beta == 1.5

    def test_bound_style_enforced(self):
        r = rng(4)
        A = 2.0 * r.normal(size=(4, 4))
        A[0, 0] = 5.0
        g, _ = quad_fn(4)
        h, _ = quad_fn(4)
        with pytest.raises(ValueError):
            SaddleProblem(g=g, h=h, A=A, bound_style="rows")

    def test_kkt_residual_against_direct_matvec(self):
        problem, A = self.make_problem(seed=2)
        w = rng(5).normal(size=5)
        lam = rng(6).normal(size=7)
        r_w, r_l = kkt_residual(problem, w, lam)
        # independent recomputation from the defining stationarity system
        expect_w = np.max(np.abs(problem.g.grad(w) - A @ lam))
        expect_l = np.max(np.abs(problem.h.grad(lam) + A.T @ w))
        assert r_w == pytest.approx(expect_w, rel=1e-12)
        assert r_l == pytest.approx(expect_l, rel=1e-12)

    def test_mismatched_function_dims_raise(self):
        g, _ = quad_fn(3)
        h, _ = quad_fn(7)
        A = np.zeros((4, 7))
        with pytest.raises(DimensionError):
            SaddleProblem(g=g, h=h, A=A)


class TestSparsity:
    def test_hand_computed_example(self):
        stats = sparsity_stats(np.array([1.0, 0.0, 0.0, -2.0]))
        assert stats.l0 == 2
        assert stats.l1 == pytest.approx(3.0)
        assert stats.l2 == pytest.approx(np.sqrt(5.0))
        assert stats.ratio == pytest.approx(3.0 / np.sqrt(5.0))

    def test_zero_vector_ratio_is_zero(self):
        stats = sparsity_stats(np.zeros(5))
        assert stats.l0 == 0
        assert stats.ratio == 0.0

    def test_threshold_excludes_tiny_entries(self):
        x = np.array([1.0, SPARSITY_EPS / 2.0, -1e-3])
        assert sparsity_stats(x).l0 == 2
        assert sparsity_stats(x, eps=1e-2).l0 == 1

    def test_support_indices(self):
        x = np.array([0.0, 3.0, 0.0, -1.0])
        assert support(x).tolist() == [1, 3]


class TestNorms:
    def test_row_and_col_norms(self):
        A = np.array([[3.0, 0.0], [0.0, 4.0]])
        assert np.allclose(row_norms(A), [3.0, 4.0])
        assert np.allclose(col_norms(A), [3.0, 4.0])

    def test_sparse_input(self):
        import scipy.sparse as sp
        A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert np.allclose(row_norms(A), np.sqrt([5.0, 5.0]))
        assert np.allclose(col_norms(A), np.sqrt([5.0, 5.0]))
