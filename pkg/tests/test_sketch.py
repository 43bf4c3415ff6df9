"""Projection sampling, sketched problems, embedding failure rates."""

import numpy as np
import pytest
import scipy.stats

from conftest import rng, top_singular_value

from sketchsaddle import (DEFAULT_C, DISTRIBUTIONS, apply_sketch, calibrate_c,
                          gen_planted_quadratic, inner_product_distortion,
                          jl_failure_rate, make_projection)


class TestMakeProjection:
    def test_shapes_and_scaling(self):
        R = make_projection(100, 25, "rademacher", seed=0)
        assert R.entries.shape == (100, 25)
        # every entry is +-1/sqrt(m)
        assert np.allclose(np.abs(R.entries), 1.0 / np.sqrt(25))

    def test_gaussian_moments(self):
        R = make_projection(400, 300, "gaussian", seed=1)
        flat = R.entries.ravel() * np.sqrt(300)
        assert abs(flat.mean()) < 0.02
        assert abs(flat.std() - 1.0) < 0.02

    def test_database_friendly_frequencies(self):
        R = make_projection(500, 300, "database_friendly", seed=2)
        scaled = R.entries * np.sqrt(300)
        vals, counts = np.unique(np.round(scaled, 6), return_counts=True)
        freq = dict(zip(vals.tolist(), (counts / scaled.size).tolist()))
        s3 = round(np.sqrt(3.0), 6)
        assert set(freq) == {-s3, 0.0, s3}
        assert freq[0.0] == pytest.approx(2.0 / 3.0, abs=0.01)
        assert freq[s3] == pytest.approx(1.0 / 6.0, abs=0.01)
        assert freq[-s3] == pytest.approx(1.0 / 6.0, abs=0.01)
        # unit variance after the troika of values
        assert scaled.var() == pytest.approx(1.0, abs=0.02)

    def test_identity_requires_square(self):
        R = make_projection(7, 7, "identity", seed=0)
        assert np.allclose(R.entries, np.eye(7))
        with pytest.raises(ValueError):
            make_projection(8, 7, "identity", seed=0)

    def test_determinism_and_seed_sensitivity(self):
        a = make_projection(50, 10, "gaussian", seed=3)
        b = make_projection(50, 10, "gaussian", seed=3)
        c = make_projection(50, 10, "gaussian", seed=4)
        assert np.array_equal(a.entries, b.entries)
        assert not np.array_equal(a.entries, c.entries)

    def test_tuple_seed(self):
        a = make_projection(20, 5, "gaussian", seed=(1, 2, 3))
        b = make_projection(20, 5, "gaussian", seed=(1, 2, 4))
        assert not np.array_equal(a.entries, b.entries)

    def test_apply_matches_matmul(self):
        R = make_projection(30, 8, "gaussian", seed=5)
        x = rng(6).normal(size=30)
        y = rng(7).normal(size=8)
        assert np.allclose(R.apply_t(x), R.entries.T @ x)
        assert np.allclose(R.apply(y), R.entries @ y)

    def test_unknown_distribution_rejected(self):
        with pytest.raises(ValueError):
            make_projection(10, 5, "laplace", seed=0)


class TestSketchedProblem:
    def test_right_sketch_coupling(self):
        inst = gen_planted_quadratic(12, 20, 2, 3, seed=1)
        R = make_projection(20, 6, "gaussian", seed=2)
        sk = apply_sketch(inst.problem, R, "right")
        assert sk.A_hat.shape == (12, 6)
        assert np.allclose(sk.A_hat, inst.problem.A @ R.entries)
        M = sk.A_hat @ R.entries.T
        lam = rng(3).normal(size=20)
        w = rng(4).normal(size=12)
        assert np.allclose(sk.coupling_apply(lam), M @ lam)
        assert np.allclose(sk.coupling_apply_t(w), M.T @ w)
        assert sk.coupling_norm() == pytest.approx(top_singular_value(M), rel=1e-5)

    def test_left_sketch_coupling(self):
        inst = gen_planted_quadratic(12, 20, 2, 3, seed=1)
        R = make_projection(12, 6, "gaussian", seed=2)
        sk = apply_sketch(inst.problem, R, "left")
        assert sk.A_hat.shape == (6, 20)
        assert np.allclose(sk.A_hat, R.entries.T @ inst.problem.A)
        M = R.entries @ sk.A_hat
        lam = rng(3).normal(size=20)
        w = rng(4).normal(size=12)
        assert np.allclose(sk.coupling_apply(lam), M @ lam)
        assert np.allclose(sk.coupling_apply_t(w), M.T @ w)

    def test_side_dimension_mismatch(self):
        inst = gen_planted_quadratic(12, 20, 2, 3, seed=1)
        R = make_projection(12, 6, "gaussian", seed=2)
        with pytest.raises(ValueError):
            apply_sketch(inst.problem, R, "right")  # needs 20 rows


class TestFailureRate:
    def test_gaussian_matches_chi_square_law(self):
        # for gaussian R and any unit x, m ||R^T x||^2 is chi-square(m);
        # compare the empirical failure rate to the analytic one
        m, eps, trials = 48, 0.4, 4000
        rate = jl_failure_rate("gaussian", n=100, m=m, eps=eps,
                               trials=trials, seed=0)
        lo = scipy.stats.chi2.cdf((1.0 - eps) * m, df=m)
        hi = scipy.stats.chi2.sf((1.0 + eps) * m, df=m)
        exact = lo + hi
        sigma = np.sqrt(exact * (1.0 - exact) / trials)
        assert abs(rate - exact) < 5.0 * sigma + 1e-12

    @pytest.mark.parametrize("distribution", DISTRIBUTIONS)
    def test_within_theoretical_bound(self, distribution):
        m, eps, trials = 60, 0.5, 4000
        rate = jl_failure_rate(distribution, n=80, m=m, eps=eps,
                               trials=trials, seed=1)
        bound = 2.0 * np.exp(-m * eps ** 2 / DEFAULT_C)
        assert rate <= bound

    def test_norm_preservation_moderate_m(self):
        # one fixed projection, many vectors: average distortion shrinks
        R = make_projection(300, 192, "rademacher", seed=9)
        r = rng(10)
        ratios = []
        for _ in range(200):
            x = r.normal(size=300)
            x /= np.linalg.norm(x)
            ratios.append(float(np.sum(R.apply_t(x) ** 2)))
        ratios = np.array(ratios)
        assert abs(ratios.mean() - 1.0) < 0.05
        assert np.all(ratios > 0.5) and np.all(ratios < 1.5)

    def test_eps_validation(self):
        with pytest.raises(ValueError):
            jl_failure_rate("gaussian", n=10, m=5, eps=0.7, trials=10)
        with pytest.raises(ValueError):
            jl_failure_rate("gaussian", n=10, m=5, eps=0.0, trials=10)

    def test_fixed_direction_override(self):
        x = np.zeros(50)
        x[0] = 1.0
        rate = jl_failure_rate("gaussian", n=50, m=40, eps=0.4,
                               trials=500, seed=2, x=x)
        assert 0.0 <= rate <= 1.0

    def test_determinism(self):
        a = jl_failure_rate("rademacher", n=30, m=20, eps=0.3, trials=300, seed=3)
        b = jl_failure_rate("rademacher", n=30, m=20, eps=0.3, trials=300, seed=3)
        assert a == b


class TestInnerProductDistortion:
    def test_matches_direct_computation(self):
        R = make_projection(40, 15, "gaussian", seed=4)
        u = rng(5).normal(size=40)
        v = rng(6).normal(size=40)
        direct = abs(float(R.apply_t(u) @ R.apply_t(v) - u @ v))
        assert inner_product_distortion(R, u, v) == pytest.approx(direct, rel=1e-12)

    def test_small_on_average(self):
        # distortion of unit-vector pairs concentrates around zero
        r = rng(7)
        vals = []
        for i in range(100):
            R = make_projection(60, 50, "gaussian", seed=(8, i))
            u = r.normal(size=60)
            v = r.normal(size=60)
            u /= np.linalg.norm(u)
            v /= np.linalg.norm(v)
            vals.append(abs(inner_product_distortion(R, u, v)))
        assert np.mean(vals) < 0.25


class TestCalibrateC:
    def test_returns_reasonable_constant(self):
        c = calibrate_c("gaussian", trials=1500, seed=0)
        assert 1.0 <= c <= 24.0

    def test_margin_scales_output(self):
        base = calibrate_c("rademacher", trials=1000, seed=1, margin=1.0)
        doubled = calibrate_c("rademacher", trials=1000, seed=1, margin=2.0)
        assert doubled == pytest.approx(2.0 * base, rel=1e-12)

    def test_floor_applies_when_no_failures(self):
        # a huge-m cell never fails at modest trials; the floor still binds
        c = calibrate_c("gaussian", grid=((200, 0.5),), trials=200, seed=2,
                        margin=1.0, floor=0.5)
        assert c == pytest.approx(0.5)
