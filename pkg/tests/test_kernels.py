import json

import numpy as np
import pytest
from numpy.polynomial import polynomial as P
from scipy.integrate import quad

from blipcdf.errors import ArgumentError
from blipcdf.kernels import (
    PolyKernel,
    build_kernel,
    eval_kernel,
    kernel_cdf,
    kernel_moment,
)

GRID_K = (0, 2, 4)
GRID_R = (0.5, 1.0, 2.0)


def full_poly_coeffs(kern):
    """Coefficients in plain x-powers (0, x, x^2, ...) for numpy.polynomial."""
    c = np.zeros(2 * len(kern.coefficients) - 1)
    c[::2] = kern.coefficients
    return c


class TestConstruction:
    @pytest.mark.parametrize("K", GRID_K)
    @pytest.mark.parametrize("R", GRID_R)
    def test_invariants(self, K, R):
        kern = build_kernel(K, R)
        assert abs(eval_kernel(kern, R)) < 1e-10
        assert abs(eval_kernel(kern, -R)) < 1e-10
        # endpoint derivative, via an independent polynomial-derivative path
        dcoef = P.polyder(full_poly_coeffs(kern))
        assert abs(P.polyval(R, dcoef)) < 1e-10
        assert abs(P.polyval(-R, dcoef)) < 1e-10
        assert abs(kernel_moment(kern, 0) - 1.0) < 1e-10
        for r in range(1, 2 * K + 1):
            assert abs(kernel_moment(kern, r)) < 1e-8
        assert kern.order == 2 * K + 2

    def test_biweight_against_independent_solve(self):
        # 3x3 system for K=0, R=1: endpoint zero, endpoint derivative zero,
        # unit mass; solved here by LAPACK, not the package's elimination.
        mat = np.array(
            [
                [1.0, 1.0, 1.0],
                [0.0, 2.0, 4.0],
                [2.0, 2.0 / 3.0, 2.0 / 5.0],
            ]
        )
        expected = np.linalg.solve(mat, np.array([0.0, 0.0, 1.0]))
        kern = build_kernel(0, 1.0)
        assert np.allclose(kern.coefficients, expected, rtol=0, atol=1e-12)
        assert np.allclose(kern.coefficients, [15 / 16, -15 / 8, 15 / 16], atol=1e-12)
        assert kern.order == 2

    def test_biweight_order_from_quadrature(self):
        kern = build_kernel(0, 1.0)
        m2, _ = quad(lambda x: x**2 * (15 / 16) * (1 - x**2) ** 2, -1, 1)
        assert abs(m2 - 1 / 7) < 1e-12
        assert abs(kernel_moment(kern, 2) - m2) < 1e-12

    def test_order_10_kernel(self):
        kern = build_kernel(4, 1.0)
        for r in (2, 4, 6, 8):
            assert abs(kernel_moment(kern, r)) < 1e-8
        assert abs(kernel_moment(kern, 10)) > 1e-8
        assert kern.order == 10

    @pytest.mark.parametrize("bad_K", (3, -2, 1, 2.0))
    def test_bad_K(self, bad_K):
        with pytest.raises(ArgumentError):
            build_kernel(bad_K, 1.0)

    @pytest.mark.parametrize("bad_R", (0.05, 20.0, 0.0, -1.0))
    def test_bad_R(self, bad_R):
        with pytest.raises(ArgumentError):
            build_kernel(0, bad_R)

    @pytest.mark.parametrize("K", GRID_K)
    def test_scale_equivariance(self, K):
        unit = build_kernel(K, 1.0)
        for R in GRID_R:
            kern = build_kernel(K, R)
            x = np.linspace(-1.5 * R, 1.5 * R, 301)
            assert np.allclose(
                eval_kernel(kern, x), eval_kernel(unit, x / R) / R, rtol=0, atol=1e-10
            )


class TestEvaluation:
    def test_biweight_values(self):
        kern = build_kernel(0, 1.0)
        assert abs(eval_kernel(kern, 0.0) - 15 / 16) < 1e-12
        assert abs(eval_kernel(kern, 1.0)) < 1e-12
        assert eval_kernel(kern, 2.0) == 0.0
        assert eval_kernel(kern, -2.0) == 0.0

    @pytest.mark.parametrize("K", GRID_K)
    def test_outside_support_zero(self, K):
        kern = build_kernel(K, 2.0)
        x = np.array([-5.0, -2.001, 2.001, 5.0])
        assert np.all(eval_kernel(kern, x) == 0.0)

    def test_vectorized_matches_scalar(self):
        kern = build_kernel(2, 1.0)
        x = np.linspace(-1.2, 1.2, 17)
        vec = eval_kernel(kern, x)
        assert vec.shape == x.shape
        for xi, vi in zip(x, vec):
            assert eval_kernel(kern, float(xi)) == vi


class TestCdf:
    @pytest.mark.parametrize("K", GRID_K)
    @pytest.mark.parametrize("R", GRID_R)
    def test_half_mass_at_zero_and_bounds(self, K, R):
        kern = build_kernel(K, R)
        assert abs(kernel_cdf(kern, 0.0) - 0.5) < 1e-12
        assert kernel_cdf(kern, -R) == 0.0
        assert abs(kernel_cdf(kern, R) - 1.0) < 1e-10
        assert abs(kernel_cdf(kern, 10 * R) - 1.0) < 1e-10
        assert kernel_cdf(kern, -10 * R) == 0.0

    def test_biweight_cdf_value(self):
        # Frozen from the quadrature of (15/16)(1-x^2)^2 over [-1, 0.5].
        kern = build_kernel(0, 1.0)
        oracle, _ = quad(lambda x: eval_kernel(kern, x), -1, 0.5, epsabs=1e-13)
        assert abs(oracle - 0.896484375) < 1e-12
        assert abs(kernel_cdf(kern, 0.5) - 0.896484375) < 1e-12

    @pytest.mark.parametrize("K", GRID_K)
    @pytest.mark.parametrize("R", GRID_R)
    def test_matches_quadrature_at_random_points(self, K, R):
        kern = build_kernel(K, R)
        rng = np.random.default_rng(20240511 + K)
        pts = rng.uniform(-R, R, size=100)
        for u in pts:
            ref, _ = quad(lambda x: eval_kernel(kern, x), -R, u, epsabs=1e-12)
            assert abs(kernel_cdf(kern, u) - ref) < 1e-9

    def test_nondecreasing_for_biweight(self):
        kern = build_kernel(0, 1.0)
        grid = np.linspace(-1.2, 1.2, 1000)
        vals = kernel_cdf(kern, grid)
        assert np.all(np.diff(vals) >= 0)

    @pytest.mark.parametrize("K", (2, 4))
    def test_higher_order_cdf_grid(self, K):
        # Higher-order kernels go negative, so only endpoints and agreement
        # with quadrature are asserted.
        kern = build_kernel(K, 1.0)
        grid = np.linspace(-1, 1, 41)
        for u in grid:
            ref, _ = quad(lambda x: eval_kernel(kern, x), -1, u, epsabs=1e-12)
            assert abs(kernel_cdf(kern, u) - ref) < 1e-9


class TestMoments:
    def test_mass_and_odd(self):
        for K in GRID_K:
            kern = build_kernel(K, 1.0)
            assert abs(kernel_moment(kern, 0) - 1.0) < 1e-10
            assert kernel_moment(kern, 1) == 0.0
            assert kernel_moment(kern, 7) == 0.0

    def test_biweight_second_moment_symbolic(self):
        import sympy

        x = sympy.symbols("x")
        m2 = sympy.integrate(x**2 * sympy.Rational(15, 16) * (1 - x**2) ** 2, (x, -1, 1))
        assert m2 == sympy.Rational(1, 7)
        kern = build_kernel(0, 1.0)
        assert abs(kernel_moment(kern, 2) - 1 / 7) < 1e-12

    def test_bad_degree(self):
        kern = build_kernel(0, 1.0)
        with pytest.raises(ArgumentError):
            kernel_moment(kern, -1)


class TestSerialization:
    @pytest.mark.parametrize("K", GRID_K)
    def test_json_round_trip(self, K):
        kern = build_kernel(K, 2.0)
        blob = kern.to_json()
        d = json.loads(blob)
        assert set(d) == {"K", "R", "coefficients", "order"}
        back = PolyKernel.from_json(blob)
        assert back == kern
