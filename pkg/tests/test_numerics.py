import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from extremal.errors import ConvergenceError, DomainError, EvaluationError
from extremal.numerics import (
    Interval,
    Tolerance,
    integrate,
    lambert_w0,
    maximize_1d,
    maximize_2d,
    monotone_inverse,
)

# mpmath at 30 digits
W0_MINUS_2E2 = -0.406375739959959907676958124125
OMEGA = 0.56714329040978387299996866221
W0_10 = 1.74552800274069938307430126488
W0_1E6 = 11.3833580861400526220001567816


def bisect_w0(x, iters=200):
    """Independent oracle: bisection on w * exp(w) = x over [-1, big]."""
    lo, hi = -1.0, max(1.0, math.log1p(x) + 1.0) if x > 0 else 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) < x:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def midpoint_rule(f, a, b, n=1_000_000):
    x = a + (np.arange(n) + 0.5) * (b - a) / n
    return float(np.sum(f(x)) * (b - a) / n)


class TestInterval:
    def test_rejects_reversed(self):
        with pytest.raises(DomainError):
            Interval(1.0, 0.0)

    def test_rejects_nan(self):
        with pytest.raises(DomainError):
            Interval(math.nan, 1.0)

    def test_infinite_endpoints(self):
        iv = Interval(-math.inf, math.inf)
        assert not iv.is_finite
        assert 1e300 in iv

    def test_tolerance_validation(self):
        with pytest.raises(DomainError):
            Tolerance(abs_tol=-1.0)
        with pytest.raises(DomainError):
            Tolerance(max_iter=0)


class TestIntegrate:
    def test_exponential_closed_form(self):
        got = integrate(lambda x: math.exp(-2 * x), Interval(0.0, 1.0))
        assert got == pytest.approx((1 - math.exp(-2)) / 2, abs=1e-14)

    def test_polynomial_exact(self):
        assert integrate(lambda x: 3 * x * x, Interval(0.0, 2.0)) == pytest.approx(8.0, abs=1e-13)

    def test_against_midpoint_oracle(self):
        f = lambda x: np.exp(np.sin(3 * x)) / (1 + x * x)
        oracle = midpoint_rule(f, -2.0, 3.0)
        assert integrate(lambda x: float(f(x)), Interval(-2.0, 3.0)) == pytest.approx(oracle, abs=1e-9)

    def test_gaussian_tail_kernel(self):
        got = integrate(lambda x: x * math.exp(-x * x), Interval(0.0, 1.0))
        assert got == pytest.approx((1 - math.exp(-1)) / 2, abs=1e-13)

    def test_rejects_infinite_interval(self):
        with pytest.raises(DomainError):
            integrate(lambda x: x, Interval(0.0, math.inf))

    def test_nan_reports_abscissa(self):
        with pytest.raises(EvaluationError) as err:
            integrate(lambda x: math.nan if x > 0.5 else 1.0, Interval(0.0, 1.0))
        assert err.value.abscissa > 0.5

    def test_budget_exhaustion_carries_partial(self):
        with pytest.raises(ConvergenceError) as err:
            integrate(lambda x: math.sin(1 / x), Interval(1e-8, 1.0), Tolerance(abs_tol=1e-14, rel_tol=1e-14, max_iter=50))
        assert err.value.partial is not None

    @given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(-3, 3), st.floats(-3, 3))
    def test_additivity(self, a, w, c0, c1):
        b, mid = a + w, a + w / 3
        f = lambda x: math.exp(c0 * math.sin(x)) + c1 * x
        whole = integrate(f, Interval(a, b))
        parts = integrate(f, Interval(a, mid)) + integrate(f, Interval(mid, b))
        assert whole == pytest.approx(parts, rel=1e-9, abs=1e-10)


class TestMaximize1D:
    def test_quadratic_vertex(self):
        res = maximize_1d(lambda u: -(u - 0.3) ** 2, Interval(0.0, 1.0))
        assert res.argmax == pytest.approx(0.3, abs=1e-8)
        assert not res.flat

    def test_boundary_maximum(self):
        # stationary at the right end: the argmax is located only to ~sqrt(eps)
        res = maximize_1d(lambda u: (2 * u - 1) / u**2, Interval(1e-6, 1.0))
        assert res.argmax == pytest.approx(1.0, abs=1e-6)
        assert res.value == pytest.approx(1.0, abs=1e-12)

    def test_sine(self):
        res = maximize_1d(math.sin, Interval(0.0, 3.0))
        assert res.argmax == pytest.approx(math.pi / 2, abs=1e-7)

    def test_flat_function(self):
        res = maximize_1d(lambda u: 2.0, Interval(0.0, 4.0))
        assert res.flat
        assert res.argmax == 2.0

    def test_inadmissible_points_skipped(self):
        res = maximize_1d(lambda u: -math.inf if u < 0.5 else -u, Interval(0.0, 1.0))
        assert res.argmax == pytest.approx(0.5, abs=1e-3)

    def test_nothing_admissible(self):
        with pytest.raises(EvaluationError):
            maximize_1d(lambda u: -math.inf, Interval(0.0, 1.0))

    def test_needs_finite_interval(self):
        with pytest.raises(DomainError):
            maximize_1d(lambda u: u, Interval(0.0, math.inf))

    @given(st.floats(-10, 10), st.floats(0.1, 10))
    def test_against_grid_oracle(self, centre, width):
        f = lambda u: -abs(u - centre) ** 1.5 + 0.1 * math.cos(u)
        lo, hi = centre - width, centre + 2 * width
        grid = np.linspace(lo, hi, 200_001)
        oracle = np.max(-np.abs(grid - centre) ** 1.5 + 0.1 * np.cos(grid))
        res = maximize_1d(f, Interval(lo, hi))
        assert res.value >= oracle - 1e-9


class TestMaximize2D:
    def test_combined_ratio(self):
        f = lambda a, b: (2 * b - 1 + a) / (b * b + a * a)
        res = maximize_2d(f, (Interval(-4.0, 4.0), Interval(0.0, 1.0)))
        assert res.argmax[0] == pytest.approx(0.4, abs=1e-6)
        assert res.argmax[1] == pytest.approx(0.8, abs=1e-6)
        assert res.value == pytest.approx(1.25, abs=1e-10)

    def test_corner_maximum(self):
        res = maximize_2d(lambda x, y: x + y, (Interval(0.0, 1.0), Interval(0.0, 2.0)))
        assert res.argmax == pytest.approx((1.0, 2.0), abs=1e-9)

    def test_interior_maximum_next_to_edge(self):
        # the scan's best point sits on the edge b = 1, one cell away from the optimum
        f = lambda a, b: -((a - 0.3) ** 2) - 50 * (b - a - 0.6985) ** 2 - (b - 0.9985) ** 2
        res = maximize_2d(f, (Interval(-4.0, 4.0), Interval(0.0, 1.0)))
        assert res.argmax == pytest.approx((0.3, 0.9985), abs=1e-6)

    def test_scalar_only_function(self):
        f = lambda x, y: -math.hypot(x - 0.2, y + 0.1)
        res = maximize_2d(f, (Interval(-1.0, 1.0), Interval(-1.0, 1.0)))
        assert res.argmax == pytest.approx((0.2, -0.1), abs=1e-6)


class TestLambertW:
    def test_anchors_exact(self):
        assert lambert_w0(0.0) == 0.0
        assert lambert_w0(-math.exp(-1)) == -1.0
        assert lambert_w0(math.e) == 1.0

    @pytest.mark.parametrize("x, expected", [
        (-2 * math.exp(-2), W0_MINUS_2E2), (1.0, OMEGA), (10.0, W0_10), (1e6, W0_1E6)])
    def test_reference_values(self, x, expected):
        assert lambert_w0(x) == pytest.approx(expected, rel=1e-14, abs=1e-15)

    def test_below_branch_point(self):
        with pytest.raises(DomainError):
            lambert_w0(-0.4)

    def test_nan_rejected(self):
        with pytest.raises(DomainError):
            lambert_w0(math.nan)

    @given(st.floats(-math.exp(-1) + 1e-12, 1e8))
    def test_round_trip(self, x):
        w = lambert_w0(x)
        assert w >= -1.0
        assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))

    @given(st.floats(-math.exp(-1) + 1e-6, 1e4))
    def test_matches_bisection(self, x):
        assert lambert_w0(x) == pytest.approx(bisect_w0(x), abs=1e-9)

    @given(st.floats(-math.exp(-1) + 1e-9, 1e6), st.floats(-math.exp(-1) + 1e-9, 1e6))
    def test_monotone(self, x, y):
        if x < y:
            assert lambert_w0(x) <= lambert_w0(y)


class TestMonotoneInverse:
    def test_linear_table(self):
        xs = np.linspace(0, 1, 11)
        assert monotone_inverse(xs, 2 * xs, 0.5) == pytest.approx(0.25)

    def test_flat_segment_takes_left_end(self):
        xs = np.array([0.0, 1.0, 2.0, 3.0])
        ys = np.array([0.0, 1.0, 1.0, 2.0])
        assert monotone_inverse(xs, ys, 1.0) == 1.0

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            monotone_inverse([0, 1], [0, 1], 2.0)

    def test_vectorized(self):
        xs = np.linspace(0, 2, 5)
        out = monotone_inverse(xs, xs**2, np.array([0.0, 1.0, 4.0]))
        assert np.allclose(out, [0.0, 1.0, 2.0])

    @given(st.lists(st.floats(0.01, 5), min_size=2, max_size=30), st.floats(0, 1))
    def test_inverse_property(self, steps, frac):
        ys = np.concatenate([[0.0], np.cumsum(steps)])
        xs = np.arange(ys.size, dtype=float)
        y = frac * ys[-1]
        x = monotone_inverse(xs, ys, y)
        assert np.interp(x, xs, ys) == pytest.approx(y, abs=1e-9)
