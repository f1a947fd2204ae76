import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from extremal.errors import DomainError, EvaluationError
from extremal.model import CoefficientField, constant_field, tabulated_field
from extremal.ruin import RuinQuery, min_ruin_probability, scale_function

# mpmath at 30 digits
OU_P1 = 1.46265174590718160880404858686  # int_0^1 exp(xi^2)
ERFC_1 = 0.157299207050285130658779364917


def ou(sign=-1.0):
    return CoefficientField(lambda x: sign * np.asarray(x, dtype=float),
                            lambda x: np.ones_like(np.asarray(x, dtype=float)))


def riemann_scale(rate_integral, b, x, n=10_000_000):
    """Midpoint rule for int_b^x exp(-2 I(xi)) given the antiderivative I."""
    xi = b + (np.arange(n) + 0.5) * (x - b) / n
    return float(np.exp(-2 * rate_integral(xi)).sum() * (x - b) / n)


class TestQuery:
    def test_requires_state_above_barrier(self):
        with pytest.raises(DomainError):
            RuinQuery(constant_field(1, 1), 1.0, 1.0)

    def test_requires_finite(self):
        with pytest.raises(DomainError):
            RuinQuery(constant_field(1, 1), -math.inf, 1.0)


class TestScaleFunction:
    def test_constant_ratio(self):
        r = scale_function(RuinQuery(constant_field(1.0, 1.0), 0.0, 1.0), upper=1.0)
        assert r.p_x == pytest.approx((1 - math.exp(-2)) / 2, rel=1e-12)
        assert r.converged

    def test_driftless_is_identity_shift(self):
        r = scale_function(RuinQuery(constant_field(0.0, 3.0), -2.0, 1.5), upper=4.0)
        assert r.p_x == pytest.approx(3.5, rel=1e-12)
        assert r.p_upper == pytest.approx(6.0, rel=1e-12)

    def test_mean_reverting(self):
        r = scale_function(RuinQuery(ou(), 0.0, 1.0), upper=1.0)
        assert r.p_x == pytest.approx(OU_P1, abs=1e-10)

    def test_against_midpoint_oracle(self):
        # m = sin x, s = 1 + x^2/4 on [0, 3]; I is computed by the oracle on a fine grid
        m = lambda x: np.sin(x)
        s = lambda x: 1 + np.asarray(x, dtype=float) ** 2 / 4
        grid = np.linspace(0, 3, 2_000_001)
        rate = m(grid) / s(grid) ** 2
        cum = np.concatenate([[0.0], np.cumsum((rate[1:] + rate[:-1]) / 2 * np.diff(grid))])
        oracle = np.sum((np.exp(-2 * cum[1:]) + np.exp(-2 * cum[:-1])) / 2 * np.diff(grid))
        r = scale_function(RuinQuery(CoefficientField(m, s), 0.0, 3.0), upper=3.0)
        assert r.p_x == pytest.approx(oracle, rel=1e-9)

    def test_vanishing_volatility_reports_abscissa(self):
        f = CoefficientField(lambda x: 1.0, lambda x: max(1.0 - x, 0.0))
        with pytest.raises(EvaluationError) as err:
            scale_function(RuinQuery(f, 0.0, 2.0), upper=2.0)
        assert err.value.abscissa == pytest.approx(1.0, abs=0.1)

    def test_overflow_is_clamped(self):
        r = scale_function(RuinQuery(constant_field(-1.0, 0.1), 0.0, 1.0), upper=10.0)
        assert r.clamped and not r.converged
        assert r.notes

    def test_upper_below_state(self):
        with pytest.raises(DomainError):
            scale_function(RuinQuery(constant_field(1, 1), 0.0, 1.0), upper=0.5)

    @given(st.floats(-2, 2), st.floats(0.2, 3), st.floats(0.01, 3), st.floats(0.01, 3))
    def test_strictly_increasing(self, m, s, d1, d2):
        f = constant_field(m, s)
        r1 = scale_function(RuinQuery(f, 0.0, d1), upper=d1 + d2)
        assert 0 < r1.p_x <= r1.p_upper
        # strict once the true increment is above double resolution
        c = m / (s * s)
        if math.exp(-2 * c * d1) * min(d2, 1 / abs(c) if c else d2) > 1e-10 * r1.p_x:
            assert r1.p_x < r1.p_upper


class TestRuinProbability:
    @pytest.mark.parametrize("c", [0.1, 0.5, 1.0, 2.0, 5.0])
    @pytest.mark.parametrize("d", [0.5, 1.0, 3.0])
    def test_constant_ratio_closed_form(self, c, d):
        prob, diag = min_ruin_probability(RuinQuery(constant_field(c, 1.0), 0.0, d))
        assert prob == pytest.approx(math.exp(-2 * c * d), abs=1e-8)
        assert diag.converged

    def test_generic_path_for_constant_ratio(self):
        f = CoefficientField(lambda x: 0.5 + 0 * np.asarray(x, dtype=float),
                             lambda x: 1.0 + 0 * np.asarray(x, dtype=float))
        prob, _ = min_ruin_probability(RuinQuery(f, 0.0, 1.0))
        assert prob == pytest.approx(math.exp(-1), abs=1e-8)

    def test_unit_case(self):
        prob, _ = min_ruin_probability(RuinQuery(constant_field(1.0, 1.0), 0.0, 1.0))
        assert prob == pytest.approx(0.1353352832366127, abs=1e-12)

    def test_proportional_reinsurance_extremal_field(self):
        prob, _ = min_ruin_probability(RuinQuery(constant_field(1.0, 1.0), 0.0, 2.0))
        assert prob == pytest.approx(math.exp(-4), abs=1e-10)

    def test_driftless_is_certain_ruin(self):
        prob, diag = min_ruin_probability(RuinQuery(constant_field(0.0, 1.0), 0.0, 1.0))
        assert prob == 1.0
        assert not diag.converged
        assert diag.notes

    def test_mean_reverting_is_certain_ruin(self):
        prob, diag = min_ruin_probability(RuinQuery(ou(), 0.0, 1.0))
        assert prob == 1.0 and not diag.converged

    def test_repelling_field_against_erfc(self):
        # m = x, s = 1: p(x) = int_0^x exp(-xi^2), so ruin from 1 is erfc(1)
        prob, diag = min_ruin_probability(RuinQuery(ou(+1.0), 0.0, 1.0))
        assert diag.converged
        assert prob == pytest.approx(ERFC_1, abs=1e-10)

    def test_repelling_field_against_riemann_oracle(self):
        p1 = riemann_scale(lambda xi: xi * xi / 2, 0.0, 1.0)
        p_inf = riemann_scale(lambda xi: xi * xi / 2, 0.0, 12.0)
        prob, _ = min_ruin_probability(RuinQuery(ou(+1.0), 0.0, 1.0))
        assert prob == pytest.approx(1 - p1 / p_inf, abs=1e-8)

    def test_tabulated_two_piece_field(self):
        # ratio 0 below 1, then 1: p(1) = 1, p(inf) = 1 + 1/2
        f = tabulated_field([1.0, 1.0 + 1e-9, 50.0], [0.0, 1.0, 1.0], [1.0, 1.0, 1.0])
        prob, _ = min_ruin_probability(RuinQuery(f, 0.0, 1.0))
        assert prob == pytest.approx(1 - 1 / 1.5, abs=1e-6)

    @given(st.floats(0.05, 3), st.floats(0.1, 2), st.floats(-50, 50), st.floats(0.05, 3))
    def test_depends_only_on_distance(self, c, s, shift, d):
        f = constant_field(c * s * s, s)
        a, _ = min_ruin_probability(RuinQuery(f, 0.0, d))
        b, _ = min_ruin_probability(RuinQuery(f, shift, shift + d))
        assert a == pytest.approx(b, abs=1e-9)

    @given(st.floats(0.05, 3), st.floats(0.05, 3), st.floats(0.0, 3))
    def test_nonincreasing_in_state(self, c, x1, gap):
        f = constant_field(c, 1.0)
        p1, _ = min_ruin_probability(RuinQuery(f, 0.0, x1))
        p2, _ = min_ruin_probability(RuinQuery(f, 0.0, x1 + gap))
        assert p2 <= p1 + 1e-12
        assert 0.0 <= p2 <= 1.0

    def test_nonincreasing_on_nonconstant_field(self):
        f = CoefficientField(lambda x: 1 + np.sin(x), lambda x: 1 + 0 * np.asarray(x, dtype=float))
        probs = [min_ruin_probability(RuinQuery(f, 0.0, x)).prob for x in np.linspace(0.1, 3, 8)]
        assert all(b <= a + 1e-12 for a, b in zip(probs, probs[1:]))
