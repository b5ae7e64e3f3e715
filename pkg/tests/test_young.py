import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ineqlab import young

P2 = young.Power(2)
HALF_SQUARE = young.Power(2, scale=math.sqrt(2.0))  # x^2 / 2
N_FAMILIES = [
    young.Power(2),
    young.Power(3),
    young.LogPower(1.0, 1.0),
    young.LogPower(0.5, 1.0),
    young.NashPsi(0.5),
    young.ExpLogPsi(0.5),
]


class TestEval:
    def test_power_closed_form(self):
        assert P2(3.0) == 9.0

    def test_logpower_zero(self):
        assert young.LogPower(1.0, 1.0)(0.0) == 0.0

    def test_logpower_at_e_minus_one(self):
        # log(1 + (e-1)) = 1, so the value collapses to e - 1
        phi = young.LogPower(0.5, 1.0)
        assert phi(math.e - 1.0) == pytest.approx(math.e - 1.0, rel=1e-14)

    def test_even(self):
        for phi in N_FAMILIES:
            assert phi(-2.3) == phi(2.3)

    def test_saturation_flag(self):
        assert young.Power(2)(1e200) == math.inf


class TestInverse:
    def test_square_root(self):
        assert young.inverse(P2, 4.0) == pytest.approx(2.0, rel=1e-12)

    def test_cube_root_forward_oracle(self):
        phi = young.Power(3)
        x = young.inverse(phi, 27.0)
        assert phi(x) == pytest.approx(27.0, rel=1e-11)
        assert x == pytest.approx(3.0, rel=1e-11)

    @pytest.mark.parametrize("beta", [0.0, 0.5, 1.0])
    def test_logpower_inverse_bracket(self, beta):
        phi = young.LogPower(beta, 1.0)
        y = 1e3
        inv = young.inverse(phi, y)
        assert y / math.log1p(y) ** beta <= inv * (1 + 1e-12)
        assert inv <= 2.0 * y / math.log1p(y) ** beta * (1 + 1e-12)

    def test_zero(self):
        assert young.inverse(P2, 0.0) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(young.YoungFunctionError):
            young.inverse(P2, -1.0)


class TestConjugate:
    def test_half_square_self_dual_shift(self):
        # (x^2/2)* = y^2/2
        assert young.conjugate_eval(HALF_SQUARE, 3.0) == pytest.approx(4.5, rel=1e-12)

    def test_zero_slope(self):
        for phi in N_FAMILIES:
            assert young.conjugate_eval(phi, 0.0) == 0.0

    def test_double_conjugation_recovers(self):
        phi = young.LogPower(1.0, 1.0)
        for x in (0.5, 1.0, 2.0):
            assert young.biconjugate(phi, x) == pytest.approx(
                phi(x), rel=1e-8, abs=1e-8
            )

    def test_linear_phi_unbounded_flag(self):
        assert young.conjugate_eval(young.Power(1), 2.0) == math.inf
        assert young.conjugate_eval(young.Power(1), 0.5) == 0.0

    def test_conjugate_inverse_half_square(self):
        assert young.conjugate_inverse(HALF_SQUARE, 2.0) == pytest.approx(2.0, rel=1e-10)

    def test_product_bracket_at_one(self):
        for phi in N_FAMILIES:
            prod = young.inverse(phi, 1.0) * young.conjugate_inverse(phi, 1.0)
            assert 1.0 < prod <= 2.0 * (1 + 1e-10)

    def test_logpower_conjugate_inverse_log_band(self):
        # (Phi_1^1)*^{-1}(y) is comparable to log(1+y): the ratio stays in a
        # narrow band across four decades
        phi = young.LogPower(1.0, 1.0)
        ratios = [
            young.conjugate_inverse(phi, y) / math.log1p(y)
            for y in np.logspace(1, 8, 15)
        ]
        assert max(ratios) / min(ratios) < 4.0
        r50 = young.conjugate_inverse(phi, 50.0) / math.log1p(50.0)
        assert min(ratios) * 0.99 <= r50 <= max(ratios) * 1.01

    def test_conjugate_inverse_log_matches_direct(self):
        phi = young.LogPower(2.0 / 3.0, math.e)
        for y in (10.0, 1e4, 1e8):
            a = young.conjugate_inverse(phi, y)
            b = young.conjugate_inverse_log(phi, math.log(y))
            assert b == pytest.approx(a, rel=1e-9)


class TestDerivative:
    def test_power_closed(self):
        assert young.derivative(P2, 5.0) == 10.0
        assert young.second_derivative(P2, 5.0) == 2.0

    def test_squared_logpower_at_zero(self):
        for beta, gamma in [(1.0, 2.0), (0.5, math.e), (2.0 / 3.0, math.e)]:
            sq = young.Squared(young.LogPower(beta, gamma))
            assert sq.deriv2(0.0) == pytest.approx(2.0 * math.log(gamma) ** beta,
                                                   rel=1e-12)

    def test_odd_extension(self):
        phi = young.LogPower(1.0, 1.0)
        assert young.derivative(phi, -2.0) == -young.derivative(phi, 2.0)

    @pytest.mark.parametrize("phi", N_FAMILIES + [young.Squared(young.LogPower(1.0, 2.0))])
    def test_first_derivative_matches_central_differences(self, phi):
        xs = np.logspace(math.log10(0.1), 2.0, 40)
        h = 1e-6 * np.maximum(1.0, xs)
        fd = (phi.value(xs + h) - phi.value(xs - h)) / (2.0 * h)
        cf = phi.deriv(xs)
        assert np.max(np.abs(fd - cf) / np.maximum(np.abs(cf), 1e-30)) < 1e-6

    @pytest.mark.parametrize("phi", N_FAMILIES)
    def test_second_derivative_matches_central_differences(self, phi):
        # wider step: second differences at 1e-6 sit at the roundoff floor
        xs = np.logspace(math.log10(0.1), 2.0, 40)
        h = 1e-4 * np.maximum(1.0, xs)
        fd = (phi.value(xs + h) - 2 * phi.value(xs) + phi.value(xs - h)) / h**2
        cf = phi.deriv2(xs)
        assert np.max(np.abs(fd - cf) / np.maximum(np.abs(cf), 1e-30)) < 1e-5


class TestDelta2:
    def test_power(self):
        assert young.delta2_constant(P2) == pytest.approx(4.0, rel=1e-12)

    def test_squared_logpower_family_bound(self):
        sq = young.Squared(young.LogPower(1.0, 2.0))
        assert young.delta2_constant(sq) <= 4.0 ** (1.0 + 1.0)

    def test_logpower_band(self):
        val = young.delta2_constant(young.LogPower(0.5, 1.0))
        assert 2.0 <= val <= 2.0 * 4.0**0.5


class TestKZero:
    def test_square(self):
        assert young.k_zero(P2) == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-10)

    def test_half_square(self):
        assert young.k_zero(HALF_SQUARE) == pytest.approx(1.0, rel=1e-10)

    def test_shifted_logpower_forward_check(self):
        phi = young.LogPower(1.0, 1.0)
        r = young.k_zero(phi, shift=1.0)
        assert r * (phi.deriv(r) + 1.0) == pytest.approx(1.0, rel=1e-10)


class TestInvariants:
    @pytest.mark.parametrize("phi", N_FAMILIES)
    def test_involution(self, phi):
        for x in np.logspace(-3, 3, 13):
            v = phi(x)
            assert abs(young.biconjugate(phi, x) - v) <= 1e-8 * max(1.0, v)

    @pytest.mark.parametrize("phi", N_FAMILIES)
    def test_phiphi_sandwich_strict(self, phi):
        for a in [10.0**k for k in range(-2, 5)]:
            prod = young.inverse(phi, a) * young.conjugate_inverse(phi, a)
            assert prod > a + 1e-10 * a
            assert prod <= 2.0 * a * (1 + 1e-10)

    @pytest.mark.parametrize("beta", [0.0, 0.25, 0.5, 0.75, 1.0])
    def test_eq_inverse_sandwich(self, beta):
        phi = young.LogPower(beta, 1.0)
        ys = np.logspace(math.log10(2.0001), 6, 200)
        inv = young.inverse_many(phi, ys)
        lo = ys / np.log1p(ys) ** beta
        hi = 2.0 * ys / np.log1p(ys) ** beta
        assert np.all(lo <= inv * (1 + 1e-12))
        assert np.all(inv <= hi * (1 + 1e-12))

    @pytest.mark.parametrize("phi", N_FAMILIES)
    def test_inverse_monotone(self, phi):
        ys = np.logspace(-3, 5, 60)
        inv = young.inverse_many(phi, ys)
        assert np.all(np.diff(inv) >= 0)
        cinv = np.array([young.conjugate_inverse(phi, y) for y in ys[::6]])
        assert np.all(np.diff(cinv) >= -1e-12 * cinv[:-1])

    def test_validation_passes_families(self):
        for phi in N_FAMILIES:
            assert young.validate_young(phi)
            assert young.validate_n_function(phi)

    def test_power_one_is_young_not_n(self):
        phi = young.Power(1)
        assert young.validate_young(phi)
        assert not phi.is_n_function()

    def test_nonconvex_table_rejected(self):
        xs = np.array([0.1, 1.0, 10.0, 100.0])
        ys = np.array([0.01, 5.0, 6.0, 200.0])  # concave kink in the middle
        tb = young.TableBacked(xs, ys)
        with pytest.raises(young.YoungFunctionError):
            young.validate_young(tb)

    def test_table_backed_roundtrip(self):
        xs = np.logspace(-3, 3, 40)
        tb = young.TableBacked(xs, xs**2)
        assert tb(2.0) == pytest.approx(4.0, rel=1e-6)
        assert young.validate_young(tb)

    @given(st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=40, deadline=None)
    def test_inverse_roundtrip_property(self, x):
        phi = young.LogPower(0.5, 1.0)
        assert young.inverse(phi, phi(x)) == pytest.approx(x, rel=1e-9)

    @given(st.floats(min_value=1e-2, max_value=1e2),
           st.floats(min_value=1.05, max_value=3.0))
    @settings(max_examples=40, deadline=None)
    def test_slope_function_nondecreasing_property(self, x, c):
        # phi(x)/x nondecreasing for convex phi with phi(0) = 0
        phi = young.NashPsi(0.5)
        assert phi(c * x) / (c * x) >= phi(x) / x * (1 - 1e-12)

    def test_invalid_parameters(self):
        with pytest.raises(young.YoungFunctionError):
            young.Power(0.5)
        with pytest.raises(young.YoungFunctionError):
            young.LogPower(1.5, 1.0)
        with pytest.raises(young.YoungFunctionError):
            young.LogPower(0.5, 0.5)
        with pytest.raises(young.YoungFunctionError):
            young.NashPsi(1.0)
