import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biharmonic_pinn import autodiff as ad
from biharmonic_pinn.errors import DomainError, SingularityError

import jet_oracles as jo


def derivs_1d(j):
    return [float(ad.extract_partial(j, k)) for k in range(j.order + 1)]


class TestConstruction:
    def test_variable_1d(self):
        j = ad.jet_variable(2.0, 0, 4, 1)
        assert np.array_equal(j.coeffs, [2, 1, 0, 0, 0])

    def test_variable_2d(self):
        j = ad.jet_variable(0.5, 1, 4, 2)
        assert j.coeff(0, 0) == 0.5
        assert j.coeff(0, 1) == 1.0
        assert sum(abs(j.coeff(*m)) for m in ad.multi_indices(4, 2)) == 1.5

    def test_identity_derivative(self):
        assert ad.extract_partial(ad.jet_variable(3.0, 0, 4, 1), 1) == 1.0

    @pytest.mark.parametrize("order,nvars,n", [(4, 1, 5), (4, 2, 15), (2, 2, 6), (3, 1, 4)])
    def test_coefficient_count(self, order, nvars, n):
        assert ad.jet_variable(1.0, 0, order, nvars).coeffs.shape == (n,)

    def test_bad_variable_index(self):
        with pytest.raises(ValueError):
            ad.jet_variable(1.0, 1, 4, 1)
        with pytest.raises(ValueError):
            ad.jet_variable(1.0, 0, 0, 1)

    def test_extract_beyond_order(self):
        with pytest.raises(ValueError):
            ad.extract_partial(ad.jet_variable(1.0, 0, 2, 2), (2, 1))

    def test_batched_values(self):
        x = ad.jet_variable(np.array([1.0, 2.0, 3.0]), 0, 4, 1)
        assert np.allclose(ad.extract_partial(x * x * x, 2), 6 * np.array([1.0, 2.0, 3.0]))


class TestArithmetic:
    def test_square(self):
        x = ad.jet_variable(2.0, 0, 4, 1)
        assert derivs_1d(ad.jet_mul(x, x)) == [4, 4, 2, 0, 0]

    def test_quotient(self):
        x = ad.jet_variable(1.0, 0, 4, 1)
        q = ad.jet_div(x * x, x)
        assert np.allclose(q.coeffs, x.coeffs, atol=1e-15)

    def test_fourth_power(self):
        x = ad.jet_variable(-0.7, 0, 4, 1)
        assert ad.extract_partial(x * x * x * x, 4) == pytest.approx(24.0, abs=1e-12)

    def test_division_by_zero_constant(self):
        x = ad.jet_variable(0.0, 0, 4, 1)
        with pytest.raises(SingularityError):
            ad.jet_div(ad.Jet.constant(1.0, 4, 1), x)

    def test_scale_and_sub(self):
        x = ad.jet_variable(1.5, 0, 4, 2)
        assert np.allclose(ad.jet_sub(ad.jet_scale(x, 3.0), x).coeffs, (2 * x).coeffs)

    def test_mismatched_order(self):
        with pytest.raises(ValueError):
            ad.jet_add(ad.jet_variable(1.0, 0, 4, 1), ad.jet_variable(1.0, 0, 3, 1))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.sampled_from(jo.all_multi()))
    def test_leibniz(self, seed, alpha):
        rng = np.random.default_rng(seed)
        a, b = jo.random_jet(rng), jo.random_jet(rng)
        got = float(ad.extract_partial(ad.jet_mul(a, b), alpha))
        assert got == pytest.approx(jo.leibniz(a, b, alpha), rel=1e-12, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_commutativity(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = jo.random_jet(rng), jo.random_jet(rng), jo.random_jet(rng)
        assert np.array_equal(ad.jet_add(a, b).coeffs, ad.jet_add(a, b).coeffs)
        assert np.array_equal(ad.jet_mul(a, b).coeffs, ad.jet_mul(a, b).coeffs)
        assert np.allclose(ad.jet_add(a, b).coeffs, ad.jet_add(b, a).coeffs, rtol=1e-15, atol=0)
        # relative to the summand magnitudes: the two orders accumulate differently
        mag = ad.jet_mul(ad.Jet(np.abs(a.coeffs), 4, 2), ad.Jet(np.abs(b.coeffs), 4, 2)).coeffs
        assert np.all(np.abs(ad.jet_mul(a, b).coeffs - ad.jet_mul(b, a).coeffs) <= 1e-15 * mag)
        left = ad.jet_mul(ad.jet_mul(a, b), c).coeffs
        right = ad.jet_mul(a, ad.jet_mul(b, c)).coeffs
        assert np.allclose(left, right, rtol=1e-13, atol=1e-14)


class TestUnivariate:
    def test_tanh_at_zero(self):
        assert np.allclose(derivs_1d(ad.tanh(ad.jet_variable(0.0, 0))), [0, 1, 0, -2, 0], atol=1e-15)

    def test_log_at_one(self):
        assert np.allclose(derivs_1d(ad.log(ad.jet_variable(1.0, 0))), [0, 1, -1, 2, -6], atol=1e-14)

    def test_sin_at_zero(self):
        assert np.allclose(derivs_1d(ad.sin(ad.jet_variable(0.0, 0)))[1:], [1, 0, -1, 0], atol=1e-15)

    def test_cos_exp(self):
        x = ad.jet_variable(0.4, 0)
        assert np.allclose(derivs_1d(ad.exp(x)), [math.exp(0.4)] * 5)
        c = derivs_1d(ad.cos(x))
        assert np.allclose(c, [math.cos(0.4), -math.sin(0.4), -math.cos(0.4), math.sin(0.4), math.cos(0.4)])

    def test_power(self):
        x = ad.jet_variable(2.0, 0)
        d = derivs_1d(ad.power(x, -1.0))
        assert np.allclose(d, [0.5, -0.25, 2 / 8, -6 / 16, 24 / 32])

    def test_log_domain(self):
        with pytest.raises(DomainError):
            ad.log(ad.jet_variable(-1.0, 0))
        with pytest.raises(DomainError):
            ad.log(ad.jet_variable(0.0, 0))

    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            ad.jet_univariate("sinh", ad.jet_variable(0.0, 0))

    def test_tanh_fourth_derivative_fd(self):
        got = float(ad.extract_partial(ad.tanh(ad.jet_variable(0.3, 0)), 4))
        ref = jo.fourth_difference(mpmath.tanh, 0.3)
        assert got == pytest.approx(ref, rel=1e-4)
        # h = 1e-2 truncation (h^2/6 f^(6)) alone is ~2e-4 relative here
        coarse = jo.fourth_difference(mpmath.tanh, 0.3, h=1e-2)
        assert abs(coarse - got) / abs(got) < 5e-4

    def test_tanh_recurrence_matches_series(self):
        rng = np.random.default_rng(3)
        z = jo.random_jet(rng)
        fast = ad.tanh(z).coeffs
        # tanh = 1 - 2 / (exp(2z) + 1)
        ref = (1.0 - 2.0 / (ad.exp(z * 2.0) + 1.0)).coeffs
        assert np.allclose(fast, ref, rtol=1e-12, atol=1e-13)


class TestOracles:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_polynomial_partials(self, seed):
        rng = np.random.default_rng(seed)
        poly = jo.random_polynomial(rng)
        x0, y0 = rng.uniform(-1.5, 1.5, size=2)
        j = jo.polynomial_jet(poly, x0, y0)
        for i, k in jo.all_multi():
            ref = jo.polynomial_partial(poly, x0, y0, i, k)
            assert jo.close(float(ad.extract_partial(j, (i, k))), ref, 1e-12, 1e-11)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_composition_partials(self, seed):
        rng = np.random.default_rng(seed)
        x0, y0 = rng.uniform(-1, 1, size=2)
        expr = jo.random_composition(rng, x0, y0)
        j = jo.composition_jet(expr, x0, y0)
        for i, k in jo.all_multi():
            ref = jo.composition_partial(expr, x0, y0, i, k)
            assert jo.close(float(ad.extract_partial(j, (i, k))), ref, 1e-4, 1e-9)

    def test_derivative_and_truncate(self):
        x = ad.jet_variable(0.7, 0, 4, 2)
        y = ad.jet_variable(-0.2, 1, 4, 2)
        u = ad.sin(x) * ad.exp(y)
        du = ad.jet_derivative(u, 0)
        assert du.order == 3
        for i, k in jo.all_multi(3):
            assert float(ad.extract_partial(du, (i, k))) == pytest.approx(float(ad.extract_partial(u, (i + 1, k))), rel=1e-13)
        t = ad.truncate(u, 2)
        assert t.order == 2 and np.array_equal(t.coeffs, u.coeffs[:6])
