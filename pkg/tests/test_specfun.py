import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from sphcardioid import specfun as sf
from sphcardioid.errors import DomainError

unit_x = st.floats(-1.0, 1.0, allow_nan=False)


class TestConstants:
    def test_surface_area(self):
        assert sf.surface_area(0) == 2.0
        assert sf.surface_area(1) == pytest.approx(2 * math.pi)
        assert sf.surface_area(2) == pytest.approx(4 * math.pi)
        assert sf.surface_area(3) == pytest.approx(2 * math.pi**2)
        with pytest.raises(DomainError):
            sf.surface_area(-1)

    def test_basis_k1_d2(self):
        c = sf.basis_constants(1, 2)
        assert (c.tau, c.dim_harm, c.c_at_one) == (3.0, 3, 1.0)

    def test_basis_k2_d2(self):
        c = sf.basis_constants(2, 2)
        assert c.tau == 5.0 and c.dim_harm == 5

    def test_basis_k0_d1(self):
        # orthogonality constant of T_0: integral of (1 - x^2)^(-1/2) is pi
        c = sf.basis_constants(0, 1)
        assert c.dim_harm == 1
        assert c.c_norm == pytest.approx(math.pi)

    @pytest.mark.parametrize("d", [1, 2, 3, 5])
    @pytest.mark.parametrize("k", [0, 1, 2, 3, 6])
    def test_c_norm_is_orthogonality_constant(self, k, d):
        # c_{k,d} = int C_k^2 (1 - x^2)^{d/2 - 1} dx, checked by adaptive quadrature
        c = sf.basis_constants(k, d)
        if d == 1:
            val = math.pi * (1.0 if k == 0 else 0.5)
        else:
            val, _ = integrate.quad(lambda x: sf.gegenbauer(k, d, x) ** 2 * (1 - x * x) ** (d / 2 - 1),
                                    -1, 1, epsabs=1e-13)
        assert c.c_norm == pytest.approx(val, rel=1e-9)
        assert c.c_at_one == pytest.approx(c.dim_harm / c.tau)

    @pytest.mark.parametrize("d", [2, 3, 4, 7])
    def test_dim_harmonics_counts(self, d):
        # d_{k,d} = binom(k+d, d) - binom(k+d-2, d)
        for k in range(6):
            expect = math.comb(k + d, d) - (math.comb(k + d - 2, d) if k >= 2 else 0)
            assert sf.dim_harmonics(k, d) == expect


class TestPolynomials:
    def test_gegenbauer_k2_d3(self):
        assert sf.gegenbauer(2, 3, 0.5) == pytest.approx(0.0, abs=1e-15)

    def test_chebyshev_at_one(self):
        assert sf.gegenbauer(5, 1, 1.0) == 1.0

    def test_k7_d4_against_series(self):
        assert sf.gegenbauer(7, 4, -0.3) == pytest.approx(sf.gegenbauer_series(7, 4, -0.3), rel=1e-12)

    def test_against_scipy(self, rng):
        x = rng.uniform(-1, 1, 50)
        for d in range(2, 7):
            for k in range(0, 11):
                np.testing.assert_allclose(sf.gegenbauer(k, d, x),
                                           special.eval_gegenbauer(k, (d - 1) / 2, x),
                                           rtol=1e-10, atol=1e-12)
        for k in range(0, 11):
            np.testing.assert_allclose(sf.gegenbauer(k, 1, x), special.eval_chebyt(k, x),
                                       atol=1e-12)

    def test_recurrence_vs_series(self, rng):
        x = rng.uniform(-1, 1, 200)
        for d in range(2, 7):
            for k in range(0, 11):
                a = sf.gegenbauer(k, d, x)
                b = sf.gegenbauer_series(k, d, x)
                scale = max(1.0, np.max(np.abs(a)))
                assert np.max(np.abs(a - b)) <= 1e-10 * scale

    def test_tilde_examples(self):
        for d in (1, 2, 5):
            assert sf.gegenbauer_tilde(1, d, 0.7) == pytest.approx(0.7)
        assert sf.gegenbauer_tilde(2, 2, 0.0) == pytest.approx(-0.5)
        assert sf.gegenbauer_tilde(3, 5, 1.0) == pytest.approx(1.0)

    def test_deriv_examples(self):
        for d in (2, 3, 6):
            assert sf.gegenbauer_deriv(1, d, 0.3) == pytest.approx(d - 1)
        h = 1e-5
        fd = (sf.gegenbauer(2, 2, 0.25 + h) - sf.gegenbauer(2, 2, 0.25 - h)) / (2 * h)
        assert sf.gegenbauer_deriv(2, 2, 0.25) == pytest.approx(fd, abs=1e-6)
        assert sf.gegenbauer_deriv(3, 1, 0.0) == pytest.approx(-3.0)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_deriv_d1_endpoints(self, k):
        assert sf.gegenbauer_deriv(k, 1, 1.0) == pytest.approx(k**2)
        assert sf.gegenbauer_deriv(k, 1, -1.0) == pytest.approx(k**2 * (-1) ** (k + 1))

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            sf.gegenbauer(2, 2, 1.0 + 1e-9)
        # within the clamp tolerance
        assert sf.gegenbauer_tilde(3, 2, 1.0 + 1e-13) == pytest.approx(1.0)

    def test_k_cap(self):
        with pytest.raises(DomainError):
            sf.gegenbauer(sf.K_MAX + 1, 2, 0.1)

    @given(unit_x, st.integers(0, 12), st.integers(1, 8))
    def test_parity_and_bound(self, x, k, d):
        a = sf.gegenbauer_tilde(k, d, x)
        b = sf.gegenbauer_tilde(k, d, -x)
        assert abs(b - (-1) ** k * a) <= 1e-14 * max(1.0, abs(a))
        assert abs(a) <= 1 + 1e-12


class TestSpecial:
    def test_inc_beta(self):
        assert sf.reg_inc_beta(0.0, 2, 3) == 0.0
        assert sf.reg_inc_beta(1.0, 2, 3) == 1.0
        assert sf.reg_inc_beta(0.25, 0.5, 1) == pytest.approx(0.5, abs=1e-12)
        assert sf.reg_inc_beta(0.5, 2, 2) == pytest.approx(0.5, abs=1e-12)
        with pytest.raises(DomainError):
            sf.reg_inc_beta(1.5, 1, 1)
        with pytest.raises(DomainError):
            sf.reg_inc_beta(0.5, 0, 1)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0.1, 10), st.floats(0.1, 10))
    def test_inc_beta_monotone(self, x1, x2, a, b):
        lo, hi = sorted((x1, x2))
        assert sf.reg_inc_beta(lo, a, b) <= sf.reg_inc_beta(hi, a, b) + 1e-15

    def test_bessel_half_integer(self):
        assert sf.bessel_first_kind(0.5, 1.0, modified=True) == pytest.approx(
            math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-12)
        assert sf.bessel_first_kind(0.5, 1.0, modified=True) == pytest.approx(0.937674, abs=1e-6)
        assert sf.bessel_first_kind(0.5, math.pi) == pytest.approx(0.0, abs=1e-15)
        assert sf.bessel_first_kind(0.0, 0.0, modified=True) == 1.0
        assert sf.bessel_first_kind(1.5, 0.0) == 0.0
        with pytest.raises(DomainError):
            sf.bessel_first_kind(0.5, -1.0)
        with pytest.raises(DomainError):
            sf.bessel_first_kind(0.3, 1.0)

    def test_bessel_against_mpmath(self):
        mpmath = pytest.importorskip("mpmath")
        for nu in (0, 0.5, 1, 2.5, 4.5):
            for x in (0.1, 3.0, 17.0, 50.0):
                assert sf.bessel_first_kind(nu, x, modified=True) == pytest.approx(
                    float(mpmath.besseli(nu, x)), rel=1e-10)
                assert sf.bessel_first_kind(nu, x) == pytest.approx(
                    float(mpmath.besselj(nu, x)), rel=1e-9, abs=1e-13)


class TestQuadrature:
    def test_small_rules(self):
        x, w = sf.quadrature_nodes("gauss_legendre", 1)
        assert x.tolist() == [0.0] and w.tolist() == [2.0]
        x, w = sf.quadrature_nodes("gauss_legendre", 2)
        np.testing.assert_allclose(np.sort(x), [-1 / math.sqrt(3), 1 / math.sqrt(3)])
        np.testing.assert_allclose(w, [1.0, 1.0])

    def test_weight_sums(self):
        for n in (3, 17, 64):
            assert sf.quadrature_nodes("gauss_legendre", n)[1].sum() == pytest.approx(2.0)
            assert sf.quadrature_nodes("gauss_chebyshev", n)[1].sum() == pytest.approx(math.pi)

    def test_chebyshev_orthogonality(self):
        x, w = sf.quadrature_nodes("gauss_chebyshev", 64)
        assert np.sum(w * sf.gegenbauer(4, 1, x) ** 2) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_exactness(self, rng):
        n = 6
        x, w = sf.quadrature_nodes("gauss_legendre", n)
        c = rng.normal(size=2 * n)
        poly = np.polynomial.Polynomial(c)
        exact = poly.integ()(1) - poly.integ()(-1)
        assert np.sum(w * poly(x)) == pytest.approx(exact, rel=1e-12)

    def test_errors(self):
        with pytest.raises(DomainError):
            sf.quadrature_nodes("gauss_legendre", 0)
        with pytest.raises(DomainError):
            sf.quadrature_nodes("simpson", 4)

    def test_read_only_cache(self):
        x, _ = sf.quadrature_nodes("gauss_legendre", 8)
        with pytest.raises(ValueError):
            x[0] = 1.0


@pytest.mark.parametrize("d,k,m", [(2, 1, 1), (2, 2, 2), (2, 1, 2), (3, 2, 2)])
def test_addition_formula(d, k, m):
    from sphcardioid.geometry import uniform_sphere

    rng = np.random.default_rng(7 + 10 * d + k + m)
    u, v = uniform_sphere(d, rng, 2)
    g = uniform_sphere(d, rng, 200_000)
    vals = sf.gegenbauer(k, d, g @ u) * sf.gegenbauer(m, d, g @ v)
    target = sf.gegenbauer(k, d, u @ v) / sf.tau(k, d) if k == m else 0.0
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - target) < 3.5 * se
