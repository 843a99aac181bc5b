import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from w2cusum.errors import SeriesTooShortError
from w2cusum.wavelets import (build_filters, coeff_count, min_length, moment_free_taps,
                              parse_family, squared_gain, transfer_function, transform)


def direct_transform(x, bank, j):
    """W_{j,k} = sum_m g_j[m] x[2^j k + m], k = 0..n_j-1 (0-based)."""
    g = bank.taps(j)
    n_j = coeff_count(len(x), j, bank.support_T)
    step = 1 << j
    return np.array([x[step * k: step * k + len(g)] @ g for k in range(n_j)])


class TestFilters:
    def test_db2_closed_form(self):
        s3 = math.sqrt(3.0)
        expected = np.array([1 + s3, 3 + s3, 3 - s3, 1 - s3]) / (4 * math.sqrt(2.0))
        np.testing.assert_allclose(build_filters("db2", 1).lowpass, expected, atol=1e-15)

    @pytest.mark.parametrize("order", range(2, 11))
    def test_orthonormal_lowpass(self, order):
        h = build_filters(order, 1).lowpass
        assert len(h) == 2 * order
        assert h.sum() == pytest.approx(math.sqrt(2.0), abs=1e-13)
        for shift in range(order):
            inner = h[2 * shift:] @ h[: len(h) - 2 * shift]
            assert inner == pytest.approx(1.0 if shift == 0 else 0.0, abs=1e-13)

    @pytest.mark.parametrize("order", range(2, 11))
    def test_vanishing_moments(self, order):
        bank = build_filters(order, 3)
        for j in (1, 2, 3):
            g = bank.taps(j)
            k = np.arange(len(g)) / len(g)
            for p in range(order):
                assert abs(g @ k**p) < 1e-10

    @pytest.mark.parametrize("j", [1, 2, 3, 5])
    def test_equivalent_filter_length_and_norm(self, j):
        bank = build_filters("db4", j)
        g = bank.taps(j)
        assert len(g) == (2**j - 1) * (bank.support_T - 1) + 1
        assert g @ g == pytest.approx(1.0, abs=1e-12)

    def test_family_parsing(self):
        assert parse_family("DB3") == 3
        assert parse_family(" db10 ") == 10
        with pytest.raises(ValueError):
            parse_family("haar")
        with pytest.raises(ValueError):
            parse_family(11)

    def test_scale_out_of_range(self):
        with pytest.raises(ValueError):
            build_filters("db2", 0)
        with pytest.raises(KeyError):
            build_filters("db2", 2).taps(3)

    def test_lagged_form(self):
        bank = build_filters("db2", 2)
        lags, h = bank.lagged(2)
        assert lags[0] == -1 and lags[-1] == -len(bank.taps(2))
        np.testing.assert_array_equal(h, bank.taps(2))


class TestGain:
    @pytest.mark.parametrize("family", ["db2", "db5"])
    def test_squared_gain_matches_transfer(self, family):
        bank = build_filters(family, 4)
        lam = np.linspace(0.01, math.pi, 301)
        for j in range(1, 5):
            direct = np.abs(transfer_function(bank, j, lam)) ** 2
            np.testing.assert_allclose(squared_gain(bank, j, lam), direct, rtol=1e-9, atol=1e-10)

    def test_gain_energy(self):
        # Parseval: (1/2pi) int |H_j|^2 = sum g^2 = 1
        bank = build_filters("db3", 3)
        lam = np.linspace(-math.pi, math.pi, 20001)
        for j in (1, 2, 3):
            val = np.trapezoid(squared_gain(bank, j, lam), lam) / (2 * math.pi)
            assert val == pytest.approx(1.0, abs=1e-8)

    def test_moment_free_taps_reconstruct(self):
        bank = build_filters("db3", 2)
        r = moment_free_taps(bank, 2)
        diff = np.array([1.0])
        for _ in range(3):
            diff = np.convolve(diff, [1.0, -1.0])
        np.testing.assert_allclose(np.convolve(r, diff), bank.taps(2), atol=1e-13)

    def test_gain_near_zero_has_order_2m(self):
        bank = build_filters("db2", 2)
        lam = np.array([1e-4, 2e-4])
        ratio = squared_gain(bank, 2, lam[1:]) / squared_gain(bank, 2, lam[:1])
        assert ratio[0] == pytest.approx(2.0**4, rel=1e-6)


class TestTransform:
    def test_coeff_count(self):
        assert coeff_count(1024, 1, 4) == 507
        assert coeff_count(1024, 3, 4) == 124
        assert coeff_count(10, 4, 4) == 0

    def test_counts_match_formula(self, rng):
        bank = build_filters("db2", 5)
        for n in (200, 513, 1024, 1031):
            pyr = transform(rng.standard_normal(n), 1, 5, bank)
            for j in range(1, 6):
                assert len(pyr[j]) == coeff_count(n, j, 4)

    @pytest.mark.parametrize("family", ["db2", "db4", "db7"])
    def test_pyramid_equals_direct(self, rng, family):
        bank = build_filters(family, 4)
        x = rng.standard_normal(2000)
        pyr = transform(x, 1, 4, bank)
        for j in range(1, 5):
            np.testing.assert_allclose(pyr[j], direct_transform(x, bank, j), atol=1e-10, rtol=0)

    @given(order=st.integers(2, 6), degree=st.integers(0, 5), seed=st.integers(0, 2**32 - 1))
    def test_polynomial_annihilation(self, order, degree, seed):
        degree = min(degree, order - 1)
        bank = build_filters(order, 3)
        n = 1024
        t = np.arange(n) / n
        coef = np.random.default_rng(seed).uniform(-5, 5, degree + 1)
        x = np.polyval(coef, t)
        pyr = transform(x, 1, 3, bank)
        for j in (1, 2, 3):
            assert np.max(np.abs(pyr[j])) <= 1e-8

    def test_degree_m_is_not_annihilated(self):
        bank = build_filters("db2", 2)
        t = np.arange(512) / 512
        assert np.max(np.abs(transform(t**2, 1, 2, bank)[1])) > 1e-8

    def test_too_short(self):
        bank = build_filters("db2", 5)
        n = min_length(5, 4)
        transform(np.ones(n), 1, 5, bank)
        with pytest.raises(SeriesTooShortError):
            transform(np.ones(n - 1), 1, 5, bank)

    def test_rejects_bad_input(self):
        bank = build_filters("db2", 3)
        with pytest.raises(ValueError):
            transform(np.r_[np.ones(100), np.nan], 1, 3, bank)
        with pytest.raises(ValueError):
            transform(np.ones((10, 10)), 1, 3, bank)
        with pytest.raises(ValueError):
            transform(np.ones(100), 2, 1, bank)

    def test_scale_subset(self, rng):
        bank = build_filters("db2", 4)
        x = rng.standard_normal(800)
        full = transform(x, 1, 4, bank)
        part = transform(x, 3, 4, bank)
        assert set(part.coeffs) == {3, 4}
        np.testing.assert_array_equal(part[3], full[3])
        with pytest.raises(KeyError):
            part[1]

    @given(shift=st.floats(-1e3, 1e3), scale=st.floats(0.01, 100.0))
    def test_affine_equivariance(self, shift, scale):
        bank = build_filters("db2", 3)
        x = np.random.default_rng(5).standard_normal(256)
        a = transform(x, 1, 3, bank)
        b = transform(scale * x + shift, 1, 3, bank)
        for j in (1, 2, 3):
            np.testing.assert_allclose(b[j], scale * a[j], atol=1e-9 * (1 + abs(shift)))
