import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.special import gammaln

from w2cusum.procgen import (BreakScenario, ProcessModel, ar1, arfima, arma, circulant_embedding,
                             concat_scenario, fractional_acf, generate, ma1, model_acf,
                             model_spectral_density, psi_weights, white_noise)


def acf_by_quadrature(model, h):
    """gamma(h) = 2 int_0^pi f(lam) cos(h lam) dlam, with t = lam^(1/(1-2d)) to tame the pole."""
    if model.d > 0:
        p = 1.0 / (1.0 - 2.0 * model.d)
        top = math.pi ** (1.0 / p)
        f = lambda t: model_spectral_density(model, t**p) * math.cos(h * t**p) * p * t ** (p - 1)
        val, _ = integrate.quad(f, 0.0, top, limit=400, epsabs=1e-12, epsrel=1e-10)
    else:
        f = lambda lam: model_spectral_density(model, lam) * math.cos(h * lam)
        val, _ = integrate.quad(f, 0.0, math.pi, limit=400, epsabs=1e-12, epsrel=1e-10)
    return 2.0 * val


MODELS = [white_noise(2.0), ma1(0.9), ar1(0.9), ar1(-0.5), arma((0.5, -0.3), (0.4,)),
          arma((0.2,), (0.3, 0.2)), arfima(0.0, 0.3, 0.0), arfima(0.5, 0.2, 0.0),
          arfima(0.0, -0.3, 0.4)]


class TestAutocovariance:
    @pytest.mark.parametrize("model", MODELS, ids=lambda m: f"{m.kind}{m.phi}{m.theta}{m.d}")
    def test_against_spectral_quadrature(self, model):
        acf = model_acf(model, 20)
        for h in (0, 1, 2, 5, 20):
            assert acf[h] == pytest.approx(acf_by_quadrature(model, h), rel=1e-6, abs=1e-9)

    def test_ar1_closed_form(self):
        acf = model_acf(ar1(0.6, sigma2=2.0), 5)
        np.testing.assert_allclose(acf, 2.0 / (1 - 0.36) * 0.6 ** np.arange(6), rtol=1e-13)

    def test_fractional_noise_ratio(self):
        # rho(1) = d / (1 - d)
        g = fractional_acf(0.3, 3)
        assert g[1] / g[0] == pytest.approx(0.3 / 0.7, rel=1e-13)

    def test_fractional_noise_gamma_ratio(self):
        # rho(h) = Gamma(h+d) Gamma(1-d) / (Gamma(h-d+1) Gamma(d))
        d = 0.35
        g = model_acf(arfima(0.0, d, 0.0), 200)
        h = np.arange(201)
        rho = np.exp(gammaln(h + d) + gammaln(1 - d) - gammaln(h - d + 1) - gammaln(d))
        np.testing.assert_allclose(g / g[0], rho, rtol=1e-6)

    @given(lam=st.floats(-math.pi, math.pi))
    def test_density_symmetric(self, lam):
        for model in (arma((0.5, -0.3), (0.4,)), arfima(0.9, 0.3, 0.1)):
            assert model_spectral_density(model, lam) == model_spectral_density(model, -lam)

    def test_psi_weights(self):
        np.testing.assert_allclose(psi_weights([0.5], [0.4], 4), [1.0, 0.9, 0.45, 0.225])


class TestGenerate:
    def test_deterministic(self):
        for model in (white_noise(), ar1(0.9), arma((0.5,), (0.3, 0.1)), arfima(0.2, 0.3, 0.0)):
            a = generate(model, 1000, 42).values
            b = generate(model, 1000, 42).values
            np.testing.assert_array_equal(a, b)
            assert not np.array_equal(a, generate(model, 1000, 43).values)

    @pytest.mark.parametrize("model", [ar1(0.9), ma1(0.9), arma((0.5, -0.3), (0.4,)), arfima(0.0, 0.3, 0.0)],
                             ids=["ar1", "ma1", "arma", "arfima"])
    def test_stationary_from_first_sample(self, model):
        # exact simulation: the variance of x_0 and x_{n-1} both match gamma(0)
        x = np.array([generate(model, 64, s).values for s in range(4000)])
        g0 = model_acf(model, 1)[0]
        se = g0 * math.sqrt(2 / 4000)
        assert abs(x[:, 0].var() - g0) < 5 * se
        assert abs(x[:, -1].var() - g0) < 5 * se
        cov1 = np.mean(x[:, 10] * x[:, 11])
        assert cov1 == pytest.approx(model_acf(model, 1)[1], abs=5 * se)

    def test_halves_have_equal_variance(self):
        model = ar1(0.9)
        first, second = [], []
        for seed in range(200):
            x = generate(model, 1024, seed).values
            first.append(x[:512].var())
            second.append(x[512:].var())
        diff = np.mean(first) - np.mean(second)
        se = math.sqrt((np.var(first) + np.var(second)) / 200)
        assert abs(diff) < 3 * se

    def test_long_sample_acf(self):
        model = arfima(0.0, 0.25, 0.0)
        x = generate(model, 2**16, 1).values
        e = x - x.mean()
        rho1 = (e[:-1] @ e[1:]) / (e @ e)
        assert rho1 == pytest.approx(0.25 / 0.75, abs=0.02)

    def test_validation(self):
        ProcessModel("arfima", d=0.45)
        with pytest.raises(ValueError):
            ProcessModel("arfima", d=0.6)
        with pytest.raises(ValueError):
            ar1(1.0)
        with pytest.raises(ValueError):
            arma((0.5, 0.6))
        with pytest.raises(ValueError):
            ProcessModel("ar1", phi=(0.5,), d=0.1)
        with pytest.raises(ValueError):
            white_noise(0.0)
        with pytest.raises(ValueError):
            ProcessModel("garch")
        with pytest.raises(ValueError):
            generate(white_noise(), 0, 1)

    @given(phi=st.floats(-0.99, 0.99))
    def test_causal_ar1_accepted(self, phi):
        assert ar1(phi).phi == (phi,)

    def test_dict_round_trip(self):
        m = arfima(0.5, 0.2, 0.1, sigma2=3.0)
        assert ProcessModel.from_dict(m.to_dict()) == m


class TestCirculant:
    def test_covariance_matches(self):
        acf = model_acf(arfima(0.0, 0.4, 0.0), 16)
        rng = np.random.default_rng(0)
        x = np.array([circulant_embedding(acf, 9, rng) for _ in range(20000)])
        emp = x.T @ x / len(x)
        target = acf[np.abs(np.subtract.outer(np.arange(9), np.arange(9)))]
        assert np.max(np.abs(emp - target)) < 5 * acf[0] * math.sqrt(2 / 20000)

    def test_matches_recursion_for_ar1(self):
        model = ar1(0.7)
        acf = model_acf(model, 2048)
        rng = np.random.default_rng(3)
        emb = np.concatenate([circulant_embedding(acf, 2048, rng) for _ in range(40)])
        rec = np.concatenate([generate(model, 2048, s).values for s in range(40)])

        def rho(x, h):
            return np.corrcoef(x[:-h], x[h:])[0, 1]

        for h in (1, 2, 5):
            assert rho(emb, h) == pytest.approx(0.7**h, abs=0.03)
            assert rho(rec, h) == pytest.approx(0.7**h, abs=0.03)

    def test_length(self, rng):
        assert len(circulant_embedding(np.array([1.0, 0.5]), 100, rng)) == 100


class TestScenario:
    def test_concat(self):
        sc = BreakScenario(ar1(0.9), ar1(0.5), 300, 200)
        ts = concat_scenario(sc, 7)
        assert len(ts) == 500
        assert ts.meta["breakpoint"] == 300 and ts.meta["kappa"] == pytest.approx(0.6)
        np.testing.assert_array_equal(ts.values, concat_scenario(sc, np.random.SeedSequence(7)).values)

    def test_segments_differ(self):
        ts = concat_scenario(BreakScenario(white_noise(1.0), white_noise(9.0), 5000, 5000), 1)
        assert ts.values[5000:].var() / ts.values[:5000].var() == pytest.approx(9.0, rel=0.1)

    def test_lengths_validated(self):
        with pytest.raises(ValueError):
            BreakScenario(white_noise(), white_noise(), 0, 5)
