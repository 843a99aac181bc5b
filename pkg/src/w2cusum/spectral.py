"""Scalogram, autocovariances of squared coefficients and Bartlett (HAC) estimators."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputWarning
from .procgen import ProcessModel, model_spectral_density
from .wavelets import FilterBank, WaveletPyramid, moment_free_taps


@dataclass(frozen=True)
class ScaleStats:
    j: int
    scalogram: float
    autocov: np.ndarray
    q: int
    hac_variance: float

    @property
    def degenerate(self) -> bool:
        return self.hac_variance <= 0.0

    def to_dict(self) -> dict:
        return {"j": self.j, "scalogram": self.scalogram, "autocov": self.autocov.tolist(),
                "q": self.q, "hac_variance": self.hac_variance}


@dataclass(frozen=True)
class MultiScaleStats:
    """Between-scale vectors ``Y_i`` (rows) for scales ``J1..J2``.

    Column 0 holds ``W^2_{J2,i}``; column ``u`` sums the ``2^u`` squared
    coefficients of scale ``J2-u`` that sit under block ``i``.
    """

    J1: int
    J2: int
    Y: np.ndarray
    dropped: int = 0
    q: int | None = None
    Gamma_hat: np.ndarray | None = None

    @property
    def d(self) -> int:
        return self.J2 - self.J1 + 1

    @property
    def n_blocks(self) -> int:
        return self.Y.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self.Y.mean(axis=0)

    def to_dict(self) -> dict:
        return {"J1": self.J1, "J2": self.J2, "n_blocks": self.n_blocks, "dropped": self.dropped,
                "q": self.q, "mean": self.mean.tolist(),
                "Gamma_hat": None if self.Gamma_hat is None else self.Gamma_hat.tolist()}


def bartlett_weights(q: int) -> np.ndarray:
    """``w_l(q) = 1 - l/(1+q)`` for ``l = 0..q``."""
    return 1.0 - np.arange(q + 1) / (1.0 + q)


def sample_autocov(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Autocovariances with divisor ``len(x)`` and centering at the sample mean."""
    x = np.asarray(x, dtype=float)
    m = len(x)
    if not 0 <= max_lag < m:
        raise ValueError(f"max_lag must lie in [0, {m - 1}], got {max_lag}")
    e = x - x.mean()
    return np.array([e[: m - l] @ e[l:] for l in range(max_lag + 1)]) / m


def sample_cross_autocov(Y: np.ndarray, max_lag: int) -> np.ndarray:
    """Matrix lags ``gamma(tau) = (1/m) sum_i (Y_i - Ybar)(Y_{i+tau} - Ybar)^T``, ``tau = 0..max_lag``."""
    Y = np.asarray(Y, dtype=float)
    m = Y.shape[0]
    if not 0 <= max_lag < m:
        raise ValueError(f"max_lag must lie in [0, {m - 1}], got {max_lag}")
    E = Y - Y.mean(axis=0)
    return np.stack([E[: m - t].T @ E[t:] for t in range(max_lag + 1)]) / m


def hac_from_autocov(gamma: np.ndarray, q: int) -> float:
    w = bartlett_weights(q)
    return float(gamma[0] + 2.0 * (w[1:] @ gamma[1 : q + 1]))


def scalogram(pyr: WaveletPyramid, j: int) -> float:
    w = pyr[j]
    return float(np.mean(w * w))


def autocovariance(pyr: WaveletPyramid, j: int, max_lag: int) -> np.ndarray:
    w = pyr[j]
    return sample_autocov(w * w, max_lag)


def bartlett_variance(pyr: WaveletPyramid, j: int, q: int) -> float:
    """Bartlett estimate ``s^2_{j,n_j}`` of the long-run variance of ``W^2_{j,.}``."""
    w2 = pyr[j] ** 2
    if not 0 <= q < len(w2):
        raise ValueError(f"bandwidth q={q} out of range for n_j={len(w2)}")
    return max(hac_from_autocov(sample_autocov(w2, q), q), 0.0)


def scale_stats(pyr: WaveletPyramid, j: int, bandwidth="auto") -> ScaleStats:
    w2 = pyr[j] ** 2
    q = select_bandwidth(w2, bandwidth)
    gamma = sample_autocov(w2, q)
    return ScaleStats(j=j, scalogram=float(w2.mean()), autocov=gamma, q=q,
                      hac_variance=max(hac_from_autocov(gamma, q), 0.0))


def select_bandwidth(series, method="auto") -> int:
    """Bartlett truncation lag.

    ``method`` is an integer (fixed lag) or ``"auto"``: the Newey-West (1994)
    plug-in rule with pilot lag ``floor(4 (m/100)^{2/9})``, capped at
    ``floor(m^{1/3})``.  Vector series use traces of the lagged covariance
    matrices.  A zero pilot variance warns and returns 1.
    """
    if isinstance(method, (int, np.integer)) and not isinstance(method, bool):
        if method < 0:
            raise ValueError("fixed bandwidth must be >= 0")
        return int(method)
    if method not in ("auto", "newey_west", "newey_west_auto"):
        raise ValueError(f"unknown bandwidth method {method!r}")
    x = np.asarray(series, dtype=float)
    m = x.shape[0]
    if m < 2:
        raise ValueError("automatic bandwidth needs at least 2 observations")
    pilot = min(int(math.floor(4.0 * (m / 100.0) ** (2.0 / 9.0))), m - 1)
    if x.ndim == 1:
        gam = sample_autocov(x, pilot)
    else:
        gam = np.trace(sample_cross_autocov(x, pilot), axis1=1, axis2=2)
    lags = np.arange(1, pilot + 1)
    s0 = gam[0] + 2.0 * gam[1:].sum()
    s1 = 2.0 * (lags @ gam[1:])
    cap = int(math.floor(m ** (1.0 / 3.0) + 1e-9))
    if not s0 > 0.0:
        warnings.warn("zero pilot variance in bandwidth selection; using q = 1",
                      DegenerateInputWarning, stacklevel=2)
        return min(1, m - 1)
    q = int(math.floor(1.1447 * ((s1 / s0) ** 2 * m) ** (1.0 / 3.0)))
    return max(0, min(q, cap, m - 1))


def between_scale_series(pyr: WaveletPyramid, J1: int, J2: int) -> MultiScaleStats:
    """Stack block sums of squared coefficients from scales ``J2, J2-1, .., J1``."""
    if not pyr.J1 <= J1 <= J2 <= pyr.J2:
        raise ValueError(f"scales {J1}..{J2} not all present in pyramid ({pyr.J1}..{pyr.J2})")
    m = len(pyr[J2])
    for u in range(1, J2 - J1 + 1):
        m = min(m, len(pyr[J2 - u]) >> u)
    if m < 2:
        raise ValueError("fewer than 2 between-scale vectors available")
    dropped = len(pyr[J2]) - m
    cols = []
    for u in range(J2 - J1 + 1):
        w2 = pyr[J2 - u][: m << u] ** 2
        cols.append(w2.reshape(m, 1 << u).sum(axis=1))
    return MultiScaleStats(J1=J1, J2=J2, Y=np.column_stack(cols), dropped=dropped)


def bartlett_covariance(ms: MultiScaleStats | np.ndarray, q: int) -> np.ndarray:
    """Bartlett estimate ``Gamma_hat = sum_{|tau|<=q} w_tau(q) gamma(tau)``, symmetrized."""
    Y = ms.Y if isinstance(ms, MultiScaleStats) else np.asarray(ms, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if not 0 <= q < Y.shape[0]:
        raise ValueError(f"bandwidth q={q} out of range for {Y.shape[0]} vectors")
    gam = sample_cross_autocov(Y, q)
    w = bartlett_weights(q)
    G = gam[0].copy()
    for t in range(1, q + 1):
        G += w[t] * (gam[t] + gam[t].T)
    G = 0.5 * (G + G.T)
    if not np.any(G):
        warnings.warn("between-scale series is constant; covariance estimate is zero",
                      DegenerateInputWarning, stacklevel=2)
    return G


def _integrate(fn, breaks, nodes: int = 32, tol: float = 1e-10, max_refine: int = 8) -> float:
    """Composite Gauss-Legendre on the panels ``breaks``, doubling panels until converged."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    breaks = np.asarray(breaks, dtype=float)
    prev = None
    for _ in range(max_refine):
        a, b = breaks[:-1], breaks[1:]
        half = 0.5 * (b - a)
        pts = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
        val = float(np.sum(half[:, None] * w[None, :] * fn(pts.ravel()).reshape(pts.shape)))
        if prev is not None and abs(val - prev) <= tol * max(abs(val), 1e-300):
            return val
        prev = val
        breaks = np.sort(np.r_[breaks, 0.5 * (a + b)])
    return val


def _graded_breaks(j: int, levels: int = 40) -> np.ndarray:
    # geometric panels towards 0 below 2^{-j} pi, uniform above
    edge = math.pi * 2.0 ** (-j)
    geo = edge * 2.0 ** -np.arange(levels, 0, -1)
    uniform = np.linspace(edge, math.pi, 2 ** (j + 2) + 1)
    return np.r_[0.0, geo, uniform]


def theoretical_wavelet_variance(model: ProcessModel, j: int, bank: FilterBank) -> float:
    """``sigma_j^2 = int_{-pi}^{pi} |H_j(lam)|^2 f(lam) dlam`` by graded Gauss-Legendre panels."""
    return 2.0 * _integrate(lambda lam: gain_times_density(model, j, bank, lam), _graded_breaks(j))


def gain_times_density(model: ProcessModel, j: int, bank: FilterBank, lam) -> np.ndarray:
    """``|H_j(lam)|^2 f(lam)`` with the ``|1 - e^{-i lam}|`` powers combined (finite at 0)."""
    lam = np.asarray(lam, dtype=float)
    r = moment_free_taps(bank, j)
    R = np.exp(-1j * np.multiply.outer(lam, np.arange(len(r)))) @ r
    short = ProcessModel("arma", model.phi, model.theta, 0.0, model.sigma2)
    power = 2 * bank.vanishing_moments - 2 * model.d
    return np.abs(2.0 * np.sin(lam / 2.0)) ** power * np.abs(R) ** 2 * model_spectral_density(short, lam)


def coefficient_spectral_density(model: ProcessModel, j: int, bank: FilterBank, lam) -> np.ndarray:
    """Spectral density of ``{W_{j,k}}_k``: the ``2^j``-fold aliasing of ``|H_j|^2 f``."""
    lam = np.asarray(lam, dtype=float)
    scale = 2.0 ** -j
    out = np.zeros_like(lam)
    for l in range(1 << j):
        # fold into [-pi, pi]
        mu = scale * (lam + 2 * np.pi * l)
        mu = (mu + np.pi) % (2 * np.pi) - np.pi
        out += scale * gain_times_density(model, j, bank, mu)
    return out


def squared_coeff_lrv(model: ProcessModel, j: int, bank: FilterBank) -> float:
    """Long-run variance of ``W^2_{j,.}`` for a Gaussian process: ``4 pi int D_j(lam)^2 dlam``."""

    def integrand(lam):
        return coefficient_spectral_density(model, j, bank, lam) ** 2

    return 4.0 * np.pi * 2.0 * _integrate(integrand, _graded_breaks(0))
