"""Seeded Gaussian test processes and single-breakpoint scenarios.

Spectral densities carry the ``1/(2 pi)`` factor, so unit white noise has
``f = 1/(2 pi)`` and ``gamma(h) = int_{-pi}^{pi} f(lam) cos(lam h) dlam``.
ARMA parts follow ``(1 - sum phi_i B^i) X = (1 + sum theta_j B^j) Z``;
ARFIMA adds ``(1 - B)^d`` on the left.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, signal
from scipy.special import gammaln

from .errors import EmbeddingWarning

KINDS = ("white_noise", "ma1", "ar1", "arma", "arfima")


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    sample_rate: float | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ProcessModel:
    kind: str
    phi: tuple[float, ...] = ()
    theta: tuple[float, ...] = ()
    d: float = 0.0
    sigma2: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if not -0.5 < self.d < 0.5:
            raise ValueError(f"memory parameter d must lie in (-0.5, 0.5), got {self.d}")
        if self.kind != "arfima" and self.d != 0.0:
            raise ValueError("only arfima models carry a memory parameter")
        if self.phi:
            # causality: roots of 1 - sum phi_i z^i outside the unit circle
            if ar_radius(self.phi) >= 1.0 - 1e-12:
                raise ValueError(f"AR part {self.phi} is not causal")

    @property
    def is_long_memory(self) -> bool:
        return self.kind == "arfima" and self.d > 0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "phi": list(self.phi), "theta": list(self.theta),
                "d": self.d, "sigma2": self.sigma2}

    @classmethod
    def from_dict(cls, spec: dict) -> "ProcessModel":
        return cls(spec["kind"], tuple(spec.get("phi", ())), tuple(spec.get("theta", ())),
                   float(spec.get("d", 0.0)), float(spec.get("sigma2", 1.0)))


def ar_radius(phi) -> float:
    """Largest modulus of the inverse AR roots, i.e. the roots of ``z^p - sum phi_i z^{p-i}``."""
    phi = np.asarray(phi, dtype=float)
    if phi.size == 0:
        return 0.0
    return float(np.max(np.abs(np.roots(np.r_[1.0, -phi]))))


def white_noise(sigma2: float = 1.0) -> ProcessModel:
    return ProcessModel("white_noise", sigma2=sigma2)


def ma1(theta: float, sigma2: float = 1.0) -> ProcessModel:
    return ProcessModel("ma1", theta=(theta,), sigma2=sigma2)


def ar1(phi: float, sigma2: float = 1.0) -> ProcessModel:
    return ProcessModel("ar1", phi=(phi,), sigma2=sigma2)


def arma(phi=(), theta=(), sigma2: float = 1.0) -> ProcessModel:
    return ProcessModel("arma", phi=tuple(phi), theta=tuple(theta), sigma2=sigma2)


def arfima(phi: float, d: float, theta: float, sigma2: float = 1.0) -> ProcessModel:
    return ProcessModel("arfima", phi=(phi,) if phi else (), theta=(theta,) if theta else (),
                        d=d, sigma2=sigma2)


@dataclass(frozen=True)
class BreakScenario:
    model1: ProcessModel
    model2: ProcessModel
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("segment lengths must be >= 1")

    @property
    def kappa(self) -> float:
        return self.n1 / (self.n1 + self.n2)


def model_spectral_density(model: ProcessModel, lam) -> np.ndarray:
    """Spectral density at ``lam``; ``+inf`` at 0 for long memory."""
    lam = np.asarray(lam, dtype=float)
    z = np.exp(-1j * lam)
    num = np.abs(np.polyval(np.r_[model.theta[::-1], 1.0], z)) ** 2
    den = np.abs(np.polyval(np.r_[-np.asarray(model.phi)[::-1], 1.0], z)) ** 2
    out = model.sigma2 / (2 * np.pi) * num / den
    if model.d != 0.0:
        with np.errstate(divide="ignore"):
            out = out * (2.0 * np.abs(np.sin(lam / 2.0))) ** (-2.0 * model.d)
    return out


def psi_weights(phi, theta, count: int) -> np.ndarray:
    """MA(inf) coefficients of ``theta(B)/phi(B)``."""
    impulse = np.zeros(count)
    impulse[0] = 1.0
    return signal.lfilter(np.r_[1.0, theta], np.r_[1.0, -np.asarray(phi, dtype=float)], impulse)


def _arma_acf(phi, theta, sigma2: float, max_lag: int) -> np.ndarray:
    """ARMA autocovariances from the ``psi``-weight recursion (closed form for p <= 1)."""
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    p, q = len(phi), len(theta)
    if p == 0:
        c = np.r_[1.0, theta]
        acf = np.zeros(max_lag + 1)
        full = np.correlate(c, c, mode="full")[q:]
        acf[: min(len(full), max_lag + 1)] = full[: max_lag + 1]
        return sigma2 * acf
    if p == 1 and q <= 1:
        a = phi[0]
        t = theta[0] if q else 0.0
        g0 = (1 + 2 * a * t + t * t) / (1 - a * a)
        g1 = (1 + a * t) * (a + t) / (1 - a * a)
        acf = np.empty(max_lag + 1)
        acf[0] = g0
        if max_lag >= 1:
            acf[1:] = g1 * a ** np.arange(max_lag)
        return sigma2 * acf
    # general case: truncate psi weights where they fall below machine precision
    radius = min(max(ar_radius(phi), 1e-3), 1.0 - 1e-12)
    count = int(math.ceil(np.log(1e-18) / np.log(radius))) + q + max_lag + 10
    psi = psi_weights(phi, theta, count)
    return sigma2 * np.array([psi[: count - h] @ psi[h:] for h in range(max_lag + 1)])


def fractional_acf(d: float, max_lag: int, sigma2: float = 1.0) -> np.ndarray:
    """Autocovariances of ``(1 - B)^{-d} Z`` via ``gamma(h) = gamma(h-1) (h-1+d)/(h-d)``."""
    g = np.empty(max_lag + 1)
    g[0] = sigma2 * math.exp(gammaln(1 - 2 * d) - 2 * gammaln(1 - d))
    if max_lag:
        h = np.arange(1, max_lag + 1)
        g[1:] = g[0] * np.cumprod((h - 1 + d) / (h - d))
    return g


def model_acf(model: ProcessModel, max_lag: int) -> np.ndarray:
    """Autocovariances ``gamma(0..max_lag)``.

    ARFIMA lags come from convolving the fractional-noise autocovariance with
    the (geometrically decaying) autocovariance of the ARMA filter.
    """
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    if model.kind != "arfima" or model.d == 0.0:
        return _arma_acf(model.phi, model.theta, model.sigma2, max_lag)
    if not model.phi:
        filt = _arma_acf((), model.theta, 1.0, len(model.theta))
    else:
        radius = min(max(ar_radius(model.phi), 1e-3), 1.0 - 1e-12)
        span = int(math.ceil(np.log(1e-18) / np.log(radius))) + len(model.theta) + 1
        filt = _arma_acf(model.phi, model.theta, 1.0, span)
    span = len(filt) - 1
    fi = fractional_acf(model.d, max_lag + span, model.sigma2)
    two_sided = np.r_[filt[:0:-1], filt]
    out = np.empty(max_lag + 1)
    for h in range(max_lag + 1):
        lags = np.abs(np.arange(h - span, h + span + 1))
        out[h] = two_sided @ fi[lags]
    return out


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def circulant_embedding(acf: np.ndarray, n: int, rng: np.random.Generator, max_doublings: int = 4,
                        acf_fn=None) -> np.ndarray:
    """Exact stationary Gaussian sample of length ``n`` with autocovariance ``acf``.

    ``acf_fn(m)`` (if given) supplies lags ``0..m`` when the embedding is enlarged.
    """
    m = 1 << max(int(math.ceil(math.log2(max(2 * (n - 1), 2)))), 1)
    for attempt in range(max_doublings + 1):
        half = m // 2
        if acf_fn is not None and len(acf) < half + 1:
            acf = acf_fn(half)
        if len(acf) < half + 1:
            acf = np.r_[acf, np.zeros(half + 1 - len(acf))]
        row = np.r_[acf[: half + 1], acf[half - 1 : 0 : -1]]
        eig = np.fft.rfft(row).real
        if eig.min() >= -1e-10 * eig.max():
            break
        if attempt == max_doublings:
            if eig.min() < -1e-6 * eig.max():
                raise RuntimeError("circulant embedding failed after 4 doublings")
            warnings.warn("clipping negative circulant eigenvalues", EmbeddingWarning, stacklevel=2)
            break
        m *= 2
    eig = np.clip(eig, 0.0, None)
    # Hermitian noise with E|Z_k|^2 = m on the full circle gives Cov = row
    z = rng.standard_normal(half + 1) + 1j * rng.standard_normal(half + 1)
    z[0] = z[0].real * math.sqrt(2.0)
    z[-1] = z[-1].real * math.sqrt(2.0)
    x = np.fft.irfft(np.sqrt(eig * m / 2.0) * z, n=m)
    return x[:n]


def _arma_recursion(model: ProcessModel, n: int, rng: np.random.Generator) -> np.ndarray:
    phi = np.asarray(model.phi, dtype=float)
    theta = np.asarray(model.theta, dtype=float)
    p, q = len(phi), len(theta)
    sigma = math.sqrt(model.sigma2)
    if p == 0:
        e = sigma * rng.standard_normal(n + q)
        return np.convolve(e, np.r_[1.0, theta], mode="valid") if q else e
    # joint stationary law of (x_{0}, .., x_{1-p}, e_{0}, .., e_{1-q})
    acf = _arma_acf(phi, theta, model.sigma2, p)
    psi = psi_weights(phi, theta, max(p, q) + 1)
    size = p + q
    cov = np.zeros((size, size))
    for a in range(p):
        for b in range(p):
            cov[a, b] = acf[abs(a - b)]
    for a in range(p):
        for b in range(q):
            # Cov(x_{-a}, e_{-b}) = sigma2 psi_{b-a} for b >= a
            if b >= a:
                cov[a, p + b] = cov[p + b, a] = model.sigma2 * psi[b - a]
    cov[p:, p:] = model.sigma2 * np.eye(q)
    init = linalg.cholesky(cov + 1e-14 * np.trace(cov) * np.eye(size), lower=True) @ rng.standard_normal(size)
    x_past = init[:p]
    e_past = init[p:]
    e = sigma * rng.standard_normal(n)
    # lfilter state from the past values (direct form II transposed)
    b = np.r_[1.0, theta]
    a = np.r_[1.0, -phi]
    zi = signal.lfiltic(b, a, y=x_past, x=e_past) if q else signal.lfiltic(b, a, y=x_past)
    out, _ = signal.lfilter(b, a, e, zi=zi)
    return out


def generate(model: ProcessModel, n: int, seed) -> TimeSeries:
    """Exact Gaussian sample of length ``n``; identical output for identical seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    if model.kind == "arfima" and model.d != 0.0:
        acf = model_acf(model, n)
        values = circulant_embedding(acf, n, rng, acf_fn=lambda m: model_acf(model, m))
    elif model.kind == "white_noise":
        values = math.sqrt(model.sigma2) * rng.standard_normal(n)
    else:
        values = _arma_recursion(model, n, rng)
    return TimeSeries(values, meta={"model": model.to_dict()})


def concat_scenario(sc: BreakScenario, seed) -> TimeSeries:
    """``n1`` samples of ``model1`` then ``n2`` independent samples of ``model2``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s1, s2 = ss.spawn(2)
    x1 = generate(sc.model1, sc.n1, np.random.default_rng(s1)).values
    x2 = generate(sc.model2, sc.n2, np.random.default_rng(s2)).values
    return TimeSeries(np.concatenate([x1, x2]),
                      meta={"breakpoint": sc.n1, "kappa": sc.kappa,
                            "model1": sc.model1.to_dict(), "model2": sc.model2.to_dict()})
