"""Limit laws of the CVM and KSM functionals of ``d`` independent Brownian bridges.

    C(d) = int_0^1 sum_{l<=d} B_l(t)^2 dt        D(d) = sup_t sum_{l<=d} B_l(t)^2

Three sources of quantiles are available: the stored tables (d <= 6,
alpha in {0.05, 0.01}), inversion of the Kiefer series, and the seeded
Monte-Carlo oracle in :mod:`w2cusum.bridge`.

The stored D-table is on the *norm* scale: its entries are quantiles of
``sqrt(D(d)) = sup_t |B(t)|`` (the d = 1 entry 1.358 is the Kolmogorov
quantile).  ``quantile(..., scale="norm")`` works on that scale for every
method; :func:`critical_value` always returns a threshold for the squared
statistic that the test actually computes.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln

from .bridge import simulate_bridge_functionals
from .special import bessel_j_pair, bessel_zeros, parabolic_cylinder_d

TABLE_VERSION = "kiefer-tables/1"
TABLE_ALPHAS = (0.05, 0.01)

TABLE_CVM: dict[float, tuple[float, ...]] = {
    0.05: (0.4605, 0.7488, 1.0014, 1.2397, 1.4691, 1.6848),
    0.01: (0.7401, 1.0721, 1.3521, 1.6267, 1.8667, 2.1259),
}
# quantiles of sup_t |B(t)| (norm scale)
TABLE_KSM: dict[float, tuple[float, ...]] = {
    0.05: (1.358, 1.58379, 1.7472, 1.88226, 2.00, 2.10597),
    0.01: (1.627624, 1.842726, 2.001, 2.132572, 2.24798, 2.35209),
}
KSM_TABLE_SCALE = "norm"

MC_DEFAULT_REPS = 200_000
MC_DEFAULT_GRID = 4096
MC_DEFAULT_SEED = 20240611
SERIES_TOL = 1e-12
SERIES_MAX_TERMS = 10_000
METHODS = ("table", "series", "mc")


class SeriesDivergenceWarning(UserWarning):
    """A Kiefer series did not converge; the Monte-Carlo oracle was used instead."""


@dataclass(frozen=True)
class LimitLaw:
    kind: str
    d: int

    def __post_init__(self):
        if self.kind not in ("cvm", "ksm"):
            raise ValueError(f"law kind must be 'cvm' or 'ksm', got {self.kind!r}")
        if not 1 <= self.d <= 32:
            raise ValueError(f"dimension d must lie in [1, 32], got {self.d}")


@dataclass(frozen=True)
class QuantileSource:
    """A threshold together with where it came from."""

    method: str
    value: float
    law: str
    d: int
    alpha: float
    scale: str = "squared"
    mc: dict | None = field(default=None)

    def to_dict(self) -> dict:
        return asdict(self)


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha is a tail probability and must lie in (0, 0.5), got {alpha}")
    return alpha


# ---------------------------------------------------------------- series


def _cvm_series(d: int, x: float) -> float | None:
    nu = (d - 2) / 2.0
    pref = math.log(2.0) * (d + 1) / 2.0 - 0.5 * math.log(math.pi) - d / 4.0 * math.log(x)
    total = 0.0
    small = 0
    for j in range(SERIES_MAX_TERMS):
        z = (2 * j + d / 2.0) / math.sqrt(x)
        log_c = gammaln(j + d / 2.0) - gammaln(j + 1.0) - gammaln(d / 2.0)
        cyl = parabolic_cylinder_d(nu, z)
        term = math.exp(pref + log_c - (j + d / 4.0) ** 2 / x) * cyl if cyl != 0.0 else 0.0
        total += term
        small = small + 1 if abs(term) < SERIES_TOL else 0
        if small >= 2:
            return total
    return None


def _ksm_norm_series(d: int, a: float) -> float | None:
    nu = (d - 2) / 2.0
    log_pref = (1.0 + (2.0 - d) / 2.0) * math.log(2.0) - gammaln(d / 2.0) - d * math.log(a)
    count = int(a * math.sqrt(2.0 * 40.0) / math.pi) + 8
    while count <= SERIES_MAX_TERMS:
        zeros = bessel_zeros(nu, count)
        _, j1 = bessel_j_pair(nu, zeros)
        logs = 2 * nu * np.log(zeros) - 2 * np.log(np.abs(j1)) - zeros**2 / (2 * a * a) + log_pref
        terms = np.exp(logs)
        if terms[-1] < SERIES_TOL and terms[-2] < SERIES_TOL:
            return float(terms.sum())
        count *= 2
    return None


def _mc_cdf(law: LimitLaw, x: float, seed: int = MC_DEFAULT_SEED) -> float:
    draws = _mc_draws(law.kind, law.d, MC_DEFAULT_GRID, MC_DEFAULT_REPS, seed)
    return float(np.mean(draws <= x))


def cvm_limit_cdf(d: int, x: float) -> float:
    """``P(C(d) <= x)`` from the Kiefer parabolic-cylinder series."""
    LimitLaw("cvm", d)
    if x <= 0:
        return 0.0
    value = _cvm_series(d, x)
    if value is None:
        warnings.warn(f"CVM series for d={d}, x={x} did not converge; using Monte Carlo",
                      SeriesDivergenceWarning, stacklevel=2)
        return _mc_cdf(LimitLaw("cvm", d), x)
    return min(max(value, 0.0), 1.0)


def ksm_limit_cdf(d: int, x: float) -> float:
    """``P(D(d) <= x)`` for the squared-norm supremum, i.e. the Bessel-zero series at ``a = sqrt(x)``."""
    LimitLaw("ksm", d)
    if x <= 0:
        return 0.0
    value = _ksm_norm_series(d, math.sqrt(x))
    if value is None:
        warnings.warn(f"KSM series for d={d}, x={x} did not converge; using Monte Carlo",
                      SeriesDivergenceWarning, stacklevel=2)
        return _mc_cdf(LimitLaw("ksm", d), x)
    return min(max(value, 0.0), 1.0)


def limit_cdf(law: LimitLaw, x: float) -> float:
    return cvm_limit_cdf(law.d, x) if law.kind == "cvm" else ksm_limit_cdf(law.d, x)


def _invert_cdf(law: LimitLaw, p: float, tol: float = 1e-6) -> float:
    lo, hi = 0.0, float(law.d)
    while limit_cdf(law, hi) < p:
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if limit_cdf(law, mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- Monte Carlo


def simulate_limit(law: LimitLaw, grid: int = MC_DEFAULT_GRID, reps: int = MC_DEFAULT_REPS,
                   seed: int = MC_DEFAULT_SEED) -> np.ndarray:
    """``reps`` seeded draws of ``C(d)`` or ``D(d)`` (squared scale) on a ``grid``-point bridge."""
    if grid < 2**10:
        raise ValueError("grid must be at least 2^10")
    if reps < 1000:
        raise ValueError("reps must be at least 1000")
    return _mc_draws(law.kind, law.d, grid, reps, seed).copy()


@functools.lru_cache(maxsize=16)
def _mc_draws(kind: str, d: int, grid: int, reps: int, seed: int) -> np.ndarray:
    cvm, ksm = simulate_bridge_functionals(d, grid, reps, seed)
    out = (cvm if kind == "cvm" else ksm)[:, d - 1]
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------- quantiles


def table_value(law: LimitLaw, alpha: float) -> float:
    table = TABLE_CVM if law.kind == "cvm" else TABLE_KSM
    key = next((a for a in TABLE_ALPHAS if abs(a - alpha) < 1e-12), None)
    if key is None or law.d > len(table[key]):
        raise KeyError(f"no stored quantile for {law.kind} d={law.d} alpha={alpha}; "
                       "use method 'series' or 'mc'")
    return table[key][law.d - 1]


def quantile(law: LimitLaw, alpha: float, method: str = "table", *, scale: str | None = None,
             seed: int = MC_DEFAULT_SEED, reps: int = MC_DEFAULT_REPS,
             grid: int = MC_DEFAULT_GRID) -> float:
    """Upper ``alpha`` quantile of ``law``.

    ``scale`` only matters for the KSM law: ``"norm"`` (default, the scale of
    the stored table) gives quantiles of ``sup |B|``; ``"squared"`` gives
    quantiles of ``D(d)`` itself.
    """
    if method not in METHODS:
        raise ValueError(f"unknown quantile method {method!r}; expected one of {METHODS}")
    alpha = check_alpha(alpha)
    if scale is None:
        scale = KSM_TABLE_SCALE if law.kind == "ksm" else "squared"
    if scale not in ("norm", "squared"):
        raise ValueError(f"scale must be 'norm' or 'squared', got {scale!r}")
    if law.kind == "cvm" and scale != "squared":
        raise ValueError("the CVM law has no norm scale")

    if method == "table":
        value = table_value(law, alpha)
        if law.kind == "ksm" and scale == "squared":
            value = value**2
        return value
    if method == "series":
        value = _invert_cdf(law, 1.0 - alpha)
    else:
        value = float(np.quantile(_mc_draws(law.kind, law.d, grid, reps, seed), 1.0 - alpha))
    if law.kind == "ksm" and scale == "norm":
        value = math.sqrt(value)
    return value


def default_method(law: LimitLaw, alpha: float) -> str:
    in_table = law.d <= 6 and any(abs(alpha - a) < 1e-12 for a in TABLE_ALPHAS)
    return "table" if in_table else "mc"


def critical_value(law: LimitLaw, alpha: float, method: str | None = None, *,
                   seed: int = MC_DEFAULT_SEED, reps: int = MC_DEFAULT_REPS,
                   grid: int = MC_DEFAULT_GRID) -> QuantileSource:
    """Rejection threshold for the statistic as computed (squared scale for KSM)."""
    alpha = check_alpha(alpha)
    method = method or default_method(law, alpha)
    value = quantile(law, alpha, method, scale="squared", seed=seed, reps=reps, grid=grid)
    mc = {"seed": seed, "reps": reps, "grid": grid} if method == "mc" else None
    return QuantileSource(method=method, value=value, law=law.kind, d=law.d, alpha=alpha,
                          scale="squared", mc=mc)


def resolve_ksm_table_convention(reps: int = 200_000, grid: int = MC_DEFAULT_GRID,
                                 seed: int = MC_DEFAULT_SEED) -> dict:
    """Compare the stored D-table with MC quantiles of ``D(d)`` and of ``sqrt(D(d))``.

    Returns the scale with the smaller worst-case discrepancy and both discrepancies.
    """
    _, ksm = simulate_bridge_functionals(6, grid, reps, seed)
    err = {"norm": 0.0, "squared": 0.0}
    for alpha in TABLE_ALPHAS:
        for d in range(1, 7):
            q = float(np.quantile(ksm[:, d - 1], 1.0 - alpha))
            entry = TABLE_KSM[alpha][d - 1]
            err["norm"] = max(err["norm"], abs(math.sqrt(q) - entry))
            err["squared"] = max(err["squared"], abs(q - entry))
    return {"scale": min(err, key=err.get), "max_abs_error": err,
            "reps": reps, "grid": grid, "seed": seed}
