"""Daubechies filter banks and the interior-only pyramidal DWT.

Conventions
-----------
A scale-``j`` filter is stored as its taps ``g_j[m]``, ``m = 0..L_j-1``, with
``L_j = (2**j - 1)(L - 1) + 1`` and ``L = 2M`` the length of the order-``M``
Daubechies pair.  In the lag notation ``W_{j,k} = sum_l x_l h_{j, 2^j k - l}``
the same filter reads ``h_{j,l} = g_j[-l-1]`` for ``l = -L_j..-1``.

Coefficients are 1-indexed: ``W_{j,k}`` (``k = 1..n_j``) is computed from the
samples ``x_{2^j (k-1) + 1} .. x_{2^j (k-1) + L_j}``, so only coefficients whose
whole support lies inside the sample are produced.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from ._daubechies import DAUBECHIES_LOWPASS
from .errors import SeriesTooShortError

MAX_SCALE_LIMIT = 30


def parse_family(family: str | int) -> int:
    """Return the vanishing-moment count ``M`` for ``"db2"``, ``"DB4"``, ``3`` ..."""
    if isinstance(family, (int, np.integer)):
        order = int(family)
    else:
        m = re.fullmatch(r"\s*db(\d+)\s*", str(family), flags=re.IGNORECASE)
        if m is None:
            raise ValueError(f"unsupported wavelet family {family!r}; expected 'db2'..'db10'")
        order = int(m.group(1))
    if order not in DAUBECHIES_LOWPASS:
        raise ValueError(f"unsupported Daubechies order {order}; supported orders are 2..10")
    return order


def coeff_count(n: int, j: int, T: int) -> int:
    """Number of interior coefficients at scale ``j``: ``floor((n-T+1)/2^j) - T + 1``, clamped at 0."""
    if n < 1 or j < 0 or T < 1:
        raise ValueError("coeff_count requires n >= 1, j >= 0, T >= 1")
    return max((n - T + 1) // (1 << j) - T + 1, 0)


def min_length(J: int, T: int, min_coeffs: int = 2) -> int:
    """Smallest ``n`` giving at least ``min_coeffs`` coefficients at scale ``J``."""
    return (min_coeffs + T - 1) * (1 << J) + T - 1


@dataclass(frozen=True)
class FilterBank:
    """Scale-wise wavelet filters for one Daubechies order."""

    family: str
    vanishing_moments: int
    max_scale: int
    lowpass: np.ndarray
    highpass: np.ndarray
    filters: dict[int, np.ndarray] = field(repr=False)

    @property
    def support_T(self) -> int:
        return len(self.lowpass)

    def taps(self, j: int) -> np.ndarray:
        """Filter taps ``g_j[0..L_j-1]`` applied as ``W = sum_m g_j[m] x[2^j (k-1) + m + 1]``."""
        if j not in self.filters:
            raise KeyError(f"scale {j} not in filter bank (max_scale={self.max_scale})")
        return self.filters[j]

    def lagged(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """The filter in lag form: arrays ``(l, h_{j,l})`` with ``l = -1, -2, .., -L_j``."""
        g = self.taps(j)
        return -(np.arange(len(g)) + 1), g.copy()

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "vanishing_moments": self.vanishing_moments,
            "max_scale": self.max_scale,
            "support_T": self.support_T,
            "lowpass": self.lowpass.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_filters(family: str | int, max_scale: int) -> FilterBank:
    """Cascade the two-scale refinement filters up to ``max_scale``.

    ``g_j = upsample(g, 2^{j-1}) * a_{j-1}`` where ``a_{j-1}`` is the equivalent
    low-pass filter of the first ``j-1`` levels, so filtering with ``g_j`` and
    decimating by ``2^j`` reproduces the pyramid exactly.
    """
    order = parse_family(family)
    if not 1 <= max_scale <= MAX_SCALE_LIMIT:
        raise ValueError(f"max_scale must lie in [1, {MAX_SCALE_LIMIT}], got {max_scale}")
    h = np.asarray(DAUBECHIES_LOWPASS[order], dtype=float)
    L = len(h)
    g = h[::-1] * (-1.0) ** np.arange(L)

    filters: dict[int, np.ndarray] = {}
    approx = np.ones(1)
    for j in range(1, max_scale + 1):
        step = 1 << (j - 1)
        up_g = np.zeros((L - 1) * step + 1)
        up_g[::step] = g
        up_h = np.zeros((L - 1) * step + 1)
        up_h[::step] = h
        filters[j] = np.convolve(up_g, approx)
        approx = np.convolve(up_h, approx)
    return FilterBank(
        family=f"db{order}",
        vanishing_moments=order,
        max_scale=max_scale,
        lowpass=h,
        highpass=g,
        filters=filters,
    )


@dataclass(frozen=True)
class WaveletPyramid:
    """Interior wavelet coefficients ``W_{j,1..n_j}`` for scales ``J1..J2``."""

    coeffs: dict[int, np.ndarray]
    n: int
    J1: int
    J2: int
    bank: FilterBank = field(repr=False)

    @property
    def counts(self) -> dict[int, int]:
        return {j: len(w) for j, w in self.coeffs.items()}

    def __getitem__(self, j: int) -> np.ndarray:
        try:
            return self.coeffs[j]
        except KeyError:
            raise KeyError(f"scale {j} absent from pyramid (scales {self.J1}..{self.J2})") from None


def _analysis_step(a: np.ndarray, h: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # valid-mode correlation followed by keeping even offsets
    L = len(h)
    m = (len(a) - L) // 2 + 1
    if m <= 0:
        return np.empty(0), np.empty(0)
    windows = np.lib.stride_tricks.sliding_window_view(a, L)[: 2 * m : 2]
    return windows @ h, windows @ g


def transform(series, J1: int, J2: int, bank: FilterBank) -> WaveletPyramid:
    """Interior DWT coefficients at scales ``J1..J2`` by the pyramidal algorithm."""
    x = np.asarray(getattr(series, "values", series), dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite samples")
    if not 1 <= J1 <= J2 <= bank.max_scale:
        raise ValueError(f"need 1 <= J1 <= J2 <= {bank.max_scale}, got J1={J1}, J2={J2}")
    n = len(x)
    T = bank.support_T
    if coeff_count(max(n, 1), J2, T) < 2:
        raise SeriesTooShortError(
            f"series of length {n} too short for J2={J2} with {bank.family}; "
            f"need n >= {min_length(J2, T)}"
        )

    coeffs: dict[int, np.ndarray] = {}
    a = x
    for j in range(1, J2 + 1):
        a, d = _analysis_step(a, bank.lowpass, bank.highpass)
        if j >= J1:
            coeffs[j] = d[: coeff_count(n, j, T)].copy()
    return WaveletPyramid(coeffs=coeffs, n=n, J1=J1, J2=J2, bank=bank)


def transfer_function(bank: FilterBank, j: int, grid) -> np.ndarray:
    """``H_j(lam) = sum_l h_{j,l} exp(-i lam l)`` on ``grid``."""
    lam = np.atleast_1d(np.asarray(grid, dtype=float))
    if lam.size == 0:
        raise ValueError("grid must be non-empty")
    lags, h = bank.lagged(j)
    return np.exp(-1j * np.outer(lam, lags)) @ h


def moment_free_taps(bank: FilterBank, j: int) -> np.ndarray:
    """Taps ``r_j`` with ``g_j = r_j * (1, -1)^{*M}``, i.e. the filter with its ``M`` zeros at 0 removed."""
    r = bank.taps(j)
    for _ in range(bank.vanishing_moments):
        c = np.cumsum(r)
        r = c[:-1]
    return r


def squared_gain(bank: FilterBank, j: int, grid) -> np.ndarray:
    """``|H_j(lam)|^2`` as ``|2 sin(lam/2)|^{2M} |R_j(lam)|^2``, accurate near ``lam = 0``."""
    lam = np.atleast_1d(np.asarray(grid, dtype=float))
    r = moment_free_taps(bank, j)
    R = np.exp(-1j * np.outer(lam, np.arange(len(r)))) @ r
    return (2.0 * np.sin(lam / 2.0)) ** (2 * bank.vanishing_moments) * np.abs(R) ** 2
