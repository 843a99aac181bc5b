"""Parabolic cylinder functions, Bessel functions and Bessel zeros.

Only what the Kiefer distribution series need: real order, positive argument.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import rgamma, roots_genlaguerre

PCF_SWITCH = 3.0


def _kummer_m(a: float, b: float, x: float, tol: float = 1e-17, max_terms: int = 2000) -> float:
    term = 1.0
    total = 1.0
    for k in range(max_terms):
        term *= (a + k) / (b + k) * x / (k + 1)
        total += term
        if abs(term) <= tol * abs(total):
            return total
    raise ArithmeticError("Kummer series did not converge")


def _pcf_series(nu: float, z: float) -> float:
    x = 0.5 * z * z
    even = math.sqrt(math.pi) * rgamma((1.0 - nu) / 2.0) * _kummer_m(-nu / 2.0, 0.5, x)
    odd = math.sqrt(2.0 * math.pi) * z * rgamma(-nu / 2.0) * _kummer_m((1.0 - nu) / 2.0, 1.5, x)
    return 2.0 ** (nu / 2.0) * math.exp(-0.25 * z * z) * (even - odd)


def _pcf_asymptotic(nu: float, z: float) -> tuple[float, float]:
    """Large-``z`` expansion; returns (value, size of the first omitted term relative to the sum)."""
    total = 1.0
    term = 1.0
    inv = 1.0 / (2.0 * z * z)
    s = 0
    while True:
        nxt = -term * (nu - 2 * s) * (nu - 2 * s - 1) * inv / (s + 1)
        if nxt == 0.0:
            err = 0.0
            break
        if abs(nxt) >= abs(term) or s > 200:
            err = abs(term)
            break
        total += nxt
        term = nxt
        s += 1
        if abs(term) < 1e-17 * abs(total):
            err = abs(term)
            break
    return z**nu * math.exp(-0.25 * z * z) * total, err / max(abs(total), 1e-300)


def _pcf_negative_order(nu: float, z: float, nodes: int = 80) -> float:
    """``D_nu(z)`` for ``nu < 0`` from ``e^{-z^2/4}/Gamma(-nu) int_0^inf t^{-nu-1} e^{-t^2/2 - z t} dt``.

    With ``t = u/z`` the weight ``u^{-nu-1} e^{-u}`` is handled by generalized
    Gauss-Laguerre nodes and the remaining factor ``e^{-u^2/(2 z^2)}`` is smooth.
    """
    u, w = roots_genlaguerre(nodes, -nu - 1.0)
    integral = float(np.sum(w * np.exp(-u * u / (2.0 * z * z))))
    return math.exp(-0.25 * z * z) * float(rgamma(-nu)) * z**nu * integral


def parabolic_cylinder_d(nu: float, z: float) -> float:
    """Whittaker's parabolic cylinder function ``D_nu(z)`` for real ``nu`` and ``z >= 0``.

    Power series for small ``z``.  For larger ``z`` the asymptotic expansion
    is used when it reaches full accuracy; otherwise two negative orders are
    evaluated by quadrature of the integral representation and carried up
    with ``D_{v+1} = z D_v - v D_{v-1}``, which is stable for ``z > 0``.
    """
    if z < 0:
        raise ValueError("parabolic_cylinder_d is implemented for z >= 0")
    if z < PCF_SWITCH:
        return _pcf_series(nu, z)
    value, rel_err = _pcf_asymptotic(nu, z)
    if rel_err < 1e-14:
        return value
    if nu < 0:
        return _pcf_negative_order(nu, z)
    base = nu - math.floor(nu)
    lo = _pcf_negative_order(base - 2.0, z)
    hi = _pcf_negative_order(base - 1.0, z)
    v = base - 1.0
    while v < nu - 0.5:
        lo, hi = hi, z * hi - v * lo
        v += 1.0
    return hi


def bessel_j_pair(nu: float, x) -> tuple[np.ndarray, np.ndarray]:
    """``(J_nu(x), J_{nu+1}(x))`` for ``nu >= -1/2`` and ``x > 0`` by Miller's backward recurrence.

    Normalized with ``(x/2)^nu = sum_k (nu+2k) Gamma(nu+k)/k! J_{nu+2k}(x)``.
    """
    if nu < -0.5:
        raise ValueError("bessel_j_pair requires nu >= -1/2")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise ValueError("bessel_j_pair requires x > 0")
    xmax = float(x.max())
    K = int(xmax + 30 + 4 * math.sqrt(xmax) + max(nu, 0.0))
    K += K % 2
    f_next = np.zeros_like(x)
    f_cur = np.full_like(x, 1e-200)
    norm = np.zeros_like(x)
    f1 = np.zeros_like(x)
    # weights (nu+2m) Gamma(nu+m)/m!, handled in logs; m = 0 weight is Gamma(nu+1)
    def weight(k: int) -> float:
        m = k // 2
        if m == 0:
            return math.gamma(nu + 1.0)
        return (nu + 2 * m) * math.exp(math.lgamma(nu + m) - math.lgamma(m + 1.0))

    for k in range(K, 0, -1):
        if k % 2 == 0:
            norm += weight(k) * f_cur
        f_prev = 2.0 * (nu + k) / x * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        big = np.abs(f_cur) > 1e200
        if np.any(big):
            s = np.where(big, 1e-200, 1.0)
            f_cur *= s
            f_next *= s
            norm *= s
        if k == 1:
            f1 = f_next.copy()
    norm += weight(0) * f_cur
    factor = (x / 2.0) ** nu / norm
    return f_cur * factor, f1 * factor


def bessel_j(nu: float, x) -> np.ndarray:
    return bessel_j_pair(nu, x)[0]


def _mcmahon(nu: float, n: int) -> float:
    mu = 4.0 * nu * nu
    beta = (n + nu / 2.0 - 0.25) * math.pi
    e = 8.0 * beta
    return beta - (mu - 1) / e - 4 * (mu - 1) * (7 * mu - 31) / (3 * e**3)


def bessel_zeros(nu: float, count: int) -> np.ndarray:
    """First ``count`` positive zeros of ``J_nu``.

    Zeros are isolated by a sign-change scan (spacing of consecutive zeros
    exceeds 2.4 for ``nu >= -1/2``), started from McMahon's estimates and
    polished by safeguarded Newton steps.
    """
    if nu < -0.5:
        raise ValueError("bessel_zeros requires nu >= -1/2")
    if count < 1:
        raise ValueError("count must be >= 1")
    upper = max(_mcmahon(nu, count), nu + 2.0) + 4.0
    while True:
        grid = np.arange(0.25, upper, 0.2)
        vals = bessel_j(nu, grid)
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        if len(idx) >= count:
            break
        upper += 4.0 + 0.5 * upper
    zeros = np.empty(count)
    for i, k in enumerate(idx[:count]):
        a, b = grid[k], grid[k + 1]
        fa = vals[k]
        guess = _mcmahon(nu, i + 1)
        x = guess if a < guess < b else 0.5 * (a + b)
        for _ in range(100):
            jv, jv1 = bessel_j_pair(nu, x)
            jv, jv1 = float(jv[0]), float(jv1[0])
            if np.sign(jv) == np.sign(fa):
                a, fa = x, jv
            else:
                b = x
            deriv = nu / x * jv - jv1
            step = jv / deriv if deriv != 0 else 0.0
            nx = x - step
            if not a < nx < b:
                nx = 0.5 * (a + b)
            if abs(nx - x) < 1e-15 * x or b - a < 1e-14 * x:
                x = nx
                break
            x = nx
        zeros[i] = x
    return zeros
