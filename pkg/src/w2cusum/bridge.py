"""Seeded Monte-Carlo draws of Brownian-bridge functionals.

For every replication ``r`` the kernel simulates ``dmax`` independent
Brownian bridges on ``grid`` equispaced points and returns, for each
``l <= dmax``,

    C(l) = (1/grid) sum_k sum_{i<=l} B_i(t_k)^2      (Riemann sum of the integral)
    D(l) = max_k sum_{i<=l} B_i(t_k)^2

so one pass yields every dimension up to ``dmax`` and the draws for
different ``l`` share their first components.

Replication ``r`` is driven by its own xoshiro256+ stream seeded through
splitmix64 from ``(seed, r)``, so results do not depend on the number of
threads or on how replications are chunked.  Normals come from the
Marsaglia-Tsang ziggurat (128 layers).
"""
from __future__ import annotations

import math
import os

import numba
import numpy as np

if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ and "NUMBA_THREADING_LAYER" not in os.environ:
    # skip the TBB probe, which warns on older system TBB builds
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_U = numba.uint64
_GOLDEN = 0x9E3779B97F4A7C15
_ZIG_R = 3.442619855899
_ZIG_V = 9.91256303526217e-3


def _ziggurat_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m1 = 2147483648.0
    dn = tn = _ZIG_R
    q = _ZIG_V / math.exp(-0.5 * dn * dn)
    kn = np.zeros(128, np.int64)
    wn = np.zeros(128)
    fn = np.zeros(128)
    kn[0] = int(dn / q * m1)
    wn[0] = q / m1
    wn[127] = dn / m1
    fn[0] = 1.0
    fn[127] = math.exp(-0.5 * dn * dn)
    for i in range(126, 0, -1):
        dn = math.sqrt(-2.0 * math.log(_ZIG_V / dn + math.exp(-0.5 * dn * dn)))
        kn[i + 1] = int(dn / tn * m1)
        tn = dn
        fn[i] = math.exp(-0.5 * dn * dn)
        wn[i] = dn / m1
    return kn, wn, fn


KN, WN, FN = _ziggurat_tables()


@numba.njit(inline="always")
def _splitmix(z):
    z = z + _U(_GOLDEN)
    x = z
    x = (x ^ (x >> _U(30))) * _U(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> _U(27))) * _U(0x94D049BB133111EB)
    return z, x ^ (x >> _U(31))


@numba.njit(inline="always")
def _xoshiro(s0, s1, s2, s3):
    res = s0 + s3
    t = s1 << _U(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = (s3 << _U(45)) | (s3 >> _U(19))
    return res, s0, s1, s2, s3


@numba.njit(inline="always")
def _unit(u):
    # 53-bit uniform on (0, 1]
    return ((u >> _U(11)) + _U(1)) * (1.0 / 9007199254740992.0)


@numba.njit(inline="always")
def _normal(s0, s1, s2, s3, kn, wn, fn):
    while True:
        u, s0, s1, s2, s3 = _xoshiro(s0, s1, s2, s3)
        hz = np.int64(np.int32(np.uint32(u >> _U(32))))
        iz = hz & 127
        if abs(hz) < kn[iz]:
            return hz * wn[iz], s0, s1, s2, s3
        if iz == 0:
            # tail beyond the base layer
            while True:
                u, s0, s1, s2, s3 = _xoshiro(s0, s1, s2, s3)
                x = -math.log(_unit(u)) / _ZIG_R
                u, s0, s1, s2, s3 = _xoshiro(s0, s1, s2, s3)
                y = -math.log(_unit(u))
                if y + y >= x * x:
                    break
            return (_ZIG_R + x if hz > 0 else -_ZIG_R - x), s0, s1, s2, s3
        x = hz * wn[iz]
        u, s0, s1, s2, s3 = _xoshiro(s0, s1, s2, s3)
        if fn[iz] + _unit(u) * (fn[iz - 1] - fn[iz]) < math.exp(-0.5 * x * x):
            return x, s0, s1, s2, s3


@numba.njit(parallel=True, cache=True)
def _bridge_kernel(seed, dmax, grid, refine, reps, kn, wn, fn):
    cvm = np.empty((reps, dmax))
    ksm = np.empty((reps, dmax))
    scale = 1.0 / math.sqrt(grid * refine)
    for r in numba.prange(reps):
        z = _U(seed) * _U(_GOLDEN) ^ _U(r)
        z, s0 = _splitmix(z)
        z, s1 = _splitmix(z)
        z, s2 = _splitmix(z)
        z, s3 = _splitmix(z)
        path = np.empty(grid)
        acc = np.zeros(grid)
        for l in range(dmax):
            w = 0.0
            for k in range(grid):
                for _ in range(refine):
                    g, s0, s1, s2, s3 = _normal(s0, s1, s2, s3, kn, wn, fn)
                    w += g
                path[k] = w
            end = path[grid - 1]
            total = 0.0
            top = 0.0
            for k in range(grid):
                b = (path[k] - (k + 1) / grid * end) * scale
                acc[k] += b * b
                total += acc[k]
                if acc[k] > top:
                    top = acc[k]
            cvm[r, l] = total / grid
            ksm[r, l] = top
    return cvm, ksm


def simulate_bridge_functionals(dmax: int, grid: int, reps: int, seed: int,
                                refine: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(C, D)`` of shape ``(reps, dmax)``; column ``l-1`` holds draws for dimension ``l``.

    ``refine`` draws that many normals per grid step and sums them, so a run
    with ``(grid, refine) = (2^11, 4)`` sees exactly the coarse sampling of the
    run with ``(2^13, 1)`` under the same seed (common random numbers).
    """
    if dmax < 1 or grid < 2 or reps < 1 or refine < 1:
        raise ValueError("need dmax >= 1, grid >= 2, reps >= 1, refine >= 1")
    if not 0 <= seed < 2**63:
        raise ValueError("seed must lie in [0, 2^63)")
    return _bridge_kernel(np.uint64(seed), dmax, grid, refine, reps, KN, WN, FN)


def normal_draws(count: int, seed: int) -> np.ndarray:
    """Raw ziggurat normals of stream 0 for ``seed``; exposed for distribution checks."""
    return _normal_stream(np.uint64(seed), count, KN, WN, FN)


@numba.njit(cache=True)
def _normal_stream(seed, count, kn, wn, fn):
    z = _U(seed) * _U(_GOLDEN) ^ _U(0)
    z, s0 = _splitmix(z)
    z, s1 = _splitmix(z)
    z, s2 = _splitmix(z)
    z, s3 = _splitmix(z)
    out = np.empty(count)
    for i in range(count):
        out[i], s0, s1, s2, s3 = _normal(s0, s1, s2, s3, kn, wn, fn)
    return out
