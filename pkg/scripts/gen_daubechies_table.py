"""Regenerate ``src/w2cusum/_daubechies.py`` (extremal-phase Daubechies low-pass filters).

Spectral factorization of the Daubechies polynomial in 60-digit arithmetic; the
roots inside the unit circle are kept (minimum phase).
"""
from __future__ import annotations

import sys
from pathlib import Path

import mpmath as mp

mp.mp.dps = 60


def daubechies_lowpass(order: int) -> list[mp.mpf]:
    # P(y) = sum_k C(M-1+k, k) y^k with y = (2 - z - 1/z)/4
    coeffs = [mp.binomial(order - 1 + k, k) for k in range(order)]
    roots_y = mp.polyroots(coeffs[::-1], maxsteps=500, extraprec=400) if order > 1 else []
    poly = [mp.mpc(1)]
    for y in roots_y:
        # z + 1/z = 2 - 4y; keep the root with |z| < 1
        b = 2 - 4 * y
        disc = mp.sqrt(b * b - 4)
        z1, z2 = (b + disc) / 2, (b - disc) / 2
        z = z1 if abs(z1) < 1 else z2
        # multiply by (1 - z q) / (1 - z), q = z^{-1} delay
        new = [mp.mpc(0)] * (len(poly) + 1)
        for i, c in enumerate(poly):
            new[i] += c / (1 - z)
            new[i + 1] -= c * z / (1 - z)
        poly = new
    for _ in range(order):
        new = [mp.mpc(0)] * (len(poly) + 1)
        for i, c in enumerate(poly):
            new[i] += c / 2
            new[i + 1] += c / 2
        poly = new
    return [mp.sqrt(2) * mp.re(c) for c in poly]


def main(out: Path) -> None:
    lines = [
        '"""Orthonormal extremal-phase Daubechies low-pass filters, orders 2..10.',
        "",
        "Generated by scripts/gen_daubechies_table.py; do not edit by hand.",
        '"""',
        "",
        "DAUBECHIES_LOWPASS: dict[int, tuple[float, ...]] = {",
    ]
    for order in range(2, 11):
        h = daubechies_lowpass(order)
        assert abs(sum(h) - mp.sqrt(2)) < mp.mpf(10) ** -40
        assert abs(sum(c * c for c in h) - 1) < mp.mpf(10) ** -40
        lines.append(f"    {order}: (")
        lines.extend(f"        {mp.nstr(c, 20, min_fixed=-1, max_fixed=1)}," for c in h)
        lines.append("    ),")
    lines.append("}")
    out.write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parents[1] / "src/w2cusum/_daubechies.py")
