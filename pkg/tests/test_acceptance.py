"""Acceptance criteria 1-9.

Every test appends one PASS/FAIL line to the terminal summary and prints it.
Seeds are fixed here once (harness seed 0, MC seed 20240611, series seeds
0..N-1) and are never tuned against the outcome.
"""
import math
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from w2cusum.bridge import simulate_bridge_functionals
from w2cusum.cusum import TestConfig, cusum_path_multi, cusum_path_single, run_test
from w2cusum.errors import DegenerateInputWarning
from w2cusum.harness import HarnessConfig, run_experiment
from w2cusum.limits import KSM_TABLE_SCALE, TABLE_CVM, TABLE_KSM, cvm_limit_cdf
from w2cusum.procgen import BreakScenario, ar1, concat_scenario, generate, white_noise
from w2cusum.spectral import (bartlett_covariance, hac_from_autocov, sample_autocov,
                              select_bandwidth)
from w2cusum.wavelets import build_filters, coeff_count, transform

pytestmark = pytest.mark.acceptance

MC_SEED = 20240611
HARNESS_SEED = 0
REPS = 1000


def record(number: int, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def rate(kind, model, n, J2, stat, reps=REPS):
    cfg = HarnessConfig(kind=kind, models=(model,), n_values=(n,), J2_values=(J2,), J1=1, reps=reps,
                        seed=HARNESS_SEED, statistics=(stat,), workers=1)
    cell = run_experiment(cfg).cells[0]
    return cell["rate"], cell["failed"]


@pytest.fixture(scope="module")
def bridge_draws():
    # one 10^6-replication run serves both table checks
    return simulate_bridge_functionals(6, 2**12, 10**6, MC_SEED)


def test_criterion_1_cvm_quantiles(bridge_draws):
    cvm, _ = bridge_draws
    mc = np.quantile(cvm, 0.95, axis=0)
    err = np.abs(mc - np.array(TABLE_CVM[0.05]))
    detail = (f"max |MC - table| = {err.max():.4f} (tol 0.015); "
              + " ".join(f"d={d}:{v:.4f}" for d, v in enumerate(mc, 1)))
    assert record(1, bool(err.max() <= 0.015), detail)


def test_criterion_2_ksm_table_convention(bridge_draws):
    _, ksm = bridge_draws
    errors = {"norm": [], "squared": []}
    for alpha in (0.05, 0.01):
        q = np.quantile(ksm, 1 - alpha, axis=0)
        errors["squared"].extend(np.abs(q - TABLE_KSM[alpha]))
        errors["norm"].extend(np.abs(np.sqrt(q) - TABLE_KSM[alpha]))
    resolved = min(errors, key=lambda k: max(errors[k]))
    worst = max(errors[resolved])
    ok = resolved == KSM_TABLE_SCALE == "norm" and len(errors[resolved]) == 12 and worst <= 0.02
    detail = (f"table holds quantiles of sqrt(D(d)) (resolved scale '{resolved}'); "
              f"max error {worst:.4f} over 12 entries (tol 0.02); other scale max error "
              f"{max(errors['squared']):.3f}")
    assert record(2, ok, detail)


def test_criterion_3_level():
    wn, wn_failed = rate("level", "wn", 1024, 3, "cvm")
    ma, ma_failed = rate("level", "ma1:theta=0.9", 1024, 4, "ksm")
    ok = 0.02 <= wn <= 0.08 and 0.01 <= ma <= 0.07
    detail = (f"white noise n=1024 J=3 CVM rate {wn:.3f} in [0.02, 0.08]; "
              f"MA(1) 0.9 n=1024 J=4 KSM rate {ma:.3f} in [0.01, 0.07] "
              f"(failed reps {wn_failed}, {ma_failed})")
    assert record(3, ok, detail)


def test_criterion_4_ar_over_rejection():
    value, failed = rate("level", "ar1:phi=0.9", 512, 5, "ksm")
    assert record(4, 0.3 <= value <= 0.75, f"AR(1) 0.9 n=512 J=5 KSM rate {value:.3f} in [0.3, 0.75] "
                                           f"(failed reps {failed})")


def test_criterion_5_power():
    wn, _ = rate("power", "wn+wn:sigma2=0.7", 1024, 4, "ksm")
    ar, _ = rate("power", "ar1:phi=0.9+ar1:phi=0.5", 2048, 5, "ksm")
    ok = 0.70 <= wn <= 0.86 and 0.86 <= ar <= 0.99
    detail = (f"white(1)+white(0.7) n=1024 J=4 KSM {wn:.3f} in [0.70, 0.86]; "
              f"ar1(0.9)+ar1(0.5) n=2048 J=5 KSM {ar:.3f} in [0.86, 0.99]")
    assert record(5, ok, detail)


def test_criterion_6_changepoint():
    cfg = HarnessConfig(kind="changepoint", models=("ar1:phi=0.9+ar1:phi=0.5",), n_values=(4096,),
                        J2_values=(3,), reps=REPS, seed=HARNESS_SEED, statistics=("cvm",), workers=1)
    cell = run_experiment(cfg).cells[0]
    ok = 3500 <= cell["median"] <= 4500 and cell["ci_low"] <= 4096 <= cell["ci_high"]
    detail = (f"median {cell['median']:.0f} in [3500, 4500], mean {cell['mean']:.1f}, "
              f"95% interval [{cell['ci_low']:.0f}, {cell['ci_high']:.0f}] contains 4096")
    assert record(6, ok, detail)


def _properties() -> dict[str, bool]:
    rng = np.random.default_rng(MC_SEED)
    out = {}

    # polynomial annihilation: degree < M on normalized time
    worst = 0.0
    for order in range(2, 11):
        bank = build_filters(order, 3)
        t = np.arange(2048) / 2048
        for degree in range(order):
            x = np.polyval(rng.uniform(-5, 5, degree + 1), t)
            pyr = transform(x, 1, 3, bank)
            worst = max(worst, max(np.max(np.abs(pyr[j])) for j in (1, 2, 3)))
    out["polynomial annihilation <= 1e-8"] = worst <= 1e-8

    # pyramid vs direct filtering
    worst = 0.0
    for order in (2, 4, 8):
        bank = build_filters(order, 5)
        x = rng.standard_normal(4096)
        pyr = transform(x, 1, 5, bank)
        for j in range(1, 6):
            g = bank.taps(j)
            direct = np.array([x[(1 << j) * k: (1 << j) * k + len(g)] @ g
                               for k in range(coeff_count(4096, j, bank.support_T))])
            worst = max(worst, np.max(np.abs(pyr[j] - direct)))
    out["pyramid equals direct <= 1e-10"] = worst <= 1e-10

    # scale invariance of T paths and argmax
    ok = True
    bank = build_filters("db2", 4)
    for _ in range(50):
        x = rng.standard_normal(2048)
        c = 10 ** rng.uniform(-3, 3)
        for how in ("blocks", "scale_counts"):
            a = cusum_path_multi(transform(x, 1, 4, bank), 1, 4, 3, how)
            b = cusum_path_multi(transform(c * x, 1, 4, bank), 1, 4, 3, how)
            ok &= np.allclose(a.values, b.values, rtol=1e-8, atol=1e-12) and a.argmax_index == b.argmax_index
    out["scale invariance of T and argmax"] = bool(ok)

    # Bartlett PSD under fuzzing, 10^4 cases
    ok = True
    for _ in range(10_000):
        m = int(rng.integers(2, 200))
        d = int(rng.integers(1, 7))
        q = int(rng.integers(0, m))
        Y = rng.standard_normal((m, d))
        if rng.random() < 0.5:
            Y = np.exp(2 * Y)
        G = bartlett_covariance(Y, q)
        ok &= np.min(np.linalg.eigvalsh(G)) >= -1e-10 * np.trace(G)
        gam = sample_autocov(Y[:, 0], q)
        ok &= hac_from_autocov(gam, q) >= -1e-10 * gam[0]
    out["Bartlett PSD on 10^4 fuzz cases"] = bool(ok)

    # endpoint nullity and d = 1 multi/single equality
    ends = True
    d1 = True
    for _ in range(50):
        x = rng.standard_normal(1024)
        pyr = transform(x, 1, 4, bank)
        q = int(rng.integers(0, 6))
        for how in ("blocks", "scale_counts"):
            J1 = int(rng.integers(1, 4))
            path = cusum_path_multi(pyr, J1, 4, q, how)
            ends &= path.values[0] == 0.0 and path.values[-1] == 0.0
            j = int(rng.integers(1, 5))
            single = cusum_path_single(pyr, j, q)
            multi = cusum_path_multi(pyr, j, j, q, how)
            d1 &= np.allclose(multi.values, single.values**2, rtol=1e-9, atol=1e-12)
    out["endpoint nullity"] = bool(ends)
    out["d = 1 multi equals single squared"] = bool(d1)

    # seed determinism: generators, harness, MC oracle
    same = np.array_equal(generate(ar1(0.9), 4096, 1).values, generate(ar1(0.9), 4096, 1).values)
    same &= np.array_equal(concat_scenario(BreakScenario(ar1(0.9), ar1(0.5), 512, 512), 3).values,
                           concat_scenario(BreakScenario(ar1(0.9), ar1(0.5), 512, 512), 3).values)
    a = simulate_bridge_functionals(2, 1024, 2000, 7)
    b = simulate_bridge_functionals(2, 1024, 2000, 7)
    same &= np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    cfg = HarnessConfig(kind="power", models=("wn+wn:sigma2=0.5",), n_values=(512,), reps=20, workers=1)
    same &= run_experiment(cfg).cells == run_experiment(cfg).cells
    out["seed determinism"] = bool(same)
    return out


def test_criterion_7_properties():
    props = _properties()
    failed = [k for k, v in props.items() if not v]
    detail = f"{sum(props.values())}/{len(props)} properties hold" + (f"; failing: {failed}" if failed else "")
    assert record(7, not failed, detail)


def test_criterion_8_null_calibration():
    cfg = TestConfig(J1=1, J2=3, statistics=("cvm",))
    bank = build_filters("db2", 3)
    values = []
    for rep in range(2000):
        x = generate(white_noise(), 8192, np.random.default_rng(np.random.SeedSequence([MC_SEED, rep])))
        values.append(run_test(x, cfg, bank).statistics["cvm"])
    x = np.sort(values)
    F = np.array([cvm_limit_cdf(3, v) for v in x])
    n = len(x)
    ks = max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))
    assert record(8, bool(ks < 0.05), f"Kolmogorov distance {ks:.4f} < 0.05 (white noise n=8192, d=3, 2000 reps)")


def test_criterion_9_divergence():
    bank = build_filters("db2", 1)
    kappa = 0.5
    medians = {}
    ratio = None
    for n in (2**10, 2**12, 2**14):
        stats_, ratios = [], []
        for seed in range(200):
            ts = concat_scenario(BreakScenario(white_noise(1.0), white_noise(0.7), n // 2, n // 2), seed)
            pyr = transform(ts, 1, 1, bank)
            w2 = pyr[1] ** 2
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateInputWarning)
                q = select_bandwidth(w2)
            path = cusum_path_single(pyr, 1, q)
            T = float(path.values.max())
            stats_.append(T)
            # a zero lag would make the rate undefined; use max(q, 1)
            ratios.append(T / (math.sqrt(len(w2)) / math.sqrt(2 * max(q, 1)) * kappa * (1 - kappa)))
        medians[n] = float(np.median(stats_))
        ratio = float(np.median(ratios))
    increasing = medians[2**10] < medians[2**12] < medians[2**14]
    ok = increasing and 0.5 <= ratio <= 2.0
    detail = ("median T " + ", ".join(f"n=2^{int(math.log2(n))}: {v:.2f}" for n, v in medians.items())
              + f"; ratio at n=2^14 {ratio:.2f} in [0.5, 2]")
    assert record(9, ok, detail)
