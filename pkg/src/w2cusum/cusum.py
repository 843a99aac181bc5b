"""W2-CUSUM paths, the CVM/KSM functionals and the full test pipeline."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from . import __version__
from .errors import DegenerateInputWarning, IllConditionedCovarianceError
from .limits import KSM_TABLE_SCALE, LimitLaw, check_alpha, critical_value
from .procgen import TimeSeries
from .spectral import (bartlett_covariance, between_scale_series, bartlett_variance,
                       select_bandwidth)
from .wavelets import FilterBank, WaveletPyramid, build_filters, parse_family, transform

REPORT_SCHEMA = "w2cusum-report/1"
STATISTICS = ("cvm", "ksm")
PARTIAL_SUMS = ("blocks", "scale_counts")
RIDGE = 1e-12
MAX_CONDITION = 1e12
DEGENERATE_RTOL = 1e-11


@dataclass(frozen=True)
class CusumPath:
    """``values[k]`` is the statistic at ``t_k = k/m``, ``k = 0..m``."""

    J1: int
    J2: int
    values: np.ndarray
    argmax_index: int
    q: int
    scale_matrix: np.ndarray
    kind: str = "multi"

    @property
    def m(self) -> int:
        return len(self.values) - 1

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.m + 1) / self.m

    @property
    def d(self) -> int:
        return self.J2 - self.J1 + 1

    def to_dict(self, include_values: bool = False) -> dict:
        out = {"kind": self.kind, "J1": self.J1, "J2": self.J2, "m": self.m, "q": self.q,
               "argmax_index": self.argmax_index,
               "scale_matrix": np.atleast_2d(self.scale_matrix).tolist()}
        if include_values:
            out["values"] = self.values.tolist()
        return out


def _argmax(values: np.ndarray) -> int:
    # np.argmax returns the first maximum, i.e. the smallest index on ties
    return int(np.argmax(values))


def cusum_path_single(pyr: WaveletPyramid, j: int, q: int) -> CusumPath:
    """``|sum_{i<=k} W^2_i - (k/n_j) sum_i W^2_i| / (sqrt(n_j) s_j)`` for ``k = 0..n_j``."""
    w2 = pyr[j] ** 2
    n_j = len(w2)
    if n_j < 4:
        raise ValueError(f"single-scale CUSUM needs n_j >= 4, got {n_j}")
    s2 = bartlett_variance(pyr, j, q)
    c = np.r_[0.0, np.cumsum(w2)]
    k = np.arange(n_j + 1)
    dev = np.abs(c - k / n_j * c[-1])
    if s2 > 0:
        values = dev / (math.sqrt(n_j) * math.sqrt(s2))
    else:
        warnings.warn(f"zero HAC variance at scale {j}", DegenerateInputWarning, stacklevel=2)
        values = np.zeros(n_j + 1)
    return CusumPath(J1=j, J2=j, values=values, argmax_index=_argmax(values), q=q,
                     scale_matrix=np.array([[s2]]), kind="single")


def _inverse_factor(G: np.ndarray) -> np.ndarray:
    """Cholesky factor of ``G``, adding a relative ridge if the plain factorization fails."""
    d = G.shape[0]
    tr = float(np.trace(G))
    if not tr > 0:
        raise IllConditionedCovarianceError(
            "ill-conditioned covariance; reduce J2-J1 or increase n (zero covariance estimate)")
    try:
        chol = linalg.cholesky(G, lower=True)
    except linalg.LinAlgError:
        G = G + RIDGE * tr / d * np.eye(d)
        try:
            chol = linalg.cholesky(G, lower=True)
        except linalg.LinAlgError:
            raise IllConditionedCovarianceError(
                "ill-conditioned covariance; reduce J2-J1 or increase n") from None
    if np.linalg.cond(G) > MAX_CONDITION:
        raise IllConditionedCovarianceError("ill-conditioned covariance; reduce J2-J1 or increase n")
    return chol


def _partial_sums(pyr: WaveletPyramid, J1: int, J2: int, Y: np.ndarray, how: str) -> np.ndarray:
    m = Y.shape[0]
    if how == "blocks":
        return np.vstack([np.zeros(Y.shape[1]), np.cumsum(Y, axis=0)])
    if how != "scale_counts":
        raise ValueError(f"partial_sums must be 'blocks' or 'scale_counts', got {how!r}")
    # scale j contributes its first floor(n_j t_k) squared coefficients
    cols = []
    for j in range(J2, J1 - 1, -1):
        w2 = pyr[j] ** 2
        c = np.r_[0.0, np.cumsum(w2)]
        idx = (np.arange(m + 1) * len(w2)) // m
        cols.append(c[idx])
    return np.column_stack(cols)


def cusum_path_multi(pyr: WaveletPyramid, J1: int, J2: int, q: int,
                     partial_sums: str = "scale_counts") -> CusumPath:
    """``T(t_k) = (S(t_k) - t_k S(1))^T Gamma_hat^{-1} (S(t_k) - t_k S(1))``, ``t_k = k/m``.

    ``Gamma_hat`` is the Bartlett estimate from the ``m`` between-scale vectors.
    With ``partial_sums="blocks"`` ``S(t_k)`` sums the first ``k`` vectors;
    with ``"scale_counts"`` the scale-``j`` entry sums the first
    ``floor(n_j t_k)`` squared coefficients of that scale.  Both are divided
    by ``sqrt(m)``.
    """
    ms = between_scale_series(pyr, J1, J2)
    Y = ms.Y
    m = Y.shape[0]
    G = bartlett_covariance(Y, q)
    chol = _inverse_factor(G)
    S = _partial_sums(pyr, J1, J2, Y, partial_sums) / math.sqrt(m)
    t = np.arange(m + 1) / m
    R = S - t[:, None] * S[-1]
    Z = linalg.solve_triangular(chol, R.T, lower=True)
    values = np.sum(Z * Z, axis=0)
    values[0] = values[-1] = 0.0
    return CusumPath(J1=J1, J2=J2, values=values, argmax_index=_argmax(values), q=q,
                     scale_matrix=G)


def cvm_statistic(path: CusumPath) -> float:
    """Riemann sum ``(1/m) sum_k T(t_k)``."""
    return float(np.sum(path.values) / path.m)


def ksm_statistic(path: CusumPath) -> float:
    return float(path.values[path.argmax_index])


def estimate_changepoint(path: CusumPath, bank: FilterBank | int, reference_scale: int | None = None,
                         n: int | None = None) -> int:
    """Sample index ``2^j (k_hat + T - 1) + T - 1`` of the break, clamped to ``[1, n]``.

    ``bank`` may be a filter bank or the support length ``T`` itself; the
    default reference scale is ``J2``.
    """
    T = bank.support_T if isinstance(bank, FilterBank) else int(bank)
    j = path.J2 if reference_scale is None else int(reference_scale)
    if not np.any(path.values):
        raise ValueError("cannot locate a change point on a degenerate (all-zero) path")
    k = (1 << j) * (path.argmax_index + T - 1) + T - 1
    lo = 1
    hi = k if n is None else n
    return int(min(max(k, lo), hi))


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # not a pytest class

    wavelet: str = "db2"
    J1: int = 1
    J2: int = 3
    alpha: float = 0.05
    statistics: tuple[str, ...] = STATISTICS
    bandwidth: int | str = "auto"
    threshold_method: str | None = None
    mc_seed: int | None = None
    partial_sums: str = "scale_counts"
    include_path: bool = False

    def __post_init__(self):
        if not 1 <= self.J1 <= self.J2:
            raise ValueError(f"need 1 <= J1 <= J2, got J1={self.J1}, J2={self.J2}")
        parse_family(self.wavelet)
        check_alpha(self.alpha)
        stats = tuple(s.lower() for s in self.statistics)
        if not stats or any(s not in STATISTICS for s in stats):
            raise ValueError(f"statistics must be a non-empty subset of {STATISTICS}")
        object.__setattr__(self, "statistics", stats)
        if self.partial_sums not in PARTIAL_SUMS:
            raise ValueError(f"partial_sums must be one of {PARTIAL_SUMS}")

    @property
    def d(self) -> int:
        return self.J2 - self.J1 + 1


@dataclass
class TestReport:
    __test__ = False

    meta: dict
    wavelet: str
    J1: int
    J2: int
    q: int | None
    q_per_scale: dict[int, int]
    statistics: dict[str, float]
    thresholds: dict[str, dict]
    decisions: dict[str, str | None]
    changepoint: dict | None
    degenerate: bool
    details: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.J2 - self.J1 + 1

    @property
    def rejected(self) -> bool:
        return any(v == "reject" for v in self.decisions.values())

    def to_dict(self) -> dict:
        out = {"schema": REPORT_SCHEMA, "version": __version__, "d": self.d}
        out.update(asdict(self))
        out["q_per_scale"] = {str(k): v for k, v in self.q_per_scale.items()}
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "TestReport":
        if data.get("schema") != REPORT_SCHEMA:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        kw = {k: data[k] for k in cls.__dataclass_fields__}
        kw["q_per_scale"] = {int(k): v for k, v in kw["q_per_scale"].items()}
        return cls(**kw)


def _is_degenerate(x: np.ndarray, pyr: WaveletPyramid) -> bool:
    top = max(float(np.max(np.abs(w))) for w in pyr.coeffs.values())
    return top <= DEGENERATE_RTOL * max(float(np.max(np.abs(x))), 1e-300)


def _threshold_kwargs(cfg: TestConfig) -> dict:
    return {} if cfg.mc_seed is None else {"seed": cfg.mc_seed}


def run_test(series, cfg: TestConfig = TestConfig(), bank: FilterBank | None = None) -> TestReport:
    """Transform, estimate, compute CVM/KSM and compare with the limit-law thresholds."""
    ts = series if isinstance(series, TimeSeries) else TimeSeries(np.asarray(series, dtype=float))
    x = np.asarray(ts.values, dtype=float)
    if bank is None or bank.max_scale < cfg.J2 or bank.vanishing_moments != parse_family(cfg.wavelet):
        bank = build_filters(cfg.wavelet, cfg.J2)
    pyr = transform(x, cfg.J1, cfg.J2, bank)
    meta = {"n": len(x), **{k: v for k, v in ts.meta.items() if _jsonable(v)}}

    thresholds = {}
    for s in cfg.statistics:
        qs = critical_value(LimitLaw(s, cfg.d), cfg.alpha, cfg.threshold_method,
                            **_threshold_kwargs(cfg))
        thresholds[s] = qs.to_dict()
    details = {"ksm_table_scale": KSM_TABLE_SCALE, "ksm_threshold_scale": "squared",
               "filter_bank": bank.to_dict(), "counts": {str(k): v for k, v in pyr.counts.items()}}

    q_per_scale = {}
    for j in range(cfg.J1, cfg.J2 + 1):
        q_per_scale[j] = select_bandwidth(pyr[j] ** 2, cfg.bandwidth)

    def degenerate_report(reason: str) -> TestReport:
        details["degenerate_reason"] = reason
        return TestReport(meta=meta, wavelet=bank.family, J1=cfg.J1, J2=cfg.J2, q=None,
                          q_per_scale=q_per_scale, statistics={s: None for s in cfg.statistics},
                          thresholds=thresholds, decisions={s: None for s in cfg.statistics},
                          changepoint=None, degenerate=True, details=details)

    if _is_degenerate(x, pyr):
        warnings.warn("all wavelet coefficients vanish; no decision is made",
                      DegenerateInputWarning, stacklevel=2)
        return degenerate_report("wavelet coefficients vanish")

    ms = between_scale_series(pyr, cfg.J1, cfg.J2)
    q = select_bandwidth(ms.Y, cfg.bandwidth)
    path = cusum_path_multi(pyr, cfg.J1, cfg.J2, q, cfg.partial_sums)
    values = {"cvm": cvm_statistic(path), "ksm": ksm_statistic(path)}
    stats = {s: values[s] for s in cfg.statistics}
    decisions = {s: "reject" if stats[s] >= thresholds[s]["value"] else "accept"
                 for s in cfg.statistics}
    k_hat = path.argmax_index
    changepoint = {"reference_scale": cfg.J2, "coefficient_index": k_hat,
                   "sample_index": estimate_changepoint(path, bank, cfg.J2, len(x))}
    details["between_scale"] = {"n_blocks": ms.n_blocks, "dropped": ms.dropped,
                                "mean": ms.mean.tolist(), "Gamma_hat": path.scale_matrix.tolist()}
    if cfg.include_path:
        details["path"] = path.values.tolist()
    return TestReport(meta=meta, wavelet=bank.family, J1=cfg.J1, J2=cfg.J2, q=q,
                      q_per_scale=q_per_scale, statistics=stats, thresholds=thresholds,
                      decisions=decisions, changepoint=changepoint, degenerate=False,
                      details=details)


def _jsonable(value) -> bool:
    try:
        json.dumps(value)
    except TypeError:
        return False
    return True
