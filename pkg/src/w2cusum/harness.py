"""Monte-Carlo experiments: empirical level, power and change-point localization.

Every replication draws its data from ``SeedSequence([seed, model_index,
n_index, rep])`` and is tested at every requested coarsest scale, so the
output depends only on the configuration and never on the worker count.
"""
from __future__ import annotations

import csv
import io
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .cusum import PARTIAL_SUMS, STATISTICS, TestConfig, run_test
from .errors import DegenerateInputWarning, IllConditionedCovarianceError
from .limits import check_alpha
from .procgen import BreakScenario, ProcessModel, concat_scenario, generate

KINDS = ("level", "power", "changepoint")
WORKERS_ENV = "W2CUSUM_WORKERS"
PRESETS = {"full": {"level": 1000, "power": 1000, "changepoint": 10000},
           "desk": {"level": 200, "power": 200, "changepoint": 1000}}

_MODEL_KEYS = {"phi", "theta", "d", "sigma2"}


def parse_model(spec: str | dict | ProcessModel) -> ProcessModel:
    """``"ar1:phi=0.9"``, ``"arfima:phi=0.9,d=0.3,theta=0.1"``, ``"arma:phi=0.5/-0.2,theta=0.3"``.

    Multiple AR or MA coefficients are separated by ``/``.
    """
    if isinstance(spec, ProcessModel):
        return spec
    if isinstance(spec, dict):
        return ProcessModel.from_dict(spec)
    kind, _, rest = spec.strip().partition(":")
    kind = {"wn": "white_noise", "white": "white_noise"}.get(kind, kind)
    kw: dict = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in _MODEL_KEYS:
            raise ValueError(f"bad model parameter {item!r} in {spec!r}")
        if key in ("phi", "theta"):
            kw[key] = tuple(float(v) for v in value.split("/"))
        else:
            kw[key] = float(value)
    return ProcessModel(kind, kw.get("phi", ()), kw.get("theta", ()), kw.get("d", 0.0),
                        kw.get("sigma2", 1.0))


def parse_scenario(spec: str) -> tuple[ProcessModel, ProcessModel | None]:
    """``"MODEL"`` or ``"MODEL1+MODEL2"``."""
    parts = spec.split("+")
    if len(parts) > 2:
        raise ValueError(f"a scenario joins at most two models: {spec!r}")
    first = parse_model(parts[0])
    return first, (parse_model(parts[1]) if len(parts) == 2 else None)


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(value, 1)


@dataclass(frozen=True)
class HarnessConfig:
    """One experiment over the grid ``models x n_values x J2_values``.

    For ``power`` and ``changepoint`` experiments each model entry is a
    scenario ``"MODEL1+MODEL2"`` and ``n`` is the length of each segment.
    """

    kind: str
    models: tuple[str, ...]
    n_values: tuple[int, ...]
    J2_values: tuple[int, ...] = (3,)
    J1: int = 1
    reps: int = 200
    seed: int = 0
    alpha: float = 0.05
    statistics: tuple[str, ...] = STATISTICS
    bandwidth: int | str = "auto"
    wavelet: str = "db2"
    partial_sums: str = "scale_counts"
    output: str | None = None
    workers: int = field(default_factory=default_workers)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"experiment kind must be one of {KINDS}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not self.models or not self.n_values or not self.J2_values:
            raise ValueError("models, n_values and J2_values must be non-empty")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.partial_sums not in PARTIAL_SUMS:
            raise ValueError(f"partial_sums must be one of {PARTIAL_SUMS}")
        if any(n < 1 for n in self.n_values):
            raise ValueError("sample sizes must be positive")
        check_alpha(self.alpha)
        for spec in self.models:
            first, second = parse_scenario(spec)
            if self.kind != "level" and second is None:
                raise ValueError(f"{self.kind} experiments need 'MODEL1+MODEL2' scenarios, got {spec!r}")
        if self.output is not None:
            parent = os.path.dirname(os.path.abspath(self.output))
            if not os.access(parent, os.W_OK):
                raise ValueError(f"output directory {parent} is not writable")
        for j2 in self.J2_values:
            self.test_config(j2)

    def test_config(self, J2: int) -> TestConfig:
        return TestConfig(wavelet=self.wavelet, J1=self.J1, J2=J2, alpha=self.alpha,
                          statistics=tuple(self.statistics), bandwidth=self.bandwidth,
                          partial_sums=self.partial_sums)

    @classmethod
    def from_dict(cls, data: dict) -> "HarnessConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
        kw = dict(data)
        for key in ("models", "n_values", "J2_values", "statistics"):
            if key in kw:
                value = kw[key]
                kw[key] = tuple(value) if isinstance(value, (list, tuple)) else (value,)
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentResult:
    config: dict
    cells: list[dict]
    runtime_seconds: float
    seeding: str = "SeedSequence([seed, model_index, n_index, rep])"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        if not self.cells:
            return ""
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(self.cells[0]), lineterminator="\n")
        writer.writeheader()
        for cell in self.cells:
            writer.writerow({k: f"{v:.10g}" if isinstance(v, float) else v for k, v in cell.items()})
        return buf.getvalue()


def _series(cfg: HarnessConfig, model_index: int, n_index: int, rep: int):
    first, second = parse_scenario(cfg.models[model_index])
    n = cfg.n_values[n_index]
    ss = np.random.SeedSequence([cfg.seed, model_index, n_index, rep])
    if second is None:
        return generate(first, n, np.random.default_rng(ss))
    return concat_scenario(BreakScenario(first, second, n, n), ss)


def _replicate(args) -> list[dict]:
    cfg, model_index, n_index, rep = args
    ts = _series(cfg, model_index, n_index, rep)
    out = []
    for J2 in cfg.J2_values:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateInputWarning)
            try:
                report = run_test(ts, cfg.test_config(J2))
            except IllConditionedCovarianceError:
                out.append({"J2": J2, "failed": True})
                continue
        out.append({"J2": J2, "failed": report.degenerate,
                    "reject": {s: report.decisions[s] == "reject" for s in cfg.statistics},
                    "changepoint": None if report.changepoint is None
                    else report.changepoint["sample_index"]})
    return out


def _summarize(cfg: HarnessConfig, model_index: int, n_index: int, results: list[list[dict]]) -> list[dict]:
    cells = []
    n = cfg.n_values[n_index]
    for pos, J2 in enumerate(cfg.J2_values):
        per_rep = [r[pos] for r in results]
        ok = [r for r in per_rep if not r["failed"]]
        base = {"model": cfg.models[model_index], "n": n, "J1": cfg.J1, "J2": J2,
                "reps": len(per_rep), "failed": len(per_rep) - len(ok)}
        if cfg.kind == "changepoint":
            ks = np.array([r["changepoint"] for r in ok], dtype=float)
            lo, hi = (np.percentile(ks, [2.5, 97.5]) if ks.size else (np.nan, np.nan))
            cells.append({**base, "true_break": n,
                          "mean": float(ks.mean()) if ks.size else float("nan"),
                          "median": float(np.median(ks)) if ks.size else float("nan"),
                          "ci_low": float(lo), "ci_high": float(hi)})
        else:
            for s in cfg.statistics:
                # failed replications count as non-rejections
                rate = sum(r["reject"][s] for r in ok) / len(per_rep)
                cells.append({**base, "statistic": s, "rate": float(rate)})
    return cells


def run_experiment(cfg: HarnessConfig) -> ExperimentResult:
    start = time.perf_counter()
    tasks = [(cfg, mi, ni, rep) for mi in range(len(cfg.models))
             for ni in range(len(cfg.n_values)) for rep in range(cfg.reps)]
    if cfg.workers == 1:
        results = [_replicate(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (8 * cfg.workers))
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_replicate, tasks, chunksize=chunk))
    cells = []
    for mi in range(len(cfg.models)):
        for ni in range(len(cfg.n_values)):
            offset = (mi * len(cfg.n_values) + ni) * cfg.reps
            cells.extend(_summarize(cfg, mi, ni, results[offset:offset + cfg.reps]))
    return ExperimentResult(config=cfg.to_dict(), cells=cells,
                            runtime_seconds=time.perf_counter() - start)


def with_overrides(cfg: HarnessConfig, **changes) -> HarnessConfig:
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
