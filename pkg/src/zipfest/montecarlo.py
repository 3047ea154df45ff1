"""Replicated experiments that check the limit theorems at desk scale.

``normality_study`` samples M occupancy configurations, forms each
estimator's standardized statistic exactly as its limit theorem states it
(using the true exponent), and reports moments, a Kolmogorov-Smirnov
diagnostic against the standard normal, plug-in CI coverage, and the
theoretical variance target.

``covariance_study`` samples nested trajectories, centers every component
with the exact finite-n expectation oracle, scales by sqrt(alpha(n)) and
compares empirical covariances against the limiting covariance function.

``remainder_study`` is deterministic: exact oracle expectations minus
leading terms, normalized by n^(theta/2).

Replications are independent jobs keyed by replication index, so results
are identical for any worker count; the aggregation is a commutative merge
over replication-indexed slots.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import asymptotics
from .errors import UsageError, ZipfestError
from .estimators import (ImplicitSolver, log_ratio_estimate, normal_cdf,
                         ratio_estimate_k, ratio_estimate_r1)
from .law import PowerLaw, make_zipf_law, zeta_normalization
from .occupancy import summarize_count_values
from .sampler import SeedSpec, _count_values, _draw_positions

__all__ = ["ExperimentConfig", "EstimatorReport", "StudyReport",
           "CovarianceRow", "CovarianceTable", "RemainderRow",
           "normality_study", "covariance_study", "remainder_study", "ks_test"]

NORMALITY_ESTIMATORS = ("implicit-r", "implicit-u", "implicit-rk",
                        "ratio-r1", "ratio-k")


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared configuration for the replicated studies."""

    theta: float
    n: int
    m: int
    i0: int = 0
    estimators: tuple[str, ...] = NORMALITY_ESTIMATORS
    k_values: tuple[int, ...] = (1,)
    grid: tuple[float, ...] = (0.5, 1.0)
    nu: int = 1
    seed: int = 0
    level: float = 0.95
    k_max: int = 8
    tail_epsilon: float = 1e-12
    variance_tolerance: float = 0.2
    workers: int | None = None

    def content_hash(self) -> str:
        payload = asdict(self)
        payload.pop("workers")
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def echo(self) -> dict:
        out = asdict(self)
        out.pop("workers")
        out["config_hash"] = self.content_hash()
        return out


def _resolve_workers(workers) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("ZIPFEST_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def _expand_estimators(tags, k_values) -> list[tuple[str, str, int | None]]:
    """-> list of (report id, family, k)."""
    out = []
    for tag in tags:
        if tag == "implicit-r":
            out.append(("implicit-r", "implicit-r", None))
        elif tag == "implicit-u":
            out.append(("implicit-u", "implicit-u", None))
        elif tag == "implicit-rk":
            out.extend((f"implicit-rk({k})", "implicit-rk", k) for k in k_values)
        elif tag == "ratio-r1":
            out.append(("ratio-r1", "ratio-r1", None))
        elif tag == "ratio-k":
            out.extend((f"ratio-k({k})", "ratio-k", k) for k in k_values)
        elif tag == "log-ratio":
            out.append(("log-ratio", "log-ratio", None))
        else:
            raise UsageError(f"unknown estimator tag {tag!r}")
    return out


# ----------------------------------------------------------------------
# Kolmogorov-Smirnov against the standard normal
# ----------------------------------------------------------------------

def ks_test(sample) -> tuple[float, float]:
    """One-sample KS distance and asymptotic p-value against N(0, 1).

    The p-value uses the Kolmogorov series
    2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2) at lambda = sqrt(m) D,
    truncated at 100 terms.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    m = x.size
    if m < 100:
        raise UsageError(f"KS diagnostic needs at least 100 points, got {m}")
    cdf = np.array([normal_cdf(v) for v in x])
    upper = np.max(np.arange(1, m + 1) / m - cdf)
    lower = np.max(cdf - np.arange(0, m) / m)
    distance = max(upper, lower)
    lam = math.sqrt(m) * distance
    p = 0.0
    for j in range(1, 101):
        p += 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam)
    return float(distance), float(min(max(p, 0.0), 1.0))


def _moments(values: np.ndarray) -> tuple[float, float, float, float]:
    mean = float(values.mean())
    centered = values - mean
    m2 = float(np.mean(centered ** 2))
    m3 = float(np.mean(centered ** 3))
    m4 = float(np.mean(centered ** 4))
    variance = float(values.var(ddof=1))
    skew = m3 / m2 ** 1.5 if m2 > 0 else 0.0
    kurt = m4 / m2 ** 2 - 3.0 if m2 > 0 else 0.0
    return mean, variance, skew, kurt


# ----------------------------------------------------------------------
# normality study
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EstimatorReport:
    estimator: str
    m_included: int
    m_excluded: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    ks_distance: float
    ks_pvalue: float
    target_variance: float
    variance_ratio: float
    coverage: float | None

    def to_json_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StudyReport:
    config: dict
    rows: tuple[EstimatorReport, ...]

    def to_json_dict(self) -> dict:
        return {"config": self.config, "rows": [r.to_json_dict() for r in self.rows]}

    def row(self, estimator: str) -> EstimatorReport:
        for r in self.rows:
            if r.estimator == estimator:
                return r
        raise KeyError(estimator)


def _law_from_config(cfg: ExperimentConfig) -> PowerLaw:
    return make_zipf_law(cfg.theta, i0=cfg.i0, tail_epsilon=cfg.tail_epsilon)


def _normality_chunk(cfg: ExperimentConfig, rep_lo: int, rep_hi: int):
    """Standardized values / coverage flags for one block of replications."""
    law = _law_from_config(cfg)
    specs = _expand_estimators(cfg.estimators, cfg.k_values)
    solvers = {}
    for name, family, k in specs:
        if family == "implicit-r":
            solvers[name] = ImplicitSolver("r", cfg.n, zeta_normalization)
        elif family == "implicit-u":
            solvers[name] = ImplicitSolver("u", cfg.n, zeta_normalization)
        elif family == "implicit-rk":
            solvers[name] = ImplicitSolver("rk", cfg.n, zeta_normalization, k=k)
    theta = cfg.theta
    log_n = math.log(cfg.n)
    n_rows = rep_hi - rep_lo
    values = {name: np.full(n_rows, np.nan) for name, _, _ in specs}
    covered = {name: np.full(n_rows, np.nan) for name, _, _ in specs}
    for offset, rep in enumerate(range(rep_lo, rep_hi)):
        rng = SeedSpec(cfg.seed, rep).generator()
        pos, far = _draw_positions(law, cfg.n, rng)
        snap = summarize_count_values(_count_values(pos, far), cfg.n, k_max=cfg.k_max)
        for name, family, k in specs:
            try:
                if family == "implicit-r":
                    est = solvers[name].solve(float(snap.r), level=cfg.level)
                    value = log_n * math.sqrt(snap.r) * (est.theta_hat - theta)
                elif family == "implicit-u":
                    est = solvers[name].solve(float(snap.u), level=cfg.level)
                    value = log_n * math.sqrt(snap.u) * (est.theta_hat - theta)
                elif family == "implicit-rk":
                    stat = float(snap.exact_count(k))
                    est = solvers[name].solve(stat, level=cfg.level)
                    value = log_n * math.sqrt(stat) * (est.theta_hat - theta)
                elif family == "ratio-r1":
                    est = ratio_estimate_r1(snap, level=cfg.level)
                    value = math.sqrt(snap.r) * (est.theta_hat - theta)
                else:  # ratio-k
                    est = ratio_estimate_k(snap, k, level=cfg.level)
                    value = math.sqrt(snap.exact_count(k)) * (est.theta_hat - theta)
            except ZipfestError:
                continue
            values[name][offset] = value
            if est.stderr > 0.0:
                covered[name][offset] = float(est.ci[0] <= theta <= est.ci[1])
    return values, covered


def _run_chunked(cfg: ExperimentConfig, chunk_fn, merge_width: int):
    workers = _resolve_workers(cfg.workers)
    if workers == 1:
        return [chunk_fn(cfg, 0, cfg.m)]
    bounds = np.linspace(0, cfg.m, workers * 2 + 1).astype(int)
    ranges = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(chunk_fn, cfg, a, b) for a, b in ranges]
        return [f.result() for f in futures]


def normality_study(config: ExperimentConfig) -> StudyReport:
    """Check asymptotic normality and variance targets of the estimators."""
    if config.m < 100:
        raise UsageError(f"normality studies need M >= 100, got {config.m}")
    if "log-ratio" in config.estimators:
        raise UsageError("log-ratio has no normal limit; drop it from normality studies")
    specs = _expand_estimators(config.estimators, config.k_values)
    chunks = _run_chunked(config, _normality_chunk, len(specs))
    values = {name: np.concatenate([c[0][name] for c in chunks]) for name, _, _ in specs}
    covered = {name: np.concatenate([c[1][name] for c in chunks]) for name, _, _ in specs}

    rows = []
    for name, family, k in specs:
        if family == "implicit-r":
            target = asymptotics.implicit_variance(config.theta, "r")
        elif family == "implicit-u":
            target = asymptotics.implicit_variance(config.theta, "u")
        elif family == "implicit-rk":
            target = asymptotics.implicit_variance(config.theta, "rk", k)
        elif family == "ratio-r1":
            target = asymptotics.ratio_r1_variance(config.theta)
        else:
            target = asymptotics.ratio_k_variance(config.theta, k)
        vals = values[name]
        included = vals[~np.isnan(vals)]
        m_excluded = int(np.isnan(vals).sum())
        if included.size < 100:
            raise ZipfestError(
                f"estimator {name}: only {included.size} usable replications")
        mean, variance, skew, kurt = _moments(included)
        distance, pvalue = ks_test(included / math.sqrt(target))
        cov = covered[name]
        cov = cov[~np.isnan(cov)]
        coverage = float(cov.mean()) if cov.size else None
        rows.append(EstimatorReport(
            estimator=name, m_included=int(included.size), m_excluded=m_excluded,
            mean=mean, variance=variance, skewness=skew, excess_kurtosis=kurt,
            ks_distance=distance, ks_pvalue=pvalue, target_variance=target,
            variance_ratio=variance / target, coverage=coverage))
    return StudyReport(config=config.echo(), rows=tuple(rows))


# ----------------------------------------------------------------------
# covariance study
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CovarianceRow:
    i: int
    j: int
    tau: float
    t: float
    empirical: float
    theoretical: float
    std_error: float
    z_score: float

    def to_json_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CovarianceTable:
    config: dict
    rows: tuple[CovarianceRow, ...]

    def to_json_dict(self) -> dict:
        return {"config": self.config, "rows": [r.to_json_dict() for r in self.rows]}

    def entry(self, i: int, j: int, tau: float, t: float) -> CovarianceRow:
        for r in self.rows:
            if (r.i, r.j) == (i, j) and math.isclose(r.tau, tau) and math.isclose(r.t, t):
                return r
        raise KeyError((i, j, tau, t))


def _covariance_chunk(cfg: ExperimentConfig, rep_lo: int, rep_hi: int):
    law = _law_from_config(cfg)
    comps = cfg.nu + 1
    grid = cfg.grid
    out = np.empty((rep_hi - rep_lo, len(grid), comps))
    for offset, rep in enumerate(range(rep_lo, rep_hi)):
        rng = SeedSpec(cfg.seed, rep).generator()
        pos, far = _draw_positions(law, cfg.n, rng)
        for a, t in enumerate(grid):
            m = int(math.floor(cfg.n * t))
            far_prefix = {s: v for s, v in far.items() if s < m} if far else {}
            snap = summarize_count_values(_count_values(pos[:m], far_prefix), m,
                                          k_max=max(cfg.k_max, cfg.nu))
            out[offset, a, 0] = snap.r
            for j in range(1, comps):
                out[offset, a, j] = snap.exact_count(j)
    return out


def covariance_study(config: ExperimentConfig) -> CovarianceTable:
    """Empirical covariance of the centered, scaled occupancy paths against
    the limiting covariance function."""
    if len(config.grid) < 1:
        raise UsageError("covariance studies need a non-empty time grid")
    if config.m < 100:
        raise UsageError(f"covariance studies need M >= 100, got {config.m}")
    if config.nu < 1 or config.nu > min(config.k_max, 8):
        raise UsageError(f"nu must lie in 1..{min(config.k_max, 8)}, got {config.nu}")
    law = _law_from_config(config)
    comps = config.nu + 1
    chunks = _run_chunked(config, _covariance_chunk, comps)
    raw = np.concatenate(chunks, axis=0)

    scale = math.sqrt(law.counting_function(float(config.n)))
    centered = np.empty_like(raw)
    for a, t in enumerate(config.grid):
        m = int(math.floor(config.n * t))
        centered[:, a, 0] = (raw[:, a, 0] - law.expected_statistic(m, "r")) / scale
        for j in range(1, comps):
            centered[:, a, j] = (raw[:, a, j]
                                 - law.expected_statistic(m, "rk", k=j)) / scale

    spec = asymptotics.CovarianceSpec(config.theta, nu=config.nu)
    m_reps = centered.shape[0]
    rows = []
    for a, tau in enumerate(config.grid):
        for b in range(a, len(config.grid)):
            t = config.grid[b]
            for i in range(comps):
                for j in range(comps):
                    if a == b and j < i:
                        continue
                    emp = float(np.mean(centered[:, a, i] * centered[:, b, j]))
                    theo = spec.cov(i, j, tau, t)
                    var_i = spec.cov(i, i, tau, tau)
                    var_j = spec.cov(j, j, t, t)
                    se = math.sqrt((var_i * var_j + theo ** 2) / m_reps)
                    rows.append(CovarianceRow(
                        i=i, j=j, tau=tau, t=t, empirical=emp, theoretical=theo,
                        std_error=se, z_score=(emp - theo) / se))
    return CovarianceTable(config=config.echo(), rows=tuple(rows))


# ----------------------------------------------------------------------
# remainder study (deterministic)
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class RemainderRow:
    n: int
    statistic: str
    exact: float
    leading: float
    remainder: float
    normalized_remainder: float

    def to_json_dict(self) -> dict:
        return asdict(self)


def remainder_study(law: PowerLaw, n_list,
                    stats=(("r", None), ("u", None), ("rk", 1), ("rk", 2))) -> list[RemainderRow]:
    """Exact-oracle expectations minus leading terms, normalized by
    n^(theta/2); plus the counting-function remainder alpha(n) - (c n)^theta."""
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise UsageError("n_list must be strictly increasing")
    theta = law.theta
    if theta is None or law.c is None:
        raise UsageError("remainder studies need a law with theta and c metadata")
    rows = []
    for n in n_list:
        for stat, k in stats:
            exact = law.expected_statistic(n, stat, k=k)
            leading = law.leading_term(n, stat, k=k)
            rem = exact - leading
            label = stat if k is None else f"{stat}({k})"
            rows.append(RemainderRow(
                n=n, statistic=label, exact=exact, leading=leading, remainder=rem,
                normalized_remainder=rem / n ** (theta / 2.0)))
        alpha = law.counting_function(float(n))
        power = (law.c * n) ** theta
        rows.append(RemainderRow(
            n=n, statistic="alpha", exact=float(alpha), leading=power,
            remainder=alpha - power,
            normalized_remainder=(alpha - power) / n ** (theta / 2.0)))
    return rows
