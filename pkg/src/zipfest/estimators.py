"""Point estimators of the power-law exponent from occupancy snapshots.

Three families:

* implicit estimators: theta* solves  S_n = g(theta)  where g is the
  first-order growth curve of E[S_n] (needs the normalization c(theta) to be
  known); asymptotic standard error sigma(theta*) / (ln n sqrt(S_n)),
* ratio estimators built from two statistics (no c needed):
  R_{n,1}/R_n and (k R_{n,k} - (k+1) R_{n,k+1}) / R_{n,k},
* the log-ratio baseline ln R_n / ln n, consistent but with a
  non-vanishing ln-scale bias, so it gets no normal confidence interval.

Confidence intervals are plug-in: the limiting variance formula evaluated at
the estimate itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import asymptotics
from .errors import (AmbiguousRootError, DomainError, InsufficientDataError,
                     NoRootError, UsageError)
from .occupancy import StatisticsSnapshot
from .specfun import ln_gamma

__all__ = ["EstimateResult", "ImplicitSolver", "implicit_estimate",
           "ratio_estimate_r1", "ratio_estimate_k", "log_ratio_estimate",
           "normal_quantile", "normal_cdf"]

#: 97.5% normal quantile used for the default 95% intervals.
Z_95 = 1.959963985

_IMPLICIT_TAGS = ("r", "u", "rk")


@dataclass(frozen=True)
class EstimateResult:
    """One point estimate with its plug-in uncertainty."""

    estimator_id: str
    theta_hat: float
    stderr: float
    ci: tuple[float, float]
    level: float
    flags: tuple[str, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return "degenerate" in self.flags

    def to_json_dict(self) -> dict:
        return {
            "estimator": self.estimator_id,
            "theta_hat": self.theta_hat,
            "stderr": self.stderr,
            "ci_lo": self.ci[0],
            "ci_hi": self.ci[1],
            "level": self.level,
            "flags": list(self.flags),
        }


# ----------------------------------------------------------------------
# normal CDF / quantile (erf-based; Acklam initializer plus one Halley step)
# ----------------------------------------------------------------------

def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


_ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
             6.680131188771972e+01, -1.328068155288572e+01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
             3.754408661907416e+00)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF for p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {p!r}")
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    if p < 0.02425:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
             / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    elif p <= 0.97575:
        q = p - 0.5
        r = q * q
        x = ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
             / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
              / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    # one Halley refinement through the erf CDF
    err = normal_cdf(x) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def _z_for_level(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise DomainError(f"confidence level must lie in (0, 1), got {level!r}")
    if level == 0.95:
        return Z_95
    return normal_quantile(0.5 + 0.5 * level)


def _clamped_ci(theta_hat: float, stderr: float, level: float) -> tuple[float, float]:
    if stderr == 0.0:
        return (theta_hat, theta_hat)
    half = _z_for_level(level) * stderr
    return (max(theta_hat - half, 0.0), min(theta_hat + half, 1.0))


# ----------------------------------------------------------------------
# implicit estimators
# ----------------------------------------------------------------------

class ImplicitSolver:
    """Reusable inverter of one growth curve g(theta) = E-first-order[S_n].

    Precomputes g on a dense grid once (bracket scan), then bisects each
    call to |delta theta| < 1e-10.  g need not be monotone for a general
    c(theta): zero brackets raise NoRootError, several raise
    AmbiguousRootError listing every refined root.
    """

    GRID_POINTS = 2000
    THETA_LO = 1e-4
    THETA_HI = 1.0 - 1e-4
    BISECT_TOL = 1e-10

    def __init__(self, which: str, n: int, c_of_theta, k: int | None = None,
                 differentiable_c: bool = True):
        if which not in _IMPLICIT_TAGS:
            raise UsageError(f"unknown implicit estimator tag {which!r}")
        if not (isinstance(n, (int, np.integer)) and n >= 2):
            raise DomainError(f"implicit estimators need integer n >= 2, got {n!r}")
        if which == "rk":
            if k is None or int(k) < 1:
                raise UsageError("implicit rk estimator needs k >= 1")
            k = int(k)
        else:
            k = None
        self.which = which
        self.n = int(n)
        self.k = k
        self.differentiable_c = bool(differentiable_c)
        if callable(c_of_theta):
            self._c_fn = c_of_theta
        else:
            const = float(c_of_theta)
            if not const > 0.0:
                raise DomainError(f"c must be positive, got {c_of_theta!r}")
            self._c_fn = lambda th: const
        self._grid = np.linspace(self.THETA_LO, self.THETA_HI, self.GRID_POINTS)
        self._g_grid = self._g_batch(self._grid)

    def _c_batch(self, thetas: np.ndarray) -> np.ndarray:
        try:
            values = np.asarray(self._c_fn(thetas), dtype=float)
            if values.shape == thetas.shape:
                return values
        except Exception:
            pass
        return np.array([float(self._c_fn(float(t))) for t in thetas])

    def _g_batch(self, thetas: np.ndarray) -> np.ndarray:
        c_vals = self._c_batch(thetas)
        if np.any(~np.isfinite(c_vals)) or np.any(c_vals <= 0.0):
            raise DomainError("c(theta) must be finite and positive on (0, 1)")
        log_g = ln_gamma(1.0 - thetas) + thetas * (np.log(c_vals) + math.log(self.n))
        if self.which == "u":
            log_g = log_g + (thetas - 1.0) * math.log(2.0)
        elif self.which == "rk":
            k = self.k
            log_g = (np.log(thetas) + ln_gamma(k - thetas) - ln_gamma(k + 1.0)
                     + thetas * (np.log(c_vals) + math.log(self.n)))
        return np.exp(log_g)

    def growth(self, theta: float) -> float:
        """g(theta) for this statistic and sample size."""
        c_val = float(self._c_fn(theta))
        if not (math.isfinite(c_val) and c_val > 0.0):
            raise DomainError(f"c({theta!r}) must be finite and positive, got {c_val!r}")
        log_g = ln_gamma(1.0 - theta) + theta * (math.log(c_val) + math.log(self.n))
        if self.which == "u":
            log_g += (theta - 1.0) * math.log(2.0)
        elif self.which == "rk":
            log_g += (math.log(theta) + ln_gamma(self.k - theta)
                      - ln_gamma(self.k + 1.0) - ln_gamma(1.0 - theta))
        return math.exp(log_g)

    def _bisect(self, lo: float, hi: float, target: float) -> tuple[float, int]:
        f_lo = self.growth(lo) - target
        iterations = 0
        while hi - lo > self.BISECT_TOL and iterations < 80:
            mid = 0.5 * (lo + hi)
            f_mid = self.growth(mid) - target
            if f_mid == 0.0:
                return mid, iterations
            if (f_mid < 0.0) == (f_lo < 0.0):
                lo, f_lo = mid, f_mid
            else:
                hi = mid
            iterations += 1
        return 0.5 * (lo + hi), iterations

    def solve(self, stat_value: float, level: float = 0.95) -> EstimateResult:
        if not stat_value >= 1.0:
            raise InsufficientDataError(
                f"implicit estimation needs a statistic >= 1, got {stat_value!r}")
        diff = self._g_grid - stat_value
        sign_change = np.flatnonzero(np.signbit(diff[:-1]) != np.signbit(diff[1:]))
        if sign_change.size == 0:
            raise NoRootError(
                f"no root of g(theta) = {stat_value!r} on "
                f"[{self.THETA_LO}, {self.THETA_HI}]",
                g_lo=float(self._g_grid[0]), g_hi=float(self._g_grid[-1]),
                target=float(stat_value))
        roots = []
        iterations = 0
        for idx in sign_change:
            root, its = self._bisect(self._grid[idx], self._grid[idx + 1], stat_value)
            roots.append(root)
            iterations += its
        if len(roots) > 1:
            raise AmbiguousRootError(
                f"g(theta) = {stat_value!r} has {len(roots)} roots", roots=roots)
        theta_star = roots[0]
        return self._result(theta_star, stat_value, level, iterations,
                            (float(self._grid[sign_change[0]]),
                             float(self._grid[sign_change[0] + 1])))

    def result_for_root(self, theta_star: float, stat_value: float,
                        level: float = 0.95) -> EstimateResult:
        """Package a caller-chosen root (after AmbiguousRootError)."""
        return self._result(theta_star, stat_value, level, 0, None,
                            extra_flags=("root-ambiguous",))

    def _result(self, theta_star, stat_value, level, iterations, bracket,
                extra_flags=()):
        sigma_sq = asymptotics.implicit_variance(theta_star, self.which, self.k)
        stderr = math.sqrt(sigma_sq) / (math.log(self.n) * math.sqrt(stat_value))
        flags = list(extra_flags)
        if not self.differentiable_c:
            flags.append("ci-unjustified")
        tag = f"implicit-{self.which}" if self.which != "rk" else f"implicit-rk({self.k})"
        diagnostics = {"iterations": iterations, "stat_value": float(stat_value)}
        if bracket is not None:
            diagnostics["bracket"] = bracket
        return EstimateResult(
            estimator_id=tag, theta_hat=theta_star, stderr=stderr,
            ci=_clamped_ci(theta_star, stderr, level), level=level,
            flags=tuple(flags), diagnostics=diagnostics)


def implicit_estimate(stat_value: float, n: int, which: str, c_of_theta,
                      k: int | None = None, level: float = 0.95,
                      differentiable_c: bool = True) -> EstimateResult:
    """One-shot implicit estimate; build an :class:`ImplicitSolver` directly
    when inverting the same curve many times."""
    solver = ImplicitSolver(which, n, c_of_theta, k=k,
                            differentiable_c=differentiable_c)
    return solver.solve(stat_value, level=level)


# ----------------------------------------------------------------------
# ratio estimators
# ----------------------------------------------------------------------

def _sigma0_sq_closed(theta: float) -> float:
    # same expression as asymptotics.ratio_r1_variance but tolerant of the
    # closed interval for boundary plug-ins (value 0 at both ends)
    return theta * (1.0 - theta) * (1.0 - 2.0 ** (theta - 2.0))


def ratio_estimate_r1(snapshot: StatisticsSnapshot, level: float = 0.95) -> EstimateResult:
    """theta_hat = R_{n,1} / R_n with plug-in standard error
    sqrt(v(theta_hat) / R_n), v = limiting ratio variance."""
    if snapshot.r < 1:
        raise InsufficientDataError("ratio estimator needs at least one occupied urn")
    theta_hat = snapshot.exact_count(1) / snapshot.r
    flags = []
    if not 0.0 < theta_hat < 1.0:
        flags.append("degenerate")
    stderr = math.sqrt(max(_sigma0_sq_closed(theta_hat), 0.0) / snapshot.r)
    return EstimateResult(
        estimator_id="ratio-r1", theta_hat=theta_hat, stderr=stderr,
        ci=_clamped_ci(theta_hat, stderr, level), level=level, flags=tuple(flags),
        diagnostics={"r": snapshot.r, "r_1": snapshot.exact_count(1)})


def ratio_estimate_k(snapshot: StatisticsSnapshot, k: int, level: float = 0.95) -> EstimateResult:
    """theta_hat = (k R_{n,k} - (k+1) R_{n,k+1}) / R_{n,k}.

    Estimates outside (0, 1) are flagged, never clamped; only the plug-in
    variance evaluation clamps theta_hat into [0.01, 0.99].
    """
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise UsageError(f"k must be a positive integer, got {k!r}")
    if k + 1 > snapshot.k_max:
        raise UsageError(f"snapshot tracks k up to {snapshot.k_max}; k={k} needs k+1")
    r_k = snapshot.exact_count(k)
    if r_k < 1:
        raise InsufficientDataError(f"no urns with exactly {k} balls")
    r_k1 = snapshot.exact_count(k + 1)
    theta_hat = (k * r_k - (k + 1) * r_k1) / r_k
    flags = []
    plug_in = theta_hat
    if not 0.0 < theta_hat < 1.0:
        flags.append("degenerate")
        plug_in = min(max(theta_hat, 0.01), 0.99)
    stderr = math.sqrt(asymptotics.ratio_k_variance(plug_in, k) / r_k)
    return EstimateResult(
        estimator_id=f"ratio-k({k})", theta_hat=theta_hat, stderr=stderr,
        ci=_clamped_ci(theta_hat, stderr, level), level=level, flags=tuple(flags),
        diagnostics={"r_k": r_k, "r_k1": r_k1})


def log_ratio_estimate(snapshot: StatisticsSnapshot, level: float = 0.95) -> EstimateResult:
    """Baseline theta_hat = ln R_n / ln n.

    Consistent, but ln n (theta_hat - theta) tends to a constant rather
    than a normal limit, so stderr is 0 and the interval is degenerate
    (flag "no-normality").
    """
    n = snapshot.total
    if not (float(n).is_integer() and n >= 2):
        raise DomainError(f"log-ratio estimator needs integer n >= 2, got {n!r}")
    if snapshot.r < 1:
        raise InsufficientDataError("log-ratio estimator needs at least one occupied urn")
    theta_hat = math.log(snapshot.r) / math.log(n)
    flags = ["no-normality"]
    if not 0.0 < theta_hat < 1.0:
        flags.append("degenerate")
    return EstimateResult(
        estimator_id="log-ratio", theta_hat=theta_hat, stderr=0.0,
        ci=(theta_hat, theta_hat), level=level, flags=tuple(flags),
        diagnostics={"r": snapshot.r, "n": int(n)})
