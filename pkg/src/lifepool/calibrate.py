"""Two-stage least-squares calibration from one-year death rates.

Stage one fits each cohort's exponential-hazard parameters by regressing the
transformed death rates z = ln(-ln(1 - q) - lam) on age; stage two regresses
the fitted log hazards on the growth rates across cohorts, whose intercept and
slope locate a common mortality plateau (the compensation-law line).  Both
regressions use the explicit normal-equation formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .mortality import GompertzLaw, survival

__all__ = [
    "MortalityObservations",
    "GompertzFit",
    "ClamFit",
    "ProjectedRate",
    "gompertz_fit",
    "clam_fit",
    "growth_rate_between",
    "project_qx",
    "mixture_fit",
]

GENDERS = ("male", "female", "unisex")


@dataclass(frozen=True)
class MortalityObservations:
    """One cohort's vector of (age, one-year death rate) observations."""

    gender: str
    percentile: int
    ages: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise ValueError(f"gender must be one of {GENDERS} (got {self.gender!r})")
        if not 1 <= self.percentile <= 100:
            raise ValueError(f"percentile must be in [1, 100] (got {self.percentile})")
        ages = np.asarray(self.ages, dtype=float)
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "ages", ages)
        object.__setattr__(self, "q", q)
        if ages.shape != q.shape or ages.ndim != 1:
            raise ValueError("ages and q must be one-dimensional and equally long")
        if len(ages) and not np.all(np.diff(ages) > 0):
            raise ValueError("ages must be strictly increasing")
        if np.any((q < 0) | (q >= 1)):
            raise ValueError("death rates must lie in [0, 1)")

    def window(self, lo: float, hi: float) -> "MortalityObservations":
        keep = (self.ages >= lo) & (self.ages <= hi)
        return MortalityObservations(self.gender, self.percentile,
                                     self.ages[keep], self.q[keep])


@dataclass(frozen=True)
class GompertzFit:
    """Stage-one result: growth rate, age-zero hazard and diagnostics."""

    h: float
    g: float
    lam: float
    intercept: float  # fitted K = ln h + ln((e^g - 1)/g)
    r_squared: float
    residuals: np.ndarray = field(repr=False)

    @property
    def log_h(self) -> float:
        return math.log(self.h)

    def hazard_at(self, age: float) -> float:
        """Biological plus accidental hazard at an age, from the fit."""
        return self.lam + self.h * math.exp(self.g * age)

    def predicted_q(self, age) -> np.ndarray:
        """One-year death rates implied by the fitted parameters."""
        age = np.asarray(age, dtype=float)
        cumulative = self.lam + self.h * np.exp(self.g * age) * (
            np.expm1(self.g) / self.g
        )
        return -np.expm1(-cumulative)


def gompertz_fit(obs: MortalityObservations, lam: float = 0.0) -> GompertzFit:
    """Fit (h, g) to one cohort by least squares on the transformed rates.

    ``lam`` is a known, fixed accidental hazard subtracted before taking
    logs; every observed q must satisfy -ln(1 - q) > lam for the transform
    to exist.
    """
    if lam < 0:
        raise ValueError(f"accidental hazard lam must be >= 0 (got {lam})")
    if len(obs.ages) < 3:
        raise ValueError(f"need at least 3 observations (got {len(obs.ages)})")
    cumulative = -np.log1p(-obs.q)
    bad = cumulative <= lam
    if np.any(bad):
        age = obs.ages[bad][0]
        raise ValueError(
            f"lam={lam} too large: -ln(1-q) <= lam at age {age:g} "
            f"(gender={obs.gender}, percentile={obs.percentile})"
        )
    z = np.log(cumulative - lam)
    slope, intercept = _ols_line(obs.ages, z)
    g = slope
    h = math.exp(intercept) * g / math.expm1(g)
    fitted = intercept + slope * obs.ages
    residuals = z - fitted
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((z - z.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return GompertzFit(h=h, g=g, lam=lam, intercept=intercept,
                       r_squared=r_squared, residuals=residuals)


def _ols_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and intercept by the normal-equation formulas."""
    x_bar, y_bar = x.mean(), y.mean()
    sxx = float(np.sum((x - x_bar) ** 2))
    if sxx == 0.0:
        raise ValueError("design is rank-deficient: regressor has no variation")
    slope = float(np.sum((x - x_bar) * (y - y_bar))) / sxx
    return slope, y_bar - slope * x_bar


@dataclass(frozen=True)
class ClamFit:
    """Stage-two result: the common-plateau line across cohorts.

    ln h = L - x_star * g; the implied plateau hazard is e^L + lam and
    x_star is the age at which cohort hazards converge.
    """

    L: float
    x_star: float
    lam: float
    lambda_star: float
    r_squared: float
    r_squared_adj: float
    se_intercept: float
    se_slope: float
    t_intercept: float
    t_slope: float
    n: int
    g_min: float
    g_max: float
    g_mean: float

    @property
    def log_half_life_gap(self) -> float:
        """Distance of L from ln(ln 2), the one-year-survival-of-one-half mark."""
        return self.L - math.log(math.log(2.0))


def clam_fit(pairs: Sequence[tuple[float, float]], lam: float = 0.0) -> ClamFit:
    """Regress log hazard on growth rate across cohorts.

    ``pairs`` holds one (ln h, g) tuple per cohort.  The slope estimates
    -x_star and the intercept L; standard errors, t-values and the g-range
    diagnostics mirror the usual regression summary.
    """
    if len(pairs) < 3:
        raise ValueError(f"need at least 3 cohorts (got {len(pairs)})")
    log_h = np.array([p[0] for p in pairs], dtype=float)
    g = np.array([p[1] for p in pairs], dtype=float)
    if np.allclose(g, g[0]):
        raise ValueError("degenerate regressor: growth rates are all equal")
    slope, intercept = _ols_line(g, log_h)

    n = len(pairs)
    fitted = intercept + slope * g
    ss_res = float(np.sum((log_h - fitted) ** 2))
    ss_tot = float(np.sum((log_h - log_h.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    r2_adj = 1.0 - (1.0 - r2) * (n - 1) / (n - 2) if n > 2 else r2
    sxx = float(np.sum((g - g.mean()) ** 2))
    sigma2 = ss_res / (n - 2) if n > 2 else 0.0
    se_slope = math.sqrt(sigma2 / sxx)
    se_intercept = math.sqrt(sigma2 * (1.0 / n + g.mean() ** 2 / sxx))
    return ClamFit(
        L=intercept,
        x_star=-slope,
        lam=lam,
        lambda_star=math.exp(intercept) + lam,
        r_squared=r2,
        r_squared_adj=r2_adj,
        se_intercept=se_intercept,
        se_slope=se_slope,
        t_intercept=intercept / se_intercept if se_intercept > 0 else math.inf,
        t_slope=slope / se_slope if se_slope > 0 else math.inf,
        n=n,
        g_min=float(g.min()),
        g_max=float(g.max()),
        g_mean=float(g.mean()),
    )


def growth_rate_between(q_a: float, q_b: float, T: float) -> float:
    """Growth rate solving q_b = q_a * e^(g*T)."""
    if not (0.0 < q_a < 1.0 and 0.0 < q_b < 1.0):
        raise ValueError(f"rates must lie in (0, 1) (got {q_a}, {q_b})")
    if T <= 0:
        raise ValueError(f"age gap T must be > 0 (got {T})")
    return math.log(q_b / q_a) / T


class ProjectedRate(NamedTuple):
    q: float
    saturated: bool


def project_qx(q_base: float, g: float, delta_years: float) -> ProjectedRate:
    """Project a death rate forward at constant exponential growth.

    Values reaching one are capped just below it and flagged as saturated.
    """
    if not 0.0 < q_base < 1.0:
        raise ValueError(f"base rate must lie in (0, 1) (got {q_base})")
    value = q_base * math.exp(g * delta_years)
    if value >= 1.0:
        return ProjectedRate(q=1.0 - 1e-12, saturated=True)
    return ProjectedRate(q=value, saturated=False)


def mixture_fit(laws: Sequence[GompertzLaw], weights: Sequence[float],
                x_window: tuple[float, float] = (65.0, 100.0)) -> GompertzLaw:
    """Collapse a survival mixture to a single law for pooled pricing.

    Fits a straight line to the log hazard of the weighted survival mixture
    at annual knots over ``x_window`` (mixing at the window start).  A
    genuine mixture is no longer a single exponential-hazard law, so the
    collapsed parameters depend on the window; the recipe is deterministic
    and exact for degenerate mixtures.
    """
    if len(laws) == 0 or len(laws) != len(weights):
        raise ValueError("need one weight per law")
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be non-negative and sum to 1")
    lo, hi = x_window
    if hi <= lo:
        raise ValueError(f"empty age window {x_window}")

    ages = np.arange(lo, hi + 0.5)
    t = ages - lo
    p = np.array([[survival(law, lo, ti) for ti in t] for law in laws])
    hazards = np.array([[law.hazard(a) for a in ages] for law in laws])
    mix_p = weights @ p
    if np.any(mix_p <= 0.0) or mix_p[-1] < 1e-300:
        raise ValueError("mixture survival vanished over the fitting window")
    mix_hazard = (weights @ (hazards * p)) / mix_p
    slope, intercept = _ols_line(ages, np.log(mix_hazard))
    if slope <= 0:
        raise ValueError("mixture hazard is not increasing over the window")
    b = 1.0 / slope
    m = -(intercept + math.log(b)) * b
    return GompertzLaw(m, b, relax_bounds=True)
