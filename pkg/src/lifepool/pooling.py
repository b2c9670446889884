"""Annuity equivalent wealth and the value of longevity risk pooling.

The headline quantity is delta, defined through U_annuitized(w) =
U_self_insured(w * (1 + delta)) under CRRA lifetime utility: the wealth
top-up a non-annuitizer needs to match the annuitizer.  For risk aversion
gamma != 1 it collapses to a ratio of annuity factors evaluated at the true
age and at a risk-adjusted age set back by b*ln(gamma); the lifecycle-utility
integrals themselves are kept here as an independent numerical oracle, and
they are also the route used for log utility (gamma = 1), where the closed
form does not apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy import integrate, optimize

from .mortality import GompertzLaw, from_hg, AgeAnchoredLaw, survival, to_hg, truncation_horizon
from .pricing import annuity_factor_hg, term_certain_pv

__all__ = [
    "Preferences",
    "PoolingResult",
    "Participant",
    "SubsidyRow",
    "SweepPoint",
    "aew_homogeneous",
    "aew_group",
    "utility_oracle_delta",
    "wtp",
    "subsidy_table",
    "delta_vs_g_sweep",
]

_GAMMA_ONE_TOL = 1e-12


@dataclass(frozen=True)
class Preferences:
    """CRRA risk aversion and subjective discounting.

    The subjective discount rate is tied to the valuation rate throughout,
    so ``rho`` must equal the ``r`` used for pricing.
    """

    gamma: float
    rho: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"risk aversion gamma must be > 0 (got {self.gamma})")


@dataclass(frozen=True)
class PoolingResult:
    """Value of pooling delta with its derived wealth measures."""

    delta: float
    aew: float
    wtp: float
    factor_individual: float
    factor_group: float


def _make_result(delta: float, a_ind: float, a_grp: float) -> PoolingResult:
    return PoolingResult(
        delta=delta,
        aew=1.0 + delta,
        wtp=wtp(delta),
        factor_individual=a_ind,
        factor_group=a_grp,
    )


def wtp(delta: float) -> float:
    """Willingness to pay as a wealth fraction: delta / (1 + delta)."""
    if delta <= -1.0:
        raise ValueError(f"delta must exceed -1 (got {delta})")
    return delta / (1.0 + delta)


def aew_homogeneous(r: float, law: GompertzLaw, x: float, gamma: float) -> PoolingResult:
    """Value of pooling when annuities are fairly priced for the buyer's law.

    1 + delta = ( a(r, x, m, b) / a(r, x - b*ln(gamma), m, b) )^(gamma/(1-gamma))
    for gamma != 1; log utility is handled by the lifecycle-utility route.
    """
    return aew_group(r, law, law, x, gamma)


def aew_group(r: float, individual: GompertzLaw, group: GompertzLaw,
              x: float, gamma: float) -> PoolingResult:
    """Value of pooling when the annuity is priced off a group law.

    1 + delta = a_ind^(1/(1-gamma)) * a_group^(-1) / a_setback^(gamma/(1-gamma)),
    where a_setback prices the individual's law at age x - b*ln(gamma).
    Collapses exactly to the homogeneous form when the laws coincide; delta
    can go negative under enough implicit loading.
    """
    _check_gamma(gamma)
    ind = to_hg(individual, x)
    grp = to_hg(group, x)
    a_ind = annuity_factor_hg(r, ind.h, ind.g)
    a_grp = annuity_factor_hg(r, grp.h, grp.g)
    if abs(gamma - 1.0) < _GAMMA_ONE_TOL:
        delta = utility_oracle_delta(r, individual, group, x, 1.0)
        return _make_result(delta, a_ind, a_grp)
    a_setback = annuity_factor_hg(r, ind.h / gamma, ind.g)
    # Exponents blow up near gamma = 1, so assemble the AEW in log space.
    log_aew = (
        math.log(a_ind) / (1.0 - gamma)
        - math.log(a_grp)
        - math.log(a_setback) * gamma / (1.0 - gamma)
    )
    return _make_result(math.expm1(log_aew), a_ind, a_grp)


def utility_oracle_delta(r: float, individual: GompertzLaw, group: GompertzLaw,
                         x: float, gamma: float) -> float:
    """Delta from the lifecycle-utility integrals, independent of the closed form.

    Computes the self-insurer's maximal utility with the optimal consumption
    path proportional to survival^(1/gamma), the annuitizer's utility from
    the constant consumption 1/a_group, and extracts delta from CRRA
    homogeneity (root-finding for gamma = 1).
    """
    _check_gamma(gamma)
    ind = to_hg(individual, x)
    grp = to_hg(group, x)

    p = lambda t: survival(individual, x, t)
    horizon = truncation_horizon(individual, x)
    a_ind = _quad(lambda t: math.exp(-r * t) * p(t), horizon)
    a_grp = _quad(
        lambda t: math.exp(-r * t) * survival(group, x, t),
        truncation_horizon(group, x),
    )

    if abs(gamma - 1.0) < _GAMMA_ONE_TOL:
        # log utility: U*(w) = a_ind*ln(w/a_ind) + int e^{-rt} p ln p,
        # U**(w) = a_ind*ln(w/a_grp); solve U*(1+delta) = U**(1).
        p_log_p = _quad(lambda t: math.exp(-r * t) * p(t) * math.log(max(p(t), 1e-300)),
                        horizon)
        target = a_ind * math.log(1.0 / a_grp)

        def gap(delta):
            return a_ind * math.log((1.0 + delta) / a_ind) + p_log_p - target

        return optimize.brentq(gap, -0.999999, 1e6, xtol=1e-12, rtol=1e-12)

    # p^(1/gamma) is itself the survival of a law with hazard h/gamma, so the
    # self-insurance integrands die out on that law's horizon (shorter than
    # the individual's for gamma < 1, longer for gamma > 1).
    span = math.log(1.0 - math.log(1e-14) * ind.g * gamma / ind.h) / ind.g
    d_factor = _quad(lambda t: math.exp(-r * t) * p(t) ** (1.0 / gamma), span)

    def u(c):
        return c ** (1.0 - gamma) / (1.0 - gamma)

    u_star = _quad(
        lambda t: math.exp(-r * t) * p(t) * u(p(t) ** (1.0 / gamma) / d_factor), span
    )
    u_star_star = u(1.0 / a_grp) * a_ind
    # log-space extraction keeps the 1/(1-gamma) exponent stable near one
    return math.expm1(math.log(u_star_star / u_star) / (1.0 - gamma))


def _quad(f, horizon: float) -> float:
    val, err = integrate.quad(f, 0.0, horizon, limit=400, epsabs=1e-13, epsrel=1e-11)
    if err > 1e-8 * max(1.0, abs(val)):
        raise RuntimeError(
            f"utility quadrature did not converge (achieved tolerance {err:.2e})"
        )
    return val


def _check_gamma(gamma: float) -> None:
    if not math.isfinite(gamma) or gamma <= 0:
        raise ValueError(f"risk aversion gamma must be > 0 (got {gamma})")


# ---------------------------------------------------------------------------
# Subsidy arithmetic for deterministic horizons


@dataclass(frozen=True)
class Participant:
    """Member of a stylized pension pool with a deterministic horizon.

    ``horizon`` is either a number of remaining years or a (GompertzLaw, age)
    pair whose mean remaining lifetime is used.  ``contribution`` of None
    means the equal-contribution assumption (total liability split evenly).
    """

    label: str
    income: float
    horizon: object
    contribution: float | None = None

    def __post_init__(self):
        if self.income < 0:
            raise ValueError(f"income must be >= 0 (got {self.income})")
        if self.contribution is not None and self.contribution < 0:
            raise ValueError(f"contribution must be >= 0 (got {self.contribution})")

    def horizon_years(self) -> float:
        if isinstance(self.horizon, (int, float)):
            years = float(self.horizon)
        else:
            try:
                law, age = self.horizon
            except (TypeError, ValueError):
                raise ValueError(
                    "horizon must be a number of years or a (GompertzLaw, age) pair"
                ) from None
            from .mortality import moments

            years = moments(law, age).mean
        if not math.isfinite(years) or years <= 0:
            raise ValueError(f"invalid horizon {years} for participant {self.label!r}")
        return years


@dataclass(frozen=True)
class SubsidyRow:
    label: str
    horizon: float
    income: float
    present_value: float
    contribution: float
    net_transfer: float  # contribution - present value; positive funds others


def subsidy_table(participants: Sequence[Participant], r: float,
                  mode: str = "annual-immediate") -> list[SubsidyRow]:
    """Per-participant present values and zero-sum transfers.

    Each present value is the term-certain PV of the participant's income
    over their deterministic horizon.  Under the equal-contribution
    assumption everyone pays total liability / n, so transfers sum to zero
    by construction; the last row absorbs any sub-cent float residue so the
    column sums to zero exactly.
    """
    if len(participants) < 2:
        raise ValueError("need at least two participants")
    horizons = [p.horizon_years() for p in participants]
    pvs = [term_certain_pv(p.income, h, r, mode)
           for p, h in zip(participants, horizons)]
    total = math.fsum(pvs)

    explicit = [p.contribution for p in participants]
    balanced = all(c is None for c in explicit)
    if balanced:
        contributions = [total / len(participants)] * len(participants)
    elif all(c is not None for c in explicit):
        contributions = [float(c) for c in explicit]
    else:
        raise ValueError("either all or no participants may set contributions")

    transfers = [c - pv for pv, c in zip(pvs, contributions)]
    if balanced:
        transfers[-1] = -math.fsum(transfers[:-1])
    return [
        SubsidyRow(
            label=p.label,
            horizon=h,
            income=p.income,
            present_value=pv,
            contribution=c,
            net_transfer=t,
        )
        for p, h, pv, c, t in zip(participants, horizons, pvs, contributions, transfers)
    ]


# ---------------------------------------------------------------------------
# Comparative-statics sweep


@dataclass(frozen=True)
class ClamLine:
    """Log-linear hazard/growth trade-off: ln h(g) = intercept - lifespan*g.

    ``intercept`` and ``lifespan`` live in age-zero space; the hazard at an
    evaluation age x is exp(intercept - lifespan*g) * exp(g*x).
    """

    intercept: float
    lifespan: float

    def hazard_at(self, g: float, x: float) -> float:
        return math.exp(self.intercept - self.lifespan * g + g * x)


@dataclass(frozen=True)
class SweepPoint:
    source: str  # "h=<value>" or "clam"
    g: float
    h: float  # hazard at the evaluation age
    delta: float


def delta_vs_g_sweep(r: float, gamma: float, x: float, g_grid: Sequence[float],
                     h_source) -> list[SweepPoint]:
    """Fairly priced delta across mortality growth rates.

    ``h_source`` is either a sequence of fixed hazards at age x (one output
    series per hazard) or a ClamLine, along which the hazard itself moves
    with g.  Points come back ordered by (series, g).
    """
    _check_gamma(gamma)
    g_grid = sorted(g_grid)
    if not g_grid:
        raise ValueError("g_grid must be non-empty")

    points: list[SweepPoint] = []
    if isinstance(h_source, ClamLine):
        for g in g_grid:
            h = h_source.hazard_at(g, x)
            points.append(SweepPoint("clam", g, h, _fair_delta_hg(r, h, g, gamma, x)))
        return points

    for h in h_source:
        if h <= 0:
            raise ValueError(f"fixed hazards must be > 0 (got {h})")
        label = f"h={h:g}"
        for g in g_grid:
            points.append(SweepPoint(label, g, h, _fair_delta_hg(r, h, g, gamma, x)))
    return points


def _fair_delta_hg(r: float, h: float, g: float, gamma: float, x: float) -> float:
    if abs(gamma - 1.0) < _GAMMA_ONE_TOL:
        law = from_hg(AgeAnchoredLaw(x=x, h=h, g=g))
        return utility_oracle_delta(r, law, law, x, 1.0)
    ratio = annuity_factor_hg(r, h, g) / annuity_factor_hg(r, h / gamma, g)
    return ratio ** (gamma / (1.0 - gamma)) - 1.0
