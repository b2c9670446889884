"""Life-annuity valuation factors.

The factor a(.) is the present value of 1 per year of lifetime income.  Under
an exponential hazard it has a closed form in the upper incomplete gamma
function, implemented here in both parameterizations, with an adaptive
quadrature of the defining integral as the independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .mortality import GompertzLaw, survival, truncation_horizon
from .specfun import upper_incomplete_gamma

__all__ = [
    "MarketBasis",
    "annuity_factor_hg",
    "annuity_factor_mb",
    "annuity_factor_quadrature",
    "exponential_annuity_factor",
    "term_certain_pv",
    "TERM_MODES",
]

TERM_MODES = ("annual-immediate", "monthly-immediate", "continuous")

# Arguments this far into the exponential would overflow the closed form long
# after the annuity value itself has become meaningless.
_MAX_EXP_ARG = 700.0


@dataclass(frozen=True)
class MarketBasis:
    """Valuation rate and the mortality law used for (group) pricing."""

    r: float
    pricing_law: GompertzLaw

    def __post_init__(self):
        if not math.isfinite(self.r):
            raise ValueError(f"non-finite rate {self.r}")
        if self.r < 0:
            raise ValueError(f"negative valuation rates are not supported (got {self.r})")


def annuity_factor_hg(r: float, h: float, g: float) -> float:
    """Closed-form annuity factor in (h, g) space.

    a(r, h, g) = Gamma(-r/g, h/g) / (g * exp{(-1/g) * (h + r*ln(h/g))}).
    With r = 0 this is the remaining life expectancy.
    """
    _check_rate(r)
    if h <= 0 or g <= 0:
        raise ValueError(f"need h > 0 and g > 0 (got h={h}, g={g})")
    ratio = h / g
    if ratio == 0.0:
        raise ValueError(f"h/g underflowed for h={h}, g={g}")
    log_ratio = math.log(ratio)
    scale_arg = (h + r * log_ratio) / g
    if ratio > 600.0:
        # The unscaled gamma under/overflows here, but its exponential and
        # power prefactors cancel against the annuity scale factor, leaving
        # the asymptotic series a = (1/h) * sum_k prod_{j<=k} (alpha-j)/ratio.
        return _factor_large_ratio(-r / g, ratio) / g
    if scale_arg > _MAX_EXP_ARG:
        raise ValueError(f"closed form overflows for h={h}, g={g}, r={r}")
    return upper_incomplete_gamma(-r / g, ratio) * math.exp(scale_arg) / g


def _factor_large_ratio(alpha: float, z: float) -> float:
    if abs(alpha) > 0.1 * z:
        raise ValueError(f"closed form not supported for r/g={-alpha} with h/g={z}")
    total = term = 1.0
    k = 0
    while abs(term) > 1e-17 * abs(total):
        k += 1
        term *= (alpha - k) / z
        total += term
        if k > 200:
            raise RuntimeError(f"asymptotic factor series stalled at z={z}")
    return total / z


def annuity_factor_mb(r: float, x: float, m: float, b: float) -> float:
    """Closed-form annuity factor in (x, m, b) space.

    a(r, x, m, b) = b * Gamma(-r*b, e^((x-m)/b)) / exp{r*(m-x) - e^((x-m)/b)}.
    Identical to annuity_factor_hg after conversion of the parameters.
    """
    _check_rate(r)
    if b <= 0:
        raise ValueError(f"dispersion b must be > 0 (got {b})")
    z = math.exp((x - m) / b)
    if z == 0.0:
        raise ValueError(f"e^((x-m)/b) underflowed for x={x}, m={m}, b={b}")
    log_denom = r * (m - x) - z
    if -log_denom > _MAX_EXP_ARG:
        raise ValueError(f"closed form overflows for x={x}, m={m}, b={b}, r={r}")
    return b * upper_incomplete_gamma(-r * b, z) * math.exp(-log_denom)


def annuity_factor_quadrature(r: float, law: GompertzLaw, x: float) -> float:
    """Annuity factor by adaptive quadrature of e^(-rt) * survival.

    Serves as the independent oracle for the closed forms; truncated where
    survival drops below 1e-14.
    """
    _check_rate(r)
    horizon = truncation_horizon(law, x)
    val, err = integrate.quad(
        lambda t: math.exp(-r * t) * survival(law, x, t),
        0.0,
        horizon,
        limit=400,
        epsabs=1e-12,
        epsrel=1e-12,
    )
    if err > 1e-9 * max(1.0, abs(val)):
        raise RuntimeError(
            f"annuity quadrature did not converge (achieved tolerance {err:.2e})"
        )
    return val


def exponential_annuity_factor(r: float, lam: float) -> float:
    """Annuity factor under a constant hazard: 1 / (r + lam)."""
    if r + lam <= 0:
        raise ValueError(f"need r + lam > 0 (got r={r}, lam={lam})")
    return 1.0 / (r + lam)


def term_certain_pv(payment: float, years: float, r: float,
                    mode: str = "annual-immediate") -> float:
    """Present value of a fixed payment per year over a certain horizon.

    ``payment`` is the annual amount; ``mode`` selects the payment timing
    convention.  With r = 0 every mode gives payment * years.
    """
    if years <= 0:
        raise ValueError(f"years must be > 0 (got {years})")
    _check_rate(r)
    if mode not in TERM_MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {TERM_MODES}")
    if r == 0.0:
        return payment * years
    if mode == "annual-immediate":
        return payment * (1.0 - (1.0 + r) ** -years) / r
    if mode == "monthly-immediate":
        monthly = (1.0 + r) ** (1.0 / 12.0) - 1.0
        return (payment / 12.0) * (1.0 - (1.0 + r) ** -years) / monthly
    return payment * (1.0 - math.exp(-r * years)) / r


def _check_rate(r: float) -> None:
    if not math.isfinite(r):
        raise ValueError(f"non-finite rate {r}")
    if r < 0:
        raise ValueError(f"negative valuation rates are not supported (got {r})")
