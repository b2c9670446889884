"""Mortality laws, parameter conversions and remaining-lifetime moments.

Two equivalent parameterizations of the same exponential-hazard law are kept
side by side: the actuarial (m, b) form, where m is the modal age at death and
b the dispersion in years, and the demographic (x, h, g) form anchored at an
age x with hazard h and growth rate g.  They map into each other exactly via
g = 1/b and h = (1/b) * exp((x - m)/b).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from scipy import integrate

__all__ = [
    "GompertzLaw",
    "AgeAnchoredLaw",
    "PlateauLaw",
    "LifetimeMoments",
    "from_hg",
    "to_hg",
    "survival",
    "density",
    "moments",
    "covol_profile",
    "exponential_moments",
    "plateau_hazard",
]

# Mass-based integration cutoff: horizons where survival drops below this are
# truncated, which bounds the discarded integrand mass explicitly.
SURVIVAL_FLOOR = 1e-14
_QUAD_TOL = 1e-10

# Sanity window for the modal age; catches per-1000 vs per-unit mix-ups early.
AGE_BOUNDS = (0.0, 150.0)


@dataclass(frozen=True)
class GompertzLaw:
    """Exponential-hazard mortality law in modal/dispersion form.

    The hazard at age x is (1/b) * exp((x - m)/b).  Set ``relax_bounds`` to
    accept modal ages outside the (0, 150) sanity window.
    """

    m: float
    b: float
    relax_bounds: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.m) and math.isfinite(self.b)):
            raise ValueError(f"non-finite parameters m={self.m}, b={self.b}")
        if self.b <= 0:
            raise ValueError(f"dispersion b must be > 0 (got {self.b})")
        lo, hi = AGE_BOUNDS
        if not self.relax_bounds and not lo < self.m < hi:
            raise ValueError(
                f"modal age m={self.m} outside sanity bounds {AGE_BOUNDS}; "
                "pass relax_bounds=True if intentional"
            )

    def hazard(self, age: float) -> float:
        return math.exp((age - self.m) / self.b) / self.b

    def survival(self, x: float, t: float) -> float:
        return survival(self, x, t)

    def density(self, x: float, t: float) -> float:
        return density(self, x, t)


@dataclass(frozen=True)
class AgeAnchoredLaw:
    """The same law pinned by (hazard h, growth rate g) at anchor age x."""

    x: float
    h: float
    g: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.x, self.h, self.g))):
            raise ValueError("non-finite anchored-law parameters")
        if self.h <= 0:
            raise ValueError(f"hazard h must be > 0 (got {self.h})")
        if self.g <= 0:
            raise ValueError(f"growth rate g must be > 0 (got {self.g})")


@dataclass(frozen=True)
class PlateauLaw:
    """Exponential hazard plus a constant accidental rate, flat beyond x_star.

    Below the plateau age the hazard is lam + h * exp(g * x); at and beyond
    x_star it is the constant lam_star.
    """

    lam: float
    h: float
    g: float
    lam_star: float
    x_star: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"accidental hazard lam must be >= 0 (got {self.lam})")
        if self.h <= 0:
            raise ValueError(f"age-zero hazard h must be > 0 (got {self.h})")
        if self.g < 0:
            raise ValueError(f"growth rate g must be >= 0 (got {self.g})")
        if self.lam_star <= self.lam:
            raise ValueError("plateau hazard lam_star must exceed lam")

    def continuity_gap(self) -> float:
        """Hazard jump at the plateau age; zero when the law is continuous."""
        return self.lam + self.h * math.exp(self.g * self.x_star) - self.lam_star


@dataclass(frozen=True)
class LifetimeMoments:
    """Mean, standard deviation and coefficient of variation of T_x."""

    mean: float
    sd: float
    covol: float


def from_hg(anchored: AgeAnchoredLaw) -> GompertzLaw:
    """Convert an age-anchored (x, h, g) law to modal/dispersion form.

    b = 1/g and m = x - ln(h/g)/g.
    """
    b = 1.0 / anchored.g
    m = anchored.x - math.log(anchored.h / anchored.g) / anchored.g
    return GompertzLaw(m, b, relax_bounds=True)


def to_hg(law: GompertzLaw, x: float) -> AgeAnchoredLaw:
    """Anchor a modal/dispersion law at age x; exact inverse of from_hg."""
    return AgeAnchoredLaw(x=x, h=law.hazard(x), g=1.0 / law.b)


def survival(law: GompertzLaw, x: float, t: float) -> float:
    """P(T_x >= t) = exp{ e^((x-m)/b) * (1 - e^(t/b)) }."""
    if t < 0:
        raise ValueError(f"horizon t must be >= 0 (got {t})")
    return math.exp(math.exp((x - law.m) / law.b) * (1.0 - math.exp(t / law.b)))


def density(law: GompertzLaw, x: float, t: float) -> float:
    """Death-time density at horizon t: hazard(x + t) * survival(x, t)."""
    return law.hazard(x + t) * survival(law, x, t)


def truncation_horizon(law: GompertzLaw, x: float, floor: float = SURVIVAL_FLOOR) -> float:
    """Horizon beyond which survival falls below ``floor``."""
    return law.b * math.log(1.0 - math.log(floor) * math.exp((law.m - x) / law.b))


def moments(law: GompertzLaw, x: float) -> LifetimeMoments:
    """Remaining-lifetime moments at age x.

    The mean uses the closed-form zero-rate annuity factor; the standard
    deviation integrates the first two moments of the death-time density by
    adaptive quadrature, truncated where survival drops below 1e-14.
    """
    from .pricing import annuity_factor_hg  # local import to avoid a cycle

    anchored = to_hg(law, x)
    mean = annuity_factor_hg(0.0, anchored.h, anchored.g)

    horizon = truncation_horizon(law, x)
    f = lambda t: density(law, x, t)
    m1 = _checked_quad(lambda t: t * f(t), horizon)
    m2 = _checked_quad(lambda t: t * t * f(t), horizon)
    var = m2 - m1 * m1
    if var <= 0:
        raise RuntimeError(f"negative variance {var} from quadrature at x={x}")
    sd = math.sqrt(var)
    return LifetimeMoments(mean=mean, sd=sd, covol=sd / mean)


def _checked_quad(f, horizon: float) -> float:
    val, err = integrate.quad(f, 0.0, horizon, limit=400,
                              epsabs=_QUAD_TOL, epsrel=1e-11)
    if err > max(_QUAD_TOL * 100, 1e-8 * abs(val)):
        raise RuntimeError(
            f"moment quadrature did not converge (achieved tolerance {err:.2e})"
        )
    return val


def covol_profile(law: GompertzLaw, ages: Iterable[float]) -> list[tuple[float, float]]:
    """Coefficient of variation of longevity per age, over increasing ages."""
    ages = list(ages)
    if any(b <= a for a, b in zip(ages, ages[1:])):
        raise ValueError("ages must be strictly increasing")
    return [(age, moments(law, age).covol) for age in ages]


def exponential_moments(lam: float) -> LifetimeMoments:
    """Moments under a constant hazard: mean = sd = 1/lam, covol = 1 exactly."""
    if lam <= 0:
        raise ValueError(f"hazard must be > 0 (got {lam})")
    return LifetimeMoments(mean=1.0 / lam, sd=1.0 / lam, covol=1.0)


def plateau_hazard(p: PlateauLaw, x: float) -> float:
    """Hazard of a plateau law at age x."""
    if x < 0:
        raise ValueError(f"age must be >= 0 (got {x})")
    if x >= p.x_star:
        return p.lam_star
    return p.lam + p.h * math.exp(p.g * x)
