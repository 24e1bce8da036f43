"""
Analysis module.

Power-law fits of growth functionals over radius ladders, the iteration
lemma check, and per-center regularity reports with the implied Hölder
exponents.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, NamedTuple, Sequence, Tuple, Union

import numpy as np

from signorinilab.field import ScalarField
from signorinilab.functionals import (
    campanato_gradient,
    dirichlet_integral,
    mean_oscillation,
    phi,
    signorini_morrey,
)
from signorinilab.grid import Cylinder, PPoint

logger = logging.getLogger(__name__)

# Relative slack for inequality checks on computed samples
CHECK_SLACK = 1e-12

MIN_FIT_POINTS = 4


class FunctionalKind(str, Enum):
    """Growth functional evaluated over a radius ladder."""

    PHI = "phi"
    DIRICHLET = "dirichlet"
    CAMPANATO_GRAD = "campanato_grad"
    MEAN_OSC = "mean_osc"
    SIGNORINI_MORREY = "signorini_morrey"


class PowerLawFit(NamedTuple):
    exponent: float
    prefactor: float
    residual: float


def fit_power_law(radii: Sequence[float], values: Sequence[float]) -> PowerLawFit:
    """
    Least-squares fit of log value against log radius.

    Args:
        radii: Positive radii
        values: Nonnegative functional values

    Returns:
        PowerLawFit; a zero value gives exponent = prefactor = residual = +inf

    Raises:
        ValueError: On fewer than 4 points, nonpositive radii or negative values
    """
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.shape != v.shape or r.ndim != 1:
        raise ValueError(f"radii and values must be matching 1-D sequences, got {r.shape} and {v.shape}")
    if r.size < MIN_FIT_POINTS:
        raise ValueError(
            f"Need at least {MIN_FIT_POINTS} (radius, value) pairs for an exponent fit, "
            f"got {r.size}.\nExtend the radius ladder or add radii per octave."
        )
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ValueError("Radii must be positive and finite")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("Functional values must be nonnegative and finite")
    if np.any(v == 0):
        return PowerLawFit(math.inf, math.inf, math.inf)
    log_r, log_v = np.log(r), np.log(v)
    slope, intercept = np.polyfit(log_r, log_v, 1)
    residual = float(np.max(np.abs(log_v - (slope * log_r + intercept))))
    return PowerLawFit(float(slope), float(math.exp(intercept)), residual)


def fit_exponent(radii: Sequence[float], values: Sequence[float]) -> Tuple[float, float]:
    """Exponent and max log-residual of the power-law fit."""
    fit = fit_power_law(radii, values)
    return fit.exponent, fit.residual


def dyadic_ladder(r_min: float, r_max: float, per_octave: int = 4) -> np.ndarray:
    """
    Radii r_max * 2^{-j / per_octave} that are >= r_min, ascending.

    Raises:
        ValueError: If the window is empty or per_octave < 1
    """
    if per_octave < 1:
        raise ValueError(f"per_octave must be at least 1, got {per_octave}")
    if not 0 < r_min <= r_max:
        raise ValueError(f"Radius window must satisfy 0 < r_min <= r_max, got [{r_min}, {r_max}]")
    steps = int(math.floor(per_octave * math.log2(r_max / r_min) + 1e-9))
    return r_max * 2.0 ** (-np.arange(steps, -1, -1) / per_octave)


def beta_exponent(n: int, alpha: Union[float, Fraction]) -> Fraction:
    """β = α / (4(2n + 4 + α)) as an exact rational."""
    if n < 2:
        raise ValueError(f"Spatial dimension must be at least 2, got {n}")
    a = alpha if isinstance(alpha, Fraction) else Fraction(alpha).limit_denominator(10**6)
    if not 0 < a <= 1:
        raise ValueError(f"Hölder exponent must lie in (0, 1], got {alpha}")
    return a / (4 * (2 * n + 4 + a))


def ratio_bound(radii: Sequence[float], values: Sequence[float], exponent: float) -> float:
    """Smallest C with F(ρ) <= C (ρ/r)^e F(r) over all sampled pairs ρ < r."""
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    worst = 0.0
    for j in range(r.size):
        for i in range(j):
            if v[i] == 0:
                continue
            bound = (r[i] / r[j]) ** exponent * v[j]
            if bound <= 0:
                return math.inf
            worst = max(worst, v[i] / bound)
    return worst


@dataclass(frozen=True)
class IterationCheck:
    """Outcome of the iteration lemma check."""

    hypothesis: bool
    needed_a: float
    constant: float


def hl_iteration_check(
    samples: Iterable[Tuple[float, float]],
    a: float,
    gamma: float,
    beta: float,
    b: float = 0.0,
    eps: float = 0.0,
) -> IterationCheck:
    """
    Check φ(ρ) <= a[(ρ/r)^γ + ε] φ(r) + b r^β on all sampled pairs ρ < r and
    report the smallest c with φ(ρ) <= c[(ρ/r)^β φ(r) + b ρ^β].

    Args:
        samples: (ρ, φ(ρ)) pairs with strictly increasing ρ
        a, gamma, beta, b: Lemma parameters, γ > β > 0, a > 0, b >= 0
        eps: The lemma's ε(a, γ, β)

    Returns:
        IterationCheck with the hypothesis outcome, the smallest a that would
        satisfy it, and the smallest working conclusion constant

    Raises:
        ValueError: On parameter violations or non-monotone radii
    """
    if not gamma > beta > 0:
        raise ValueError(f"Need gamma > beta > 0, got gamma = {gamma}, beta = {beta}")
    if not a > 0 or b < 0 or eps < 0:
        raise ValueError(f"Need a > 0, b >= 0, eps >= 0, got a = {a}, b = {b}, eps = {eps}")
    pts = list(samples)
    radii = np.array([p[0] for p in pts], dtype=float)
    phis = np.array([p[1] for p in pts], dtype=float)
    if radii.size < 2 or np.any(np.diff(radii) <= 0):
        raise ValueError("Samples need at least two strictly increasing radii")
    if np.any(radii <= 0) or np.any(phis < 0):
        raise ValueError("Radii must be positive and φ values nonnegative")

    hypothesis = True
    needed_a = 0.0
    constant = 0.0
    for j in range(radii.size):
        r, phi_r = radii[j], phis[j]
        for i in range(j):
            rho, phi_rho = radii[i], phis[i]
            bound = a * ((rho / r) ** gamma + eps) * phi_r + b * r**beta
            if phi_rho > bound * (1 + CHECK_SLACK):
                hypothesis = False
            weight = ((rho / r) ** gamma + eps) * phi_r
            excess = phi_rho - b * r**beta
            if excess > 0:
                needed_a = max(needed_a, excess / weight if weight > 0 else math.inf)
            target = (rho / r) ** beta * phi_r + b * rho**beta
            if phi_rho > 0:
                constant = max(constant, phi_rho / target if target > 0 else math.inf)
    logger.debug(
        "iteration check: hypothesis %s, needed a %.4g, constant %.4g",
        hypothesis,
        needed_a,
        constant,
    )
    return IterationCheck(hypothesis=hypothesis, needed_a=needed_a, constant=constant)


def evaluate_functional(
    u: ScalarField,
    c: Cylinder,
    kind: FunctionalKind,
    use_even_extension: bool = False,
    contact_tol: float = 1e-9,
) -> float:
    """Value of a growth functional on one cylinder."""
    kind = FunctionalKind(kind)
    if kind == FunctionalKind.PHI:
        return phi(u, c).total
    if kind == FunctionalKind.DIRICHLET:
        return dirichlet_integral(u, c)
    if kind == FunctionalKind.CAMPANATO_GRAD:
        return campanato_gradient(u, c, use_even_extension)
    if kind == FunctionalKind.MEAN_OSC:
        return mean_oscillation(u, c)
    return signorini_morrey(u, c, contact_tol)


def implied_holder(kind: FunctionalKind, exponent: float, n: int) -> float:
    """
    Hölder exponent σ implied by a growth exponent, clamped to [0, 1].

    φ grows like ρ^{2n+4+2σ}, the Dirichlet integral of a C^{0,σ} field like
    ρ^{n+2σ}, and the Campanato-type integrals like ρ^{n+2+2σ}.
    """
    kind = FunctionalKind(kind)
    if math.isinf(exponent):
        return 1.0
    if kind == FunctionalKind.PHI:
        sigma = (exponent - 2 * n - 4) / 2
    elif kind == FunctionalKind.DIRICHLET:
        sigma = (exponent - n) / 2
    else:
        sigma = (exponent - n - 2) / 2
    return float(min(1.0, max(0.0, sigma)))


@dataclass(frozen=True)
class GrowthReport:
    """Functional values over a radius ladder at one center, with the fitted power law."""

    center: PPoint
    radii: Tuple[float, ...]
    values: Tuple[float, ...]
    fitted_exponent: float
    fit_residual: float
    functional_kind: FunctionalKind
    fitted_prefactor: float = math.nan
    implied_sigma: float = math.nan

    def __post_init__(self) -> None:
        if len(self.radii) < MIN_FIT_POINTS:
            raise ValueError(f"GrowthReport needs at least {MIN_FIT_POINTS} radii")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("GrowthReport radii must be strictly increasing")
        if any(v < 0 for v in self.values):
            raise ValueError("GrowthReport values must be nonnegative")

    @property
    def degenerate(self) -> bool:
        return math.isinf(self.fitted_exponent)


@dataclass(frozen=True)
class RegularityReport:
    """GrowthReports for a set of centers with summary statistics."""

    reports: Tuple[GrowthReport, ...]
    min_exponent: float
    median_exponent: float
    min_sigma: float
    median_sigma: float
    degenerate: bool


def growth_report(
    u: ScalarField,
    center: PPoint,
    kind: FunctionalKind,
    radii: Sequence[float],
    use_even_extension: bool = False,
    contact_tol: float = 1e-9,
) -> GrowthReport:
    """Evaluate one functional over the radius ladder at a center and fit its exponent."""
    kind = FunctionalKind(kind)
    radii = tuple(float(r) for r in sorted(radii))
    values = tuple(
        evaluate_functional(u, Cylinder(center, r), kind, use_even_extension, contact_tol)
        for r in radii
    )
    fit = fit_power_law(radii, values)
    logger.info(
        "%s growth at x = %s, t = %g: exponent %.4f (residual %.2e)",
        kind.value,
        center.x,
        center.t,
        fit.exponent,
        fit.residual,
    )
    return GrowthReport(
        center=center,
        radii=radii,
        values=values,
        fitted_exponent=fit.exponent,
        fit_residual=fit.residual,
        functional_kind=kind,
        fitted_prefactor=fit.prefactor,
        implied_sigma=implied_holder(kind, fit.exponent, u.grid.n),
    )


def regularity_report(
    u: ScalarField,
    centers: Sequence[PPoint],
    functional_kind: FunctionalKind,
    radii: Sequence[float],
    use_even_extension: bool = False,
    contact_tol: float = 1e-9,
    threads: int = 1,
) -> RegularityReport:
    """
    Growth reports at every center and a min/median summary.

    Args:
        u: The field
        centers: Cylinder centers
        functional_kind: Which functional to evaluate
        radii: Radius ladder (>= 4 radii)
        use_even_extension: Use ∇̂u for the gradient Campanato functional
        contact_tol: Contact threshold for the Signorini selector
        threads: Worker threads over centers

    Returns:
        RegularityReport
    """
    if not centers:
        raise ValueError("regularity_report needs at least one center")

    def one(center: PPoint) -> GrowthReport:
        return growth_report(u, center, functional_kind, radii, use_even_extension, contact_tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports: List[GrowthReport] = list(pool.map(one, centers))
    else:
        reports = [one(center) for center in centers]

    exponents = np.array([r.fitted_exponent for r in reports])
    sigmas = np.array([r.implied_sigma for r in reports])
    return RegularityReport(
        reports=tuple(reports),
        min_exponent=float(exponents.min()),
        median_exponent=float(np.median(exponents)),
        min_sigma=float(sigmas.min()),
        median_sigma=float(np.median(sigmas)),
        degenerate=bool(np.all(np.isinf(exponents))),
    )
