"""
Certify module.

Measures how far a field is from minimizing the parabolic Signorini energy:
builds admissible competitor families on cylinders, evaluates the energy
deficit, and fits the decay of the smallest gauge ω(r) that makes the
almost-minimizer inequality hold for every tested competitor.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from signorinilab.analysis import dyadic_ladder, fit_power_law
from signorinilab.field import ScalarField, dirichlet_energy, time_derivative
from signorinilab.geometry import EllipticCylinder, Frame, deskew, frame_at, identity_frame
from signorinilab.grid import Cylinder, PPoint, build_grid
from signorinilab.profiles import sample_profile
from signorinilab.solve import (
    CoefficientField,
    SolverSettings,
    SolveSpec,
    caloric_replacement,
    region_mask,
    signorini_replacement,
    signorini_solve,
)

logger = logging.getLogger(__name__)

Region = Union[Cylinder, EllipticCylinder]
Coefficients = Union[None, np.ndarray, CoefficientField]

# Absolute tolerance of the admissibility checks
ADMISSIBLE_TOL = 1e-12

BUMP_SCALES = (0.25, 0.4, 0.55)
BUMP_OFFSETS = (0.0, 0.35, -0.35)


class CompetitorKind(str, Enum):
    REPLACEMENT = "replacement"
    BUMP_PERTURBATION = "bump_perturbation"
    DESKEWED = "deskewed"


class InadmissibleCompetitorError(ValueError):
    """A competitor differs from the candidate off the cylinder or dips below the obstacle."""

    def __init__(self, reason: str) -> None:
        super().__init__(f"Inadmissible competitor: {reason}")
        self.reason = reason


@dataclass(frozen=True, eq=False)
class Competitor:
    """Competitor field for one cylinder, with its verified admissibility."""

    field: ScalarField
    kind: CompetitorKind
    admissible: bool
    reason: str = ""


def check_admissible(
    u: ScalarField, v: ScalarField, mask: np.ndarray, constrained: bool = True
) -> Tuple[bool, str]:
    """
    Check that v equals u off the region and stays >= 0 on the region's thin nodes.

    Returns:
        (admissible, reason) with an empty reason when admissible
    """
    if v.grid != u.grid:
        return False, "competitor lives on a different grid"
    scale = max(1.0, float(np.max(np.abs(u.values))))
    gap = np.abs(v.values - u.values)[~mask]
    if gap.size and gap.max() > ADMISSIBLE_TOL * scale:
        return False, f"differs from u on the parabolic boundary by {gap.max():.3e}"
    if constrained:
        g = u.grid
        thin = mask[..., g.thin_index]
        if thin.any():
            low = float(v.values[..., g.thin_index][thin].min())
            if low < -ADMISSIBLE_TOL * scale:
                return False, f"negative on the thin space ({low:.3e})"
    return True, ""


def make_competitor(
    u: ScalarField,
    v: ScalarField,
    kind: CompetitorKind,
    mask: np.ndarray,
    constrained: bool = True,
) -> Competitor:
    admissible, reason = check_admissible(u, v, mask, constrained)
    if not admissible:
        logger.warning("%s competitor rejected: %s", kind.value, reason)
    return Competitor(field=v, kind=CompetitorKind(kind), admissible=admissible, reason=reason)


@dataclass(frozen=True)
class Deficit:
    """Energies of candidate and competitor and the time-derivative pairing."""

    E_u: float
    E_v: float
    P: float

    @property
    def excess(self) -> float:
        return self.E_u + self.P - self.E_v

    @property
    def ratio(self) -> Optional[float]:
        """(E_u + P - E_v) / (E_u + E_v), or None for degenerate energies."""
        total = self.E_u + self.E_v
        if total <= 0:
            return None
        return self.excess / total


def _energy_matrix(coeffs: Coefficients) -> Optional[np.ndarray]:
    if coeffs is None:
        return None
    if isinstance(coeffs, CoefficientField):
        return None if coeffs.is_identity else coeffs.A
    return np.asarray(coeffs, dtype=float)


def deficit(
    u: ScalarField,
    v: Competitor,
    region: Region,
    coeffs: Coefficients = None,
) -> Deficit:
    """
    E_u = ∫⟨A∇u,∇u⟩, E_v = ∫⟨A∇v,∇v⟩ and P = 2∫∂_t u (u - v) over the region.

    Energies use the solver's own bilinear form; ∂_t u is the backward
    difference of the implicit scheme.

    Raises:
        InadmissibleCompetitorError: If the competitor failed its checks
    """
    if not v.admissible:
        raise InadmissibleCompetitorError(v.reason or "not verified")
    g = u.grid
    mask = region_mask(g, region)
    A = _energy_matrix(coeffs)
    E_u = dirichlet_energy(u, mask, A)
    E_v = dirichlet_energy(v.field, mask, A)
    dt = time_derivative(u).values
    P = 2.0 * g.cell_volume * float(np.sum((dt * (u.values - v.field.values))[mask]))
    return Deficit(E_u=E_u, E_v=E_v, P=P)


def omega_min(
    u: ScalarField,
    region: Region,
    family: Sequence[Competitor],
    coeffs: Coefficients = None,
) -> float:
    """
    Smallest ω with (1 - ω)E_u + P <= (1 + ω)E_v for every competitor of the family.

    Raises:
        ValueError: If the family is empty or every competitor has zero energy
    """
    if not family:
        raise ValueError("omega_min needs at least one competitor")
    worst = 0.0
    usable = 0
    for competitor in family:
        d = deficit(u, competitor, region, coeffs)
        ratio = d.ratio
        if ratio is None:
            continue
        usable += 1
        worst = max(worst, ratio)
    if usable == 0:
        raise ValueError(
            "All competitors have zero energy on this cylinder; the gauge is undefined"
        )
    return worst


def bump_profile(
    grid_points: np.ndarray, frame: Frame, center: np.ndarray, scale: float
) -> np.ndarray:
    """(1 - |y - p|^2 / s^2)_+^3 in the frame's local coordinates y."""
    local = frame.to_local(grid_points)
    s = 1.0 - np.sum((local - center) ** 2, axis=-1) / scale**2
    return np.clip(s, 0.0, None) ** 3


def _bump_eps(u: ScalarField, mask: np.ndarray) -> float:
    inside = u.values[mask]
    osc = float(inside.max() - inside.min())
    return 0.1 * osc if osc > 0 else 0.1


def bump_family(
    u: ScalarField,
    region: Region,
    frame: Optional[Frame] = None,
    eps: Optional[float] = None,
    constrained: bool = True,
    scales: Sequence[float] = BUMP_SCALES,
    offsets: Sequence[float] = BUMP_OFFSETS,
) -> List[Competitor]:
    """
    Competitors u ± ε·bump for bumps supported inside the region.

    Bumps are (1 - |y - p|^2 / s^2)_+^3 with s = scale·r and p = offset·r·e_1
    in local coordinates (the frame's for elliptic regions). With
    ``constrained`` the perturbed field is clamped at zero on the thin layer.
    """
    g = u.grid
    mask = region_mask(g, region)
    if frame is None:
        frame = region.frame if isinstance(region, EllipticCylinder) else identity_frame(region.center)
    r = region.radius
    eps = _bump_eps(u, mask) if eps is None else float(eps)
    points = g.spatial_points()
    family = []
    for scale in scales:
        for offset in offsets:
            p = np.zeros(g.n)
            p[0] = offset * r
            bump = bump_profile(points, frame, p, scale * r).reshape(g.spatial_shape)
            for sign in (1.0, -1.0):
                values = np.array(u.values)
                values[mask] += (sign * eps * np.broadcast_to(bump, g.shape))[mask]
                if constrained:
                    thin = mask[..., g.thin_index]
                    layer = values[..., g.thin_index]
                    layer[thin] = np.maximum(layer[thin], 0.0)
                family.append(
                    make_competitor(
                        u, u.with_values(values), CompetitorKind.BUMP_PERTURBATION, mask, constrained
                    )
                )
    return family


@dataclass(frozen=True)
class GaugeReport:
    """Minimal gauges over a radius ladder and their fitted power law C r^alpha."""

    cylinders: Tuple[Tuple[PPoint, float], ...]
    omega_min: Tuple[float, ...]
    fitted_alpha: float
    fitted_C: float
    competitors_per_cylinder: int
    fit_residual: float = math.nan

    def __post_init__(self) -> None:
        if any(w < 0 for w in self.omega_min):
            raise ValueError("Gauge values must be nonnegative")

    @property
    def radii(self) -> Tuple[float, ...]:
        return tuple(r for _, r in self.cylinders)


FamilyBuilder = Callable[[float], Tuple[Region, List[Competitor]]]


def gauge_report(
    u: ScalarField,
    center: PPoint,
    radii: Sequence[float],
    build_family: FamilyBuilder,
    coeffs: Coefficients = None,
    threads: int = 1,
) -> GaugeReport:
    """
    omega_min at every radius and the fitted decay.

    Args:
        u: Candidate field
        center: Common center of the cylinders
        radii: At least 4 radii
        build_family: radius -> (region, competitors)
        coeffs: Coefficients of the energy
        threads: Worker threads over radii

    Returns:
        GaugeReport
    """
    radii = sorted(float(r) for r in radii)

    def one(r: float) -> Tuple[float, int]:
        region, family = build_family(r)
        omega = omega_min(u, region, family, coeffs)
        logger.info("radius %.4g: omega_min = %.4e over %d competitors", r, omega, len(family))
        return omega, len(family)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, radii))
    else:
        results = [one(r) for r in radii]
    omegas = tuple(w for w, _ in results)
    fit = fit_power_law(radii, omegas)
    return GaugeReport(
        cylinders=tuple((center, r) for r in radii),
        omega_min=omegas,
        fitted_alpha=fit.exponent,
        fitted_C=fit.prefactor,
        competitors_per_cylinder=min(count for _, count in results),
        fit_residual=fit.residual,
    )


def signorini_family(
    u: ScalarField,
    region: Region,
    coefficients: Optional[CoefficientField] = None,
    frame: Optional[Frame] = None,
    eps: Optional[float] = None,
    include_replacement: bool = True,
    settings: SolverSettings = SolverSettings(),
) -> List[Competitor]:
    """Signorini replacement plus clamped bump perturbations."""
    mask = region_mask(u.grid, region)
    family = []
    if include_replacement:
        v = signorini_replacement(
            u, region, coefficients, settings.tol, settings.psor_omega, settings.max_sweeps
        )
        family.append(make_competitor(u, v, CompetitorKind.REPLACEMENT, mask))
    family.extend(bump_family(u, region, frame=frame, eps=eps, constrained=True))
    return family


def certify_signorini(
    u: ScalarField,
    center: PPoint,
    radii: Sequence[float],
    eps: Optional[float] = None,
    include_replacement: bool = True,
    settings: SolverSettings = SolverSettings(),
    threads: int = 1,
) -> GaugeReport:
    """Gauge of u against the plain Signorini family on Q_r(center)."""

    def build(r: float) -> Tuple[Region, List[Competitor]]:
        c = Cylinder(center, r)
        return c, signorini_family(
            u, c, eps=eps, include_replacement=include_replacement, settings=settings
        )

    return gauge_report(u, center, radii, build, None, threads)


def certify_caloric(
    u: ScalarField,
    center: PPoint,
    radii: Sequence[float],
    coefficients: Optional[CoefficientField] = None,
    eps: Optional[float] = None,
    settings: SolverSettings = SolverSettings(),
    threads: int = 1,
) -> GaugeReport:
    """Almost-caloric gauge: caloric replacement and unclamped bumps, no thin constraint."""

    def build(r: float) -> Tuple[Region, List[Competitor]]:
        c = Cylinder(center, r)
        mask = region_mask(u.grid, c)
        v = caloric_replacement(
            u, c, coefficients, settings.tol, settings.psor_omega, settings.max_sweeps
        )
        family = [make_competitor(u, v, CompetitorKind.REPLACEMENT, mask, constrained=False)]
        family.extend(bump_family(u, c, eps=eps, constrained=False))
        return c, family

    return gauge_report(u, center, radii, build, coefficients, threads)


def certify_drift(
    p: float,
    n: int = 2,
    N: int = 65,
    K: int = 256,
    magnitude: float = 1.0,
    drift: str = "singular",
    radii: Optional[Sequence[float]] = None,
    r_max: float = 0.5,
    eps: Optional[float] = None,
    settings: SolverSettings = SolverSettings(),
    threads: int = 1,
) -> Tuple[GaugeReport, ScalarField]:
    """
    Gauge of the drift Signorini solution around the origin.

    Solves the Signorini problem with drift b on the full grid with boundary
    data Re((x_1 + i|x_n|)^{3/2}), then certifies the solution against the
    plain (driftless) Signorini family on thin-centered cylinders.

    Args:
        p: Integrability exponent of the drift, p > n
        n, N, K: Grid parameters
        magnitude: Drift scale
        drift: "singular" (|x|^{-n/p} e_1), "constant" (e_1) or "zero"
        radii: Radius ladder (defaults to 4 per octave in [8h, r_max])
        r_max: Largest radius of the default ladder
        eps: Fixed bump amplitude (defaults to 0.1 osc(u))
        settings: Relaxation parameters
        threads: Worker threads over radii

    Returns:
        (GaugeReport, solution field)
    """
    if not p > n:
        raise ValueError(f"Drift integrability exponent must exceed n = {n}, got p = {p}")
    grid = build_grid(n, N, K)
    data = sample_profile(grid, "signorini_three_halves")
    if drift == "singular":
        coeffs: Optional[CoefficientField] = CoefficientField.drift(grid, p, magnitude)
    elif drift == "constant":
        b = np.zeros(n)
        b[0] = magnitude
        coeffs = CoefficientField.constant(grid, np.eye(n), b)
    elif drift == "zero":
        coeffs = None
    else:
        raise ValueError(f"Unknown drift kind {drift!r}; use singular, constant or zero")
    logger.info("drift problem: p = %g, drift = %s, grid %s", p, drift, grid.shape)
    u = signorini_solve(
        SolveSpec(
            boundary_data=data,
            region=None,
            constrained=True,
            coefficients=coeffs,
            psor_omega=settings.psor_omega,
            tol=settings.tol,
            max_sweeps=settings.max_sweeps,
        )
    )
    if radii is None:
        radii = dyadic_ladder(8 * grid.h, r_max)
    center = PPoint.origin(n)
    return certify_signorini(u, center, radii, eps=eps, settings=settings, threads=threads), u


def frozen_matrix(U: ScalarField, z0: PPoint, coeffs: Coefficients) -> np.ndarray:
    """A(z0) from a coefficient field (nearest node), a constant matrix, or the identity."""
    if coeffs is None:
        return np.eye(U.grid.n)
    if isinstance(coeffs, CoefficientField):
        return coeffs.frozen_at(U.grid.nearest_node(z0))
    return np.asarray(coeffs, dtype=float)


def certify_frozen(
    U: ScalarField,
    z0: PPoint,
    radii: Sequence[float],
    coeffs: Coefficients,
    eps: Optional[float] = None,
    include_replacement: bool = True,
    settings: SolverSettings = SolverSettings(),
    threads: int = 1,
) -> GaugeReport:
    """
    Gauge of U with A frozen at z0 on the elliptic cylinders F_r(z0).

    The replacement solves with the constant matrix A(z0) on F_r(z0); bumps are
    round in the frame's local coordinates.
    """
    A0 = frozen_matrix(U, z0, coeffs)
    frame = frame_at(A0, z0)
    frozen = CoefficientField.constant(U.grid, A0)

    def build(r: float) -> Tuple[Region, List[Competitor]]:
        ec = EllipticCylinder(frame, r)
        return ec, signorini_family(
            U,
            ec,
            coefficients=frozen,
            frame=frame,
            eps=eps,
            include_replacement=include_replacement,
            settings=settings,
        )

    return gauge_report(U, z0, radii, build, A0, threads)


def certify_deskewed(
    U: ScalarField,
    z0: PPoint,
    radii: Sequence[float],
    coeffs: Coefficients,
    R: float,
    eps: Optional[float] = None,
    include_replacement: bool = True,
    settings: SolverSettings = SolverSettings(),
    threads: int = 1,
) -> GaugeReport:
    """
    Gauge of the deskewed field u_{z0} on plain cylinders Q_r(0).

    Counterpart of ``certify_frozen``: the two agree up to discretization
    when the frozen inequality transfers through the change of variables.
    """
    A0 = frozen_matrix(U, z0, coeffs)
    u = deskew(U, frame_at(A0, z0), R)
    center = PPoint.origin(U.grid.n)
    report = certify_signorini(
        u,
        center,
        radii,
        eps=eps,
        include_replacement=include_replacement,
        settings=settings,
        threads=threads,
    )
    return report
