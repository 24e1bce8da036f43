"""
Functionals module.

Quantities the growth estimates are stated in: the φ functional, Dirichlet
integrals, Campanato seminorms of u and of its (even-extended) gradient, the
Signorini mean selector a_{v,z0,r}, and discrete parabolic Hölder seminorms.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from signorinilab.field import (
    ScalarField,
    VectorField,
    cyl_integral,
    cyl_mean,
    dirichlet_energy,
    gradient,
    oscillation_double,
)
from signorinilab.grid import EPS, Cylinder, PPoint, cylinder_nodes, thin_nodes

__all__ = [
    "HolderEstimate",
    "PhiValue",
    "a_selector",
    "campanato_gradient",
    "dirichlet_energy",
    "dirichlet_integral",
    "even_extension",
    "holder_seminorm",
    "mean_oscillation",
    "phi",
    "signorini_morrey",
]

logger = logging.getLogger(__name__)

# Above this many same-time pairs per layer the Hölder sup is sampled
MAX_EXACT_PAIRS = 2_000_000


@dataclass(frozen=True)
class PhiValue:
    """φ_{z0}(r, u) split into its gradient and oscillation parts."""

    cylinder: Cylinder
    grad_term: float
    osc_term: float

    @property
    def total(self) -> float:
        return self.grad_term + self.osc_term


@dataclass(frozen=True)
class HolderEstimate:
    """Discrete parabolic Hölder seminorm and the exponent fitted from mean oscillation."""

    exponent_space: float
    exponent_time: float
    seminorm: float
    pairs_sampled: int
    seminorm_space: float = 0.0
    seminorm_time: float = 0.0


def dirichlet_integral(u: ScalarField, c: Cylinder) -> float:
    """∫_{Q_r} |∇u|^2 with the centered gradient."""
    return cyl_integral(gradient(u).squared_norm(), c)


def phi(u: ScalarField, c: Cylinder) -> PhiValue:
    """
    φ_{z0}(r, u) = r^{n+4} ∫_{Q_r} |∇u|^2 + ∫∫_{Q_r x Q_r} |u(z) - u(w)|^2.

    Args:
        u: The field
        c: The cylinder Q_r(z0)

    Returns:
        PhiValue with both terms
    """
    n = u.grid.n
    grad_term = c.radius ** (n + 4) * dirichlet_integral(u, c)
    osc_term = oscillation_double(u, c)
    return PhiValue(cylinder=c, grad_term=grad_term, osc_term=osc_term)


def mean_oscillation(u: ScalarField, c: Cylinder) -> float:
    """∫_{Q_r} |u - ⟨u⟩_{z0,r}|^2."""
    mask = cylinder_nodes(u.grid, c)
    vals = u.values[mask]
    deviation = vals - vals.mean()
    return u.grid.cell_volume * float(np.dot(deviation, deviation))


def even_extension(u: ScalarField) -> VectorField:
    """
    Even extension ∇̂u of the gradient from the upper half.

    Computes ∇u on x_n >= 0, one-sided from above in x_n on the thin layer,
    then reflects: ∇̂u(x', -x_n, t) = ∇u(x', x_n, t).
    """
    g = u.grid
    m = g.thin_index
    if 2 * m != g.nodes_per_axis - 1:
        raise ValueError("Even extension needs a grid symmetric about the thin layer")
    comps = np.array(gradient(u, side="above").values)
    comps[..., :m] = comps[..., : m : -1]
    return VectorField(g, comps)


def campanato_gradient(
    u: ScalarField, c: Cylinder, use_even_extension: bool = False
) -> float:
    """
    ∫_{Q_r} |G - ⟨G⟩_{z0,r}|^2 for G = ∇u or its even extension.

    Args:
        u: The field
        c: The cylinder
        use_even_extension: Reflect the upper-half gradient across the thin space

    Returns:
        The Campanato integral
    """
    G = even_extension(u) if use_even_extension else gradient(u)
    mask = cylinder_nodes(u.grid, c)
    total = 0.0
    for comp in G.values:
        vals = comp[mask]
        deviation = vals - vals.mean()
        total += float(np.dot(deviation, deviation))
    return u.grid.cell_volume * total


def a_selector(v: ScalarField, c: Cylinder, contact_tol: float = 1e-9) -> float:
    """
    a_{v,z0,r}: 0 if v touches the obstacle on Q'_r, the mean of v over Q_r otherwise.

    Raises:
        ValueError: If the cylinder has no thin-layer nodes
    """
    thin = thin_nodes(v.grid, c)
    if not thin.any():
        raise ValueError(
            f"Cylinder Q_{c.radius:g} at x = {c.center.x} has no nodes on the thin "
            "space.\nCenter the cylinder on x_n = 0."
        )
    if np.any(v.values[thin] <= contact_tol):
        return 0.0
    return cyl_mean(v, c)


def signorini_morrey(v: ScalarField, c: Cylinder, contact_tol: float = 1e-9) -> float:
    """∫_{Q_r} (r^2 |∇v|^2 + |v - a_{v,z0,r}|^2)."""
    a = a_selector(v, c, contact_tol)
    offset = v.with_values((v.values - a) ** 2)
    return c.radius**2 * dirichlet_integral(v, c) + cyl_integral(offset, c)


def _space_sup(
    points: np.ndarray,
    values: np.ndarray,
    min_sep: float,
    sigma: float,
    rng: np.random.Generator,
    max_pairs: int,
) -> Tuple[float, int]:
    m = values.size
    if m < 2:
        return 0.0, 0
    if m * (m - 1) // 2 <= max_pairs:
        dist = pdist(points)
        diff = pdist(values[:, None])
    else:
        i = rng.integers(0, m, size=max_pairs)
        j = rng.integers(0, m, size=max_pairs)
        dist = np.sqrt(np.sum((points[i] - points[j]) ** 2, axis=1))
        diff = np.abs(values[i] - values[j])
    keep = dist >= min_sep
    if not keep.any():
        return 0.0, 0
    return float(np.max(diff[keep] / dist[keep] ** sigma)), int(np.count_nonzero(keep))


def _log_slope(radii: np.ndarray, values: np.ndarray) -> float:
    slope, _ = np.polyfit(np.log(radii), np.log(values), 1)
    return float(slope)


def _centered_oscillation(u: ScalarField, center: PPoint, rho: float) -> float:
    """
    ∫_{Q_ρ(z0)} |u - u(z0)|^2 with each node weighted by the share of its
    cell inside the cylinder.

    u(z0) is the nodal value nearest the center. Bounds the mean oscillation
    about ⟨u⟩ from above and decays at the same rate for Hölder u.
    """
    g = u.grid
    w_space = np.clip((rho - np.sqrt(g.squared_distance(center.x))) / g.h + 0.5, 0.0, 1.0)
    top = np.minimum(g.times + g.tau / 2, center.t)
    bottom = np.maximum(g.times - g.tau / 2, center.t - rho**2)
    w_time = np.clip((top - bottom) / g.tau, 0.0, 1.0)
    weights = w_time.reshape((-1,) + (1,) * g.n) * w_space
    ref = u.values[g.nearest_node(center)]
    return g.cell_volume * float(np.sum(weights * (u.values - ref) ** 2))


def holder_seminorm(
    u: ScalarField,
    region: Cylinder,
    sigma: float,
    radii: Optional[Sequence[float]] = None,
    rng: Optional[np.random.Generator] = None,
    max_pairs: int = MAX_EXACT_PAIRS,
) -> HolderEstimate:
    """
    Discrete H^{σ,σ/2} seminorm of u on a cylinder and the fitted Hölder exponent.

    The seminorm is the sup of |u(x,t) - u(y,t)| / |x - y|^σ over same-time
    pairs and of |u(x,t) - u(x,s)| / |t - s|^{σ/2} over same-point pairs, with
    parabolic separation at least 2h. The exponent comes from the decay of
    ρ ↦ ∫_{Q_ρ}|u - u(z0)|^2 ~ ρ^{n+2+2σ} at the cylinder's center, an upper
    bound for the mean oscillation about ⟨u⟩ with the same Campanato rate.

    Args:
        u: The field
        region: Cylinder whose nodes are examined
        sigma: Exponent of the seminorm, in (0, 1]
        radii: Radii for the exponent fit (defaults to about 4 per octave from 8h to r)
        rng: Generator used when the pair count forces sampling
        max_pairs: Per-layer pair count above which pairs are sampled

    Returns:
        HolderEstimate

    Raises:
        ValueError: If sigma is out of range or the region is too small
    """
    if not 0 < sigma <= 1:
        raise ValueError(f"Hölder exponent must lie in (0, 1], got {sigma}")
    g = u.grid
    rng = np.random.default_rng(0) if rng is None else rng
    mask = cylinder_nodes(g, region)
    min_sep = 2 * g.h * (1 - EPS)

    coords = g.spatial_points()
    space_sup, space_pairs = 0.0, 0
    layers = np.flatnonzero(mask.reshape(mask.shape[0], -1).any(axis=1))
    for k in layers:
        sel = mask[k].ravel()
        sup, count = _space_sup(
            coords[sel], u.values[k].ravel()[sel], min_sep, sigma, rng, max_pairs
        )
        space_sup = max(space_sup, sup)
        space_pairs += count
    if space_pairs < 3:
        raise ValueError(
            f"Region Q_{region.radius:g} is too small for a Hölder estimate: "
            f"{space_pairs} pairs at separation >= 2h.\nUse a radius of a few grid spacings."
        )

    time_sup, time_pairs = 0.0, 0
    for a_idx, k1 in enumerate(layers):
        for k2 in layers[a_idx + 1 :]:
            dt = (k2 - k1) * g.tau
            if math.sqrt(dt) < min_sep:
                continue
            both = mask[k1] & mask[k2]
            if not both.any():
                continue
            diff = np.abs(u.values[k2][both] - u.values[k1][both])
            time_sup = max(time_sup, float(diff.max()) / dt ** (sigma / 2))
            time_pairs += int(np.count_nonzero(both))

    if radii is None:
        r_min = 8 * g.h
        if region.radius <= r_min * (1 + EPS):
            raise ValueError(
                f"Region Q_{region.radius:g} is too small for an exponent fit: "
                f"the radius must exceed 8h = {r_min:g}.\nRefine the grid or widen the region."
            )
        count = max(int(math.ceil(4 * math.log2(region.radius / r_min) - EPS)), 1)
        radii = np.geomspace(r_min, region.radius, count + 1)
    radii = np.asarray(radii, dtype=float)
    values = np.array([_centered_oscillation(u, region.center, r) for r in radii])
    inside = u.values[mask]
    flat = np.ptp(inside) <= 1e-12 * max(1.0, float(np.max(np.abs(inside))))
    if flat or np.any(values <= 0):
        # constant near the center: maximal exponent by convention
        exponent = 1.0
    else:
        s = _log_slope(radii, values)
        exponent = float(np.clip((s - g.n - 2) / 2, 0.0, 1.0))
    logger.debug(
        "Hölder estimate at %s: exponent %.3f, space sup %.3e, time sup %.3e",
        region.center,
        exponent,
        space_sup,
        time_sup,
    )
    return HolderEstimate(
        exponent_space=exponent,
        exponent_time=exponent / 2,
        seminorm=max(space_sup, time_sup),
        pairs_sampled=space_pairs + time_pairs,
        seminorm_space=space_sup,
        seminorm_time=time_sup,
    )
