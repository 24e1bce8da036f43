"""
Geometry module.

Frozen-coefficient coordinate changes: symmetric square roots of the
coefficient matrix, the rotation that keeps the thin space flat, ellipsoids
and elliptic cylinders, and deskewed fields on a fresh grid.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from signorinilab.field import ScalarField
from signorinilab.grid import EPS, Cylinder, Grid, PPoint, build_grid, time_window

if TYPE_CHECKING:
    from signorinilab.solve import CoefficientField

logger = logging.getLogger(__name__)


def validate_spd(A: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """
    Return A as a float array after checking symmetry and positive definiteness.

    Raises:
        ValueError: If A is not square, not symmetric, or not positive definite
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, atol=tol, rtol=0):
        raise ValueError(
            "Matrix is not symmetric.\n"
            f"Largest asymmetry: {np.max(np.abs(A - A.T)):.3e}"
        )
    smallest = float(np.linalg.eigvalsh(A).min())
    if smallest <= 0:
        raise ValueError(
            f"Matrix is not positive definite: smallest eigenvalue {smallest:.3e}"
        )
    return A


def spd_sqrt(A: np.ndarray) -> np.ndarray:
    """
    Symmetric positive definite square root by eigendecomposition.

    Args:
        A: Symmetric positive definite matrix

    Returns:
        The symmetric matrix a with a @ a = A
    """
    A = validate_spd(A)
    eigvals, eigvecs = np.linalg.eigh(A)
    root = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    return 0.5 * (root + root.T)


def align_rotation(a: np.ndarray) -> np.ndarray:
    """
    Minimal rotation O with O e_n = a e_n / |a e_n|.

    Rotates in the plane spanned by e_n and the target direction and fixes its
    orthogonal complement. Positive definiteness gives ⟨a e_n, e_n⟩ > 0, so the
    two directions are never antipodal.
    """
    a = validate_spd(a)
    n = a.shape[0]
    e = np.zeros(n)
    e[-1] = 1.0
    d = a @ e
    d = d / np.linalg.norm(d)
    c = float(d @ e)
    K = np.outer(d, e) - np.outer(e, d)
    return np.eye(n) + K + (K @ K) / (1.0 + c)


@dataclass(frozen=True, eq=False)
class Frame:
    """Deskewing frame at z0: a_bar = A(z0)^{1/2} O."""

    a: np.ndarray
    O: np.ndarray
    x0: Tuple[float, ...]
    t0: float

    @property
    def a_bar(self) -> np.ndarray:
        return self.a @ self.O

    @property
    def a_bar_inv(self) -> np.ndarray:
        return np.linalg.inv(self.a_bar)

    @property
    def det(self) -> float:
        """det a = det a_bar."""
        return float(np.linalg.det(self.a))

    @property
    def center(self) -> PPoint:
        return PPoint(self.x0, self.t0)

    def to_local(self, points: np.ndarray) -> np.ndarray:
        """T(x) = a_bar^{-1}(x - x0) for points of shape (..., n)."""
        return (np.asarray(points) - np.asarray(self.x0)) @ self.a_bar_inv.T

    def to_global(self, points: np.ndarray) -> np.ndarray:
        """T^{-1}(y) = a_bar y + x0."""
        return np.asarray(points) @ self.a_bar.T + np.asarray(self.x0)


def frame_at(A0: np.ndarray, center: PPoint) -> Frame:
    """Frame for the frozen matrix A0 = A(z0) centered at z0."""
    a = spd_sqrt(A0)
    O = align_rotation(a)
    return Frame(a=a, O=O, x0=center.x, t0=center.t)


def identity_frame(center: PPoint) -> Frame:
    n = center.n
    return Frame(a=np.eye(n), O=np.eye(n), x0=center.x, t0=center.t)


@dataclass(frozen=True, eq=False)
class EllipticCylinder:
    """F_r(z0) = E_r(z0) x (t0 - r^2, t0] with E_r(z0) = a(B_r) + x0."""

    frame: Frame
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError(f"Elliptic cylinder radius must be positive, got {self.radius}")

    @property
    def center(self) -> PPoint:
        return self.frame.center

    def as_cylinder(self) -> Cylinder:
        """The round cylinder Q_r(z0) with the same center and radius."""
        return Cylinder(self.center, self.radius)


def ellipsoid_contains(frame: Frame, radius: float, points: np.ndarray) -> np.ndarray:
    """Membership of points (shape (..., n)) in the open ellipsoid E_r(z0)."""
    local = frame.to_local(points)
    return np.sum(local**2, axis=-1) < radius**2 * (1 - EPS)


def elliptic_cylinder_mask(g: Grid, ec: EllipticCylinder) -> np.ndarray:
    """Mask of F_r(z0) without the emptiness check."""
    if len(ec.frame.x0) != g.n:
        raise ValueError(f"Frame dimension {len(ec.frame.x0)} does not match grid n = {g.n}")
    inside = ellipsoid_contains(ec.frame, ec.radius, g.spatial_points())
    window = time_window(g, ec.as_cylinder())
    return window.reshape((-1,) + (1,) * g.n) & inside.reshape(g.spatial_shape)[None, ...]


def elliptic_cylinder_nodes(g: Grid, ec: EllipticCylinder) -> np.ndarray:
    """
    Grid nodes of F_r(z0).

    Raises:
        ValueError: If no grid node lies in the elliptic cylinder
    """
    mask = elliptic_cylinder_mask(g, ec)
    if not mask.any():
        raise ValueError(
            f"Elliptic cylinder of radius {ec.radius:g} at x = {ec.frame.x0} contains "
            "no grid node."
        )
    return mask


def deskewed_grid(source: Grid, R: float) -> Grid:
    """Grid over [-R, R]^n x [-R^2, 0] with spacing no coarser than the source."""
    N = 2 * math.ceil(R / source.h - 1e-9) + 1
    K = max(2, int(round(R**2 / source.tau)))
    return build_grid(source.n, max(N, 5), K, half_width=R, duration=R**2)


def deskew(U: ScalarField, frame: Frame, R: float) -> ScalarField:
    """
    Deskewed field u(x, t) = U(a_bar x + x0, t + t0) on a fresh grid over Q_R.

    Samples U with multilinear interpolation, which is exact on affine data.

    Args:
        U: Source field
        frame: Frame at z0
        R: Radius of the target cylinder

    Returns:
        Field on a grid with half width R and duration R^2

    Raises:
        ValueError: If the image of the target grid leaves the source grid
    """
    src = U.grid
    if not R > 0:
        raise ValueError(f"Deskew radius must be positive, got {R}")
    target = deskewed_grid(src, R)
    points = target.spatial_points()
    images = frame.to_global(points)
    slack = 1e-9 * max(1.0, src.half_width)
    if np.any(np.abs(images) > src.half_width + slack):
        worst = float(np.max(np.abs(images)))
        raise ValueError(
            f"Deskewed box reaches |x| = {worst:.4g}, outside the source grid "
            f"[-{src.half_width:g}, {src.half_width:g}]^{src.n}.\n"
            "Use a smaller R or a center farther from the box faces."
        )
    times = target.times + frame.t0
    if times[0] < -src.duration - slack or times[-1] > slack:
        raise ValueError(
            f"Deskewed time window [{times[0]:.4g}, {times[-1]:.4g}] leaves the source "
            f"interval [-{src.duration:g}, 0]"
        )
    images = np.clip(images, -src.half_width, src.half_width)
    times = np.clip(times, -src.duration, 0.0)

    interpolator = RegularGridInterpolator(
        (src.times,) + (src.axis,) * src.n, U.values, method="linear"
    )
    m = points.shape[0]
    query = np.empty((times.size, m, src.n + 1))
    query[..., 0] = times[:, None]
    query[..., 1:] = images[None, :, :]
    values = interpolator(query.reshape(-1, src.n + 1)).reshape(target.shape)
    logger.debug("deskewed field onto %s grid with R = %g", target.shape, R)
    return ScalarField(target, values)


def _random_node_pairs(
    grid: Grid, samples: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    first = rng.integers(0, grid.shape, size=(samples, grid.n + 1))
    second = rng.integers(0, grid.shape, size=(samples, grid.n + 1))
    return first, second


def _node_distances(grid: Grid, first: np.ndarray, second: np.ndarray) -> np.ndarray:
    dt = (first[:, 0] - second[:, 0]) * grid.tau
    dx = (first[:, 1:] - second[:, 1:]) * grid.h
    return np.sqrt(np.sum(dx**2, axis=1) + np.abs(dt))


def frozen_coefficient_constant(
    coeffs: "CoefficientField",
    samples: int = 2000,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Empirical C_1 = (2 / lambda) [A]_alpha from random node pairs.

    The seminorm is the sampled sup of |A(z) - A(w)|_2 / d(z, w)^alpha.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    g = coeffs.grid
    first, second = _random_node_pairs(g, samples, rng)
    dist = _node_distances(g, first, second)
    keep = dist > 0
    if not keep.any():
        return 0.0
    Az = coeffs.A[tuple(first[keep].T)]
    Aw = coeffs.A[tuple(second[keep].T)]
    gaps = np.linalg.norm(Az - Aw, ord=2, axis=(1, 2))
    seminorm = float(np.max(gaps / dist[keep] ** coeffs.alpha))
    return 2.0 / coeffs.lam * seminorm


def rotation_holder_ratio(
    coeffs: "CoefficientField",
    pairs: int = 500,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Sampled sup of |O_z - O_w|_2 / d(z, w)^alpha for the minimal rotations."""
    rng = np.random.default_rng(0) if rng is None else rng
    g = coeffs.grid
    first, second = _random_node_pairs(g, pairs, rng)
    dist = _node_distances(g, first, second)
    worst = 0.0
    for z, w, d in zip(first, second, dist):
        if d == 0:
            continue
        Oz = align_rotation(spd_sqrt(coeffs.A[tuple(z)]))
        Ow = align_rotation(spd_sqrt(coeffs.A[tuple(w)]))
        worst = max(worst, float(np.linalg.norm(Oz - Ow, 2)) / d**coeffs.alpha)
    return worst
