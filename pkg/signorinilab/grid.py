"""
Space-time grid module.

Discretizes Q_1 = B_1 x (-1, 0] on a node-centered uniform grid over the box
[-1, 1]^n x [-1, 0] and exposes boolean index sets (masks) for parabolic
cylinders, their thin part, halves, and parabolic boundaries.

Array layout is row-major with time as the slowest axis:
``values[k, i_1, ..., i_n]`` lives at ``(x_1, ..., x_n, t) = (axis[i_1], ...,
axis[i_n], times[k])``. The thin space {x_n = 0} is the middle layer of the
last spatial axis.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy import ndimage

# Slack for floating point membership tests on grid coordinates
EPS = 1e-12


class Domain(str, Enum):
    """Spatial cross-section of the computational domain."""

    BOX = "box"
    BALL = "ball"


@dataclass(frozen=True)
class PPoint:
    """A space-time point z = (x, t)."""

    x: Tuple[float, ...]
    t: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "t", float(self.t))
        if not all(math.isfinite(v) for v in self.x) or not math.isfinite(self.t):
            raise ValueError(f"Space-time point has non-finite coordinates: {self}")

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def origin(cls, n: int, t: float = 0.0) -> "PPoint":
        """The point (0, ..., 0, t); with t = 0 this is the top center of Q_1."""
        return cls(x=(0.0,) * n, t=t)


@dataclass(frozen=True)
class Cylinder:
    """Parabolic cylinder Q_r(z0) = B_r(x0) x (t0 - r^2, t0]."""

    center: PPoint
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError(
                f"Cylinder radius must be positive, got {self.radius}.\n"
                "Example: Cylinder(PPoint.origin(2), 0.25)"
            )

    @property
    def bottom(self) -> float:
        return self.center.t - self.radius**2


@dataclass(frozen=True)
class Grid:
    """Uniform node-centered grid over [-w, w]^n x [-T, 0].

    ``build_grid`` produces the unit configuration w = T = 1; scaled grids
    (w = R, T = R^2) are produced by deskewing.
    """

    n: int
    nodes_per_axis: int
    time_steps: int
    half_width: float = 1.0
    duration: float = 1.0
    domain: Domain = field(default=Domain.BOX)

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.nodes_per_axis - 1)

    @property
    def tau(self) -> float:
        return self.duration / self.time_steps

    @property
    def spatial_shape(self) -> Tuple[int, ...]:
        return (self.nodes_per_axis,) * self.n

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.time_steps + 1,) + self.spatial_shape

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def thin_index(self) -> int:
        """Index of the thin layer {x_n = 0} along the last spatial axis."""
        return (self.nodes_per_axis - 1) // 2

    @property
    def cell_volume(self) -> float:
        """Space-time measure attached to one node: h^n * tau."""
        return self.h**self.n * self.tau

    @cached_property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.nodes_per_axis)

    @cached_property
    def times(self) -> np.ndarray:
        return np.linspace(-self.duration, 0.0, self.time_steps + 1)

    def broadcast_coordinates(self) -> Tuple[np.ndarray, ...]:
        """Return (t, x_1, ..., x_n) arrays that broadcast to ``shape``."""
        ndim = self.n + 1
        t = self.times.reshape((-1,) + (1,) * self.n)
        xs = []
        for i in range(self.n):
            shape = [1] * ndim
            shape[i + 1] = self.nodes_per_axis
            xs.append(self.axis.reshape(shape))
        return (t, *xs)

    def spatial_points(self) -> np.ndarray:
        """All spatial node coordinates as an array of shape (N^n, n)."""
        mesh = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def squared_distance(self, x0: Tuple[float, ...]) -> np.ndarray:
        """|x - x0|^2 over the spatial nodes (shape ``spatial_shape``)."""
        _, *xs = self.broadcast_coordinates()
        total = np.zeros(self.spatial_shape)
        for xi, ci in zip(xs, x0):
            total = total + (xi[0] - ci) ** 2
        return total

    def thin_layer(self) -> np.ndarray:
        """Boolean mask (shape ``shape``) of the thin layer {x_n = 0}."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[(Ellipsis, self.thin_index)] = True
        return mask

    def nearest_time_index(self, t: float) -> int:
        return int(np.clip(round((t + self.duration) / self.tau), 0, self.time_steps))

    def nearest_node(self, point: PPoint) -> Tuple[int, ...]:
        """Grid index (k, i_1, ..., i_n) closest to a space-time point."""
        spatial = tuple(
            int(np.clip(round((xi + self.half_width) / self.h), 0, self.nodes_per_axis - 1))
            for xi in point.x
        )
        return (self.nearest_time_index(point.t),) + spatial

    def full_interior_mask(self) -> np.ndarray:
        """Unknown nodes of a full-grid solve: all layers after the first,
        spatial nodes off the box faces (inside the unit ball for ``Domain.BALL``)."""
        mask = np.zeros(self.shape, dtype=bool)
        inner = (slice(1, None),) + (slice(1, -1),) * self.n
        mask[inner] = True
        if self.domain == Domain.BALL:
            ball = self.squared_distance((0.0,) * self.n) < self.half_width**2 * (1 - EPS)
            mask &= ball[None, ...]
        return mask


def build_grid(
    n: int,
    N: int,
    K: int,
    half_width: float = 1.0,
    duration: float = 1.0,
    domain: Domain = Domain.BOX,
) -> Grid:
    """
    Build a uniform space-time grid.

    Args:
        n: Spatial dimension (>= 2)
        N: Nodes per spatial axis (odd, >= 5)
        K: Number of time steps (>= 2); the grid has K + 1 time layers
        half_width: Half side of the spatial box
        duration: Length of the time interval [-duration, 0]
        domain: Spatial cross-section used for full-grid solves

    Returns:
        The Grid

    Raises:
        ValueError: If the parameters violate the grid invariants
    """
    if n < 2:
        raise ValueError(
            f"Spatial dimension must be at least 2, got n = {n}.\n"
            "The thin space {x_n = 0} needs a tangential direction."
        )
    if N < 5 or N % 2 == 0:
        raise ValueError(
            f"Nodes per axis must be an odd integer >= 5, got N = {N}.\n"
            "With even N the thin space x_n = 0 falls between grid layers.\n"
            "Example: N = 65 gives h = 1/32 and the thin layer at index 32."
        )
    if K < 2:
        raise ValueError(f"Need at least 2 time steps, got K = {K}.")
    if not (half_width > 0 and duration > 0):
        raise ValueError("Grid extents must be positive.")
    return Grid(
        n=n,
        nodes_per_axis=N,
        time_steps=K,
        half_width=float(half_width),
        duration=float(duration),
        domain=Domain(domain),
    )


def parabolic_distance(a: PPoint, b: PPoint) -> float:
    """Parabolic distance (|x_a - x_b|^2 + |t_a - t_b|)^(1/2)."""
    if a.n != b.n:
        raise ValueError(f"Dimension mismatch: {a.n} vs {b.n}")
    spatial = sum((p - q) ** 2 for p, q in zip(a.x, b.x))
    return math.sqrt(spatial + abs(a.t - b.t))


def time_window(g: Grid, c: Cylinder) -> np.ndarray:
    """Time layers with t0 - r^2 < t <= t0 (up to EPS slack)."""
    t0 = c.center.t
    scale = max(1.0, abs(t0), c.radius**2)
    return (g.times > c.bottom + EPS * scale) & (g.times <= t0 + EPS * scale)


def cylinder_mask(g: Grid, c: Cylinder) -> np.ndarray:
    """Mask of Q_r(z0) without the emptiness check."""
    if c.center.n != g.n:
        raise ValueError(
            f"Cylinder center has {c.center.n} spatial coordinates, grid has n = {g.n}"
        )
    ball = g.squared_distance(c.center.x) < c.radius**2 * (1 - EPS)
    window = time_window(g, c)
    return window.reshape((-1,) + (1,) * g.n) & ball[None, ...]


def cylinder_nodes(g: Grid, c: Cylinder) -> np.ndarray:
    """
    Grid nodes of Q_r(z0): |x - x0| < r and t0 - r^2 < t <= t0.

    Args:
        g: The grid
        c: The cylinder

    Returns:
        Boolean mask of shape ``g.shape``

    Raises:
        ValueError: If no grid node lies in the cylinder
    """
    mask = cylinder_mask(g, c)
    if not mask.any():
        raise ValueError(
            f"Cylinder Q_{c.radius:g} centered at x = {c.center.x}, t = {c.center.t:g} "
            "contains no grid node.\n"
            f"Grid spacing is h = {g.h:g}, tau = {g.tau:g}; use a larger radius or "
            "move the center inside [-1, 1]^n x [-1, 0]."
        )
    return mask


def thin_nodes(g: Grid, c: Cylinder) -> np.ndarray:
    """Q'_r(z0): cylinder nodes on the thin layer."""
    return cylinder_nodes(g, c) & g.thin_layer()


def upper_nodes(g: Grid, c: Cylinder) -> np.ndarray:
    """Q_r^+(z0): cylinder nodes with x_n > 0."""
    mask = cylinder_nodes(g, c).copy()
    mask[(Ellipsis, slice(0, g.thin_index + 1))] = False
    return mask


def lower_nodes(g: Grid, c: Cylinder) -> np.ndarray:
    """Q_r^-(z0): cylinder nodes with x_n < 0."""
    mask = cylinder_nodes(g, c).copy()
    mask[(Ellipsis, slice(g.thin_index, None))] = False
    return mask


def parabolic_boundary_mask(mask: np.ndarray) -> np.ndarray:
    """
    Discrete parabolic boundary of a region mask.

    The lateral part is the ring of nodes outside the region but coupled to it
    by the solver stencil within the same time layer; the bottom part is the
    layer of nodes directly below region nodes that are not in the region.
    """
    n = mask.ndim - 1
    structure = np.ones((1,) + (3,) * n, dtype=bool)
    ring = ndimage.binary_dilation(mask, structure=structure) & ~mask
    below = np.zeros_like(mask)
    below[:-1] = mask[1:]
    return ring | (below & ~mask)


def parabolic_boundary_nodes(g: Grid, c: Cylinder) -> np.ndarray:
    """Discrete ∂_p Q_r(z0): lateral ring plus bottom layer."""
    return parabolic_boundary_mask(cylinder_nodes(g, c))


def require_interior(g: Grid, mask: np.ndarray) -> None:
    """
    Check that a region and its parabolic boundary fit inside the grid.

    Raises:
        ValueError: If the region touches the box faces or the first time layer
    """
    if mask.shape != g.shape:
        raise ValueError(f"Mask shape {mask.shape} does not match grid shape {g.shape}")
    if not mask.any():
        raise ValueError("Region contains no grid node.")
    if mask[0].any():
        raise ValueError(
            "Region reaches the first time layer; its bottom boundary would fall "
            "outside the grid.\nUse an earlier-starting grid or a smaller radius."
        )
    for axis in range(1, g.n + 1):
        lo = np.take(mask, 0, axis=axis)
        hi = np.take(mask, g.nodes_per_axis - 1, axis=axis)
        if lo.any() or hi.any():
            raise ValueError(
                "Region touches the spatial box faces; its lateral boundary would "
                "fall outside the grid.\nUse a smaller radius or move the center inward."
            )
