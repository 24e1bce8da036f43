"""
Field module.

Scalar and vector fields on a Grid, discrete derivatives, cylinder
quadrature, the oscillation double integral, and the Kuhn-simplex energy form
shared with the solver.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from signorinilab.grid import Cylinder, Grid, cylinder_nodes

Number = Union[int, float]


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.float64, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal values of a scalar function over a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = _frozen(self.values)
        if values.shape != self.grid.shape:
            raise ValueError(
                f"Field has shape {values.shape}, grid expects {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(f"Field has a non-finite value at node {tuple(bad)}")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(
        cls, grid: Grid, fn: Callable[..., np.ndarray]
    ) -> "ScalarField":
        """Sample ``fn(t, x_1, ..., x_n)`` (broadcasting arrays) on the grid."""
        coords = grid.broadcast_coordinates()
        return cls(grid, np.broadcast_to(fn(*coords), grid.shape))

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values)

    def _other(self, other: Union["ScalarField", Number]) -> Union[np.ndarray, float]:
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ValueError("Fields live on different grids")
            return other.values
        return float(other)

    def __add__(self, other: Union["ScalarField", Number]) -> "ScalarField":
        return self.with_values(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other: Union["ScalarField", Number]) -> "ScalarField":
        return self.with_values(self.values - self._other(other))

    def __mul__(self, scalar: Number) -> "ScalarField":
        return self.with_values(self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return self.with_values(-self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Nodal values of an R^n-valued function; ``values`` has shape (n,) + grid.shape."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = _frozen(self.values)
        expected = (self.grid.n,) + self.grid.shape
        if values.shape != expected:
            raise ValueError(f"Vector field has shape {values.shape}, expected {expected}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Vector field has non-finite entries")
        object.__setattr__(self, "values", values)

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i])

    def squared_norm(self) -> ScalarField:
        return ScalarField(self.grid, np.sum(self.values**2, axis=0))


def gradient(f: ScalarField, side: Optional[str] = None) -> VectorField:
    """
    Spatial gradient by finite differences.

    Centered differences in the interior, first-order one-sided differences on
    the box faces. On the thin layer the x_n-derivative is the centered value,
    i.e. the average of the two one-sided derivatives, unless ``side`` selects
    one of them.

    Args:
        f: The scalar field
        side: None, "above" or "below" for the x_n-derivative on the thin layer

    Returns:
        The gradient as a VectorField
    """
    g = f.grid
    if g.nodes_per_axis < 3:
        raise ValueError("Gradient needs at least 3 nodes per axis")
    comps = [np.gradient(f.values, g.h, axis=axis) for axis in range(1, g.n + 1)]
    if side is not None:
        below, above = thin_normal_derivatives(f)
        if side == "above":
            comps[-1][..., g.thin_index] = above
        elif side == "below":
            comps[-1][..., g.thin_index] = below
        else:
            raise ValueError(f"side must be 'above', 'below' or None, got {side!r}")
    return VectorField(g, np.stack(comps))


def thin_normal_derivatives(f: ScalarField) -> Tuple[np.ndarray, np.ndarray]:
    """One-sided x_n-derivatives on the thin layer: (from below, from above)."""
    g = f.grid
    m = g.thin_index
    v = f.values
    below = (v[..., m] - v[..., m - 1]) / g.h
    above = (v[..., m + 1] - v[..., m]) / g.h
    return below, above


def time_derivative(f: ScalarField) -> ScalarField:
    """Backward difference in time; the first layer copies the second."""
    g = f.grid
    d = np.empty(g.shape)
    d[1:] = np.diff(f.values, axis=0) / g.tau
    d[0] = d[1]
    return ScalarField(g, d)


def region_measure(grid: Grid, mask: np.ndarray) -> float:
    return grid.cell_volume * int(np.count_nonzero(mask))


def region_integral(values: np.ndarray, grid: Grid, mask: np.ndarray) -> float:
    """Riemann sum h^n * tau * sum(values) over the masked nodes."""
    if not mask.any():
        raise ValueError("Cannot integrate over an empty region")
    return grid.cell_volume * float(np.sum(values[mask]))


def cyl_integral(f: ScalarField, c: Cylinder) -> float:
    """Riemann sum of f over the nodes of Q_r(z0)."""
    return region_integral(f.values, f.grid, cylinder_nodes(f.grid, c))


def cyl_measure(grid: Grid, c: Cylinder) -> float:
    return region_measure(grid, cylinder_nodes(grid, c))


def cyl_mean(f: ScalarField, c: Cylinder) -> float:
    """Mean ⟨f⟩_{z0,r} of f over Q_r(z0)."""
    mask = cylinder_nodes(f.grid, c)
    return float(np.mean(f.values[mask]))


def region_oscillation_double(values: np.ndarray, grid: Grid, mask: np.ndarray) -> float:
    """Double integral of |f(z) - f(w)|^2 over region x region, in linear time.

    Uses ∫∫|f(z) - f(w)|^2 = 2 |Q| ∫ |f - ⟨f⟩|^2.
    """
    if not mask.any():
        raise ValueError("Cannot integrate over an empty region")
    vals = values[mask]
    deviation = vals - vals.mean()
    measure = grid.cell_volume * vals.size
    return 2.0 * measure * grid.cell_volume * float(np.dot(deviation, deviation))


def oscillation_double(f: ScalarField, c: Cylinder) -> float:
    """∫_{Q_r x Q_r} |f(z) - f(w)|^2 dz dw."""
    return region_oscillation_double(f.values, f.grid, cylinder_nodes(f.grid, c))


# Kuhn-simplex energy form
#
# Every grid cell is split into n! simplices, one per permutation of the axes.
# On the simplex for permutation p the linear interpolant has gradient
# component p[j] equal to the difference along the j-th edge of the path
# corner -> corner + e_p[0] -> ... For A = I the resulting form is the
# standard (2n+1)-point Laplacian.


@lru_cache(maxsize=8)
def _simplex_differences(n: int, N: int) -> Tuple[Tuple[sparse.csr_matrix, ...], ...]:
    shape = (N,) * n
    corners = np.indices((N - 1,) * n).reshape(n, -1).T
    ncells = corners.shape[0]
    rows = np.concatenate([np.arange(ncells), np.arange(ncells)])
    data = np.concatenate([np.ones(ncells), -np.ones(ncells)])
    simplices = []
    for perm in itertools.permutations(range(n)):
        ops = [None] * n
        vertex = corners.copy()
        for axis in perm:
            nxt = vertex.copy()
            nxt[:, axis] += 1
            head = np.ravel_multi_index(tuple(nxt.T), shape)
            tail = np.ravel_multi_index(tuple(vertex.T), shape)
            ops[axis] = sparse.csr_matrix(
                (data, (rows, np.concatenate([head, tail]))), shape=(ncells, N**n)
            )
            vertex = nxt
        simplices.append(tuple(ops))
    return tuple(simplices)


def _cell_average(a: np.ndarray, n: int) -> np.ndarray:
    """Average nodal data (shape (N,)*n + tail) over the 2^n corners of each cell."""
    total = np.zeros(tuple(s - 1 for s in a.shape[:n]) + a.shape[n:])
    for offsets in itertools.product((0, 1), repeat=n):
        index = tuple(slice(o, o + a.shape[i] - 1) for i, o in enumerate(offsets))
        total = total + a[index]
    return (total / 2**n).reshape((-1,) + a.shape[n:])


def cells_touching(mask_layer: np.ndarray) -> np.ndarray:
    """Flat mask of cells having at least one corner in ``mask_layer``."""
    n = mask_layer.ndim
    touch = np.zeros(tuple(s - 1 for s in mask_layer.shape), dtype=bool)
    for offsets in itertools.product((0, 1), repeat=n):
        index = tuple(slice(o, o + mask_layer.shape[i] - 1) for i, o in enumerate(offsets))
        touch |= mask_layer[index]
    return touch.ravel()


def _cell_coefficients(grid: Grid, A_layer: np.ndarray) -> np.ndarray:
    n = grid.n
    ncells = (grid.nodes_per_axis - 1) ** n
    if A_layer.ndim == 2:
        return np.broadcast_to(A_layer, (ncells, n, n))
    return _cell_average(A_layer, n)


@lru_cache(maxsize=8)
def _identity_stiffness(n: int, N: int, h: float) -> sparse.csr_matrix:
    scale = 1.0 / (math.factorial(n) * h * h)
    total = None
    for ops in _simplex_differences(n, N):
        for D in ops:
            term = D.T @ D
            total = term if total is None else total + term
    return (total * scale).tocsr()


def stiffness_matrix(grid: Grid, A_layer: Optional[np.ndarray] = None) -> sparse.csr_matrix:
    """
    Stiffness matrix of the discrete form ∫⟨A∇u,∇u⟩ on one time layer.

    Normalized by h^n so that A = I gives -Δ_h, the (2n+1)-point Laplacian.
    Coefficients are averaged over the corners of each cell.

    Args:
        grid: The grid
        A_layer: None for the identity, an (n, n) constant matrix, or nodal
            matrices of shape (N,)*n + (n, n)

    Returns:
        Sparse (N^n, N^n) matrix
    """
    n = grid.n
    if A_layer is None:
        return _identity_stiffness(n, grid.nodes_per_axis, grid.h)
    coeffs = _cell_coefficients(grid, np.asarray(A_layer, dtype=float))
    scale = 1.0 / (math.factorial(n) * grid.h**2)
    total = sparse.csr_matrix((grid.nodes_per_axis**n,) * 2)
    for ops in _simplex_differences(n, grid.nodes_per_axis):
        for k in range(n):
            for l in range(n):
                w = coeffs[:, k, l]
                if not np.any(w):
                    continue
                total = total + ops[k].T @ sparse.diags(w) @ ops[l]
    return (total * scale).tocsr()


def cell_energy(grid: Grid, layer: np.ndarray, A_layer: Optional[np.ndarray] = None) -> np.ndarray:
    """Energy of each cell divided by h^n, for one time layer of nodal values."""
    n = grid.n
    flat = np.asarray(layer, dtype=float).ravel()
    coeffs = None if A_layer is None else _cell_coefficients(grid, np.asarray(A_layer, dtype=float))
    total = np.zeros((grid.nodes_per_axis - 1) ** n)
    for ops in _simplex_differences(n, grid.nodes_per_axis):
        d = [D @ flat for D in ops]
        if coeffs is None:
            for dk in d:
                total += dk * dk
        else:
            for k in range(n):
                for l in range(n):
                    total += coeffs[:, k, l] * d[k] * d[l]
    return total / (math.factorial(n) * grid.h**2)


def dirichlet_energy(
    f: Union[ScalarField, np.ndarray],
    mask: np.ndarray,
    A: Optional[np.ndarray] = None,
    grid: Optional[Grid] = None,
) -> float:
    """
    Discrete ∫⟨A∇f,∇f⟩ over a region, in the solver's own bilinear form.

    Sums the Kuhn-simplex energy of every cell touching the region on each time
    layer of the region, so that E(u) - E(u + ψ) = -2 B(u, ψ) - E(ψ) holds
    exactly for ψ supported in the region.

    Args:
        f: Field (or raw values together with ``grid``)
        mask: Region mask of shape grid.shape
        A: None (identity), constant (n, n), or nodal (grid.shape + (n, n))

    Returns:
        The energy
    """
    if isinstance(f, ScalarField):
        grid, values = f.grid, f.values
    else:
        if grid is None:
            raise ValueError("Raw values need an explicit grid")
        values = f
    if not mask.any():
        raise ValueError("Cannot integrate over an empty region")
    total = 0.0
    layers = np.flatnonzero(mask.reshape(mask.shape[0], -1).any(axis=1))
    for k in layers:
        if A is None:
            A_layer = None
        else:
            A_layer = A if A.ndim == 2 else A[k]
        density = cell_energy(grid, values[k], A_layer)
        total += float(np.sum(density[cells_touching(mask[k])]))
    return total * grid.h**grid.n * grid.tau
