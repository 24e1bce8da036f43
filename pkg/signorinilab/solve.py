"""
Solver module.

Implicit Euler time stepping for the heat equation and the parabolic
Signorini problem with zero thin obstacle, with optional variable
coefficients A(z) and drift b(z). Each time step is solved by multicolor
(projected) successive over-relaxation; the projection clamps thin-layer
values at zero.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from signorinilab.field import ScalarField, stiffness_matrix, thin_normal_derivatives
from signorinilab.geometry import EllipticCylinder, elliptic_cylinder_nodes
from signorinilab.grid import (
    Cylinder,
    Grid,
    cylinder_nodes,
    parabolic_boundary_mask,
    require_interior,
)

logger = logging.getLogger(__name__)

Region = Union[None, Cylinder, EllipticCylinder]


class SolverConvergenceError(RuntimeError):
    """Relaxation did not reach the tolerance within the sweep budget."""

    def __init__(self, residual: float, time_index: int, sweeps: int) -> None:
        super().__init__(
            f"Relaxation did not converge at time layer {time_index}: residual "
            f"{residual:.3e} after {sweeps} sweeps.\n"
            "Increase max_sweeps, loosen tol, or check the relaxation factor."
        )
        self.residual = residual
        self.time_index = time_index
        self.sweeps = sweeps


class ConstraintViolationError(ValueError):
    """Boundary data is negative on the thin part of the parabolic boundary."""

    def __init__(self, node: Tuple[int, ...], value: float) -> None:
        super().__init__(
            f"Boundary data is negative on the thin space at node {node}: {value:.3e}.\n"
            "Signorini data must satisfy u >= 0 on the thin part of the parabolic "
            "boundary."
        )
        self.node = node
        self.value = value


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Per-node symmetric matrix A(z) and drift b(z).

    ``A`` has shape grid.shape + (n, n), ``b`` has shape grid.shape + (n,).
    """

    grid: Grid
    A: np.ndarray
    b: np.ndarray
    alpha: float = 1.0
    lam: float = 1.0
    Lam: float = 1.0
    time_independent: bool = field(default=False)

    def __post_init__(self) -> None:
        g = self.grid
        A = np.array(np.broadcast_to(self.A, g.shape + (g.n, g.n)), dtype=float)
        b = np.array(np.broadcast_to(self.b, g.shape + (g.n,)), dtype=float)
        if not np.allclose(A, np.swapaxes(A, -1, -2), atol=1e-12):
            raise ValueError("Coefficient matrix A(z) is not symmetric at every node")
        if not np.all(np.isfinite(b)):
            raise ValueError("Drift b(z) has non-finite entries")
        if not (0 < self.lam <= 1 <= self.Lam):
            raise ValueError(
                f"Ellipticity bounds must satisfy 0 < lambda <= 1 <= Lambda, got "
                f"lambda = {self.lam}, Lambda = {self.Lam}"
            )
        if not 0 < self.alpha <= 1:
            raise ValueError(f"Hölder exponent must lie in (0, 1], got {self.alpha}")
        eig = np.linalg.eigvalsh(A.reshape(-1, g.n, g.n))
        slack = 1e-12
        if eig.min() < self.lam - slack or eig.max() > self.Lam + slack:
            raise ValueError(
                f"Coefficient eigenvalues span [{eig.min():.4g}, {eig.max():.4g}], "
                f"outside the ellipticity bounds [{self.lam}, {self.Lam}]"
            )
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(
            self, "time_independent", bool(np.all(A == A[:1]) and np.all(b == b[:1]))
        )

    @classmethod
    def identity(cls, grid: Grid) -> "CoefficientField":
        return cls(grid, np.eye(grid.n), np.zeros(grid.n))

    @classmethod
    def constant(
        cls, grid: Grid, matrix: np.ndarray, drift: Optional[np.ndarray] = None
    ) -> "CoefficientField":
        matrix = np.asarray(matrix, dtype=float)
        eig = np.linalg.eigvalsh(matrix)
        return cls(
            grid,
            matrix,
            np.zeros(grid.n) if drift is None else np.asarray(drift, dtype=float),
            lam=min(1.0, float(eig.min())),
            Lam=max(1.0, float(eig.max())),
        )

    @classmethod
    def holder(
        cls, grid: Grid, alpha: float, amplitude: float = 0.3, seed: int = 0
    ) -> "CoefficientField":
        """Synthetic H^{α,α/2} field A(z) = I + amplitude·(|x|^2 + |t|)^{α/2}·S.

        S is a random symmetric matrix with spectral norm 1 drawn from ``seed``.
        """
        if not 0 < alpha < 1:
            raise ValueError(f"Hölder exponent must lie in (0, 1), got {alpha}")
        if not 0 <= amplitude < 0.5:
            raise ValueError("Amplitude must lie in [0, 0.5) to keep A elliptic")
        rng = np.random.default_rng(seed)
        S = rng.standard_normal((grid.n, grid.n))
        S = S + S.T
        S /= np.linalg.norm(S, 2)
        t, *xs = grid.broadcast_coordinates()
        r2 = sum(x**2 for x in xs) + np.abs(t)
        weight = np.broadcast_to(amplitude * r2 ** (alpha / 2), grid.shape)
        A = np.eye(grid.n) + weight[..., None, None] * S
        # |S| = 1, so the eigenvalues stay within 1 ± max(weight)
        bound = float(weight.max())
        if bound >= 1:
            raise ValueError(
                f"Amplitude {amplitude} is too large for this grid: A(z) loses "
                "positive definiteness at the far corners"
            )
        return cls(grid, A, np.zeros(grid.n), alpha=alpha, lam=1 - bound, Lam=1 + bound)

    @classmethod
    def drift(
        cls,
        grid: Grid,
        p: float,
        magnitude: float = 1.0,
        matrix: Optional[np.ndarray] = None,
    ) -> "CoefficientField":
        """Synthetic drift b(x) = magnitude·|x|^{-n/p}·e_1, truncated at |x| = h/2.

        The cross-sections are bounded in L^q for every q < p and the singular
        profile is the one saturating the L^p scaling.
        """
        if not p > grid.n:
            raise ValueError(
                f"Drift integrability exponent must exceed n = {grid.n}, got p = {p}"
            )
        radius = np.sqrt(grid.squared_distance((0.0,) * grid.n))
        radius = np.maximum(radius, grid.h / 2)
        profile = magnitude * radius ** (-grid.n / p)
        b = np.zeros(grid.shape + (grid.n,))
        b[..., 0] = profile[None, ...]
        base = cls.identity(grid) if matrix is None else cls.constant(grid, matrix)
        return cls(grid, base.A, b, alpha=base.alpha, lam=base.lam, Lam=base.Lam)

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.A == np.eye(self.grid.n)))

    @property
    def has_drift(self) -> bool:
        return bool(np.any(self.b))

    def frozen_at(self, node: Tuple[int, ...]) -> np.ndarray:
        """A(z0) at a grid index (k, i_1, ..., i_n)."""
        return np.array(self.A[node])


@dataclass(frozen=True)
class SolverSettings:
    """Relaxation parameters shared by every solve of an experiment."""

    tol: float = 1e-10
    psor_omega: float = 1.5
    max_sweeps: int = 20000


@dataclass(frozen=True, eq=False)
class SolveSpec:
    """Dirichlet problem on a region with data on its parabolic boundary.

    Nodes outside the region keep the values of ``boundary_data``; only the
    region's nodes are solved for.
    """

    boundary_data: ScalarField
    region: Region = None
    constrained: bool = False
    coefficients: Optional[CoefficientField] = None
    psor_omega: float = 1.5
    tol: float = 1e-10
    max_sweeps: int = 20000

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ValueError(f"Solver tolerance must be positive, got {self.tol}")
        if not 0 < self.psor_omega < 2:
            raise ValueError(
                f"Relaxation factor must lie in (0, 2), got {self.psor_omega}"
            )
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.coefficients is not None and self.coefficients.grid != self.boundary_data.grid:
            raise ValueError("Coefficient field and boundary data live on different grids")


def region_mask(grid: Grid, region: Region) -> np.ndarray:
    """Unknown nodes of a solve on ``region`` (the full interior for None)."""
    if region is None:
        return grid.full_interior_mask()
    if isinstance(region, EllipticCylinder):
        mask = elliptic_cylinder_nodes(grid, region)
    else:
        mask = cylinder_nodes(grid, region)
    require_interior(grid, mask)
    return mask


def drift_matrix(grid: Grid, b_layer: np.ndarray) -> sparse.csr_matrix:
    """Centered-difference operator u -> ⟨b, ∇u⟩ for one time layer (zero rows on the faces)."""
    n, N = grid.n, grid.nodes_per_axis
    shape = (N,) * n
    size = N**n
    index = np.arange(size).reshape(shape)
    total = sparse.csr_matrix((size, size))
    for axis in range(n):
        inner = [slice(None)] * n
        inner[axis] = slice(1, -1)
        rows = index[tuple(inner)].ravel()
        plus = np.roll(index, -1, axis=axis)[tuple(inner)].ravel()
        minus = np.roll(index, 1, axis=axis)[tuple(inner)].ravel()
        coef = b_layer[..., axis].ravel()[rows] / (2 * grid.h)
        total = total + sparse.csr_matrix(
            (np.concatenate([coef, -coef]), (np.concatenate([rows, rows]), np.concatenate([plus, minus]))),
            shape=(size, size),
        )
    return total.tocsr()


def _layer_operator(grid: Grid, coeffs: Optional[CoefficientField], k: int) -> sparse.csr_matrix:
    """I/tau + K_A + B_b for time layer k."""
    size = grid.nodes_per_axis**grid.n
    if coeffs is None or coeffs.is_identity:
        K = stiffness_matrix(grid)
    else:
        K = stiffness_matrix(grid, coeffs.A[k])
    L = K + sparse.identity(size, format="csr") / grid.tau
    if coeffs is not None and coeffs.has_drift:
        L = L + drift_matrix(grid, coeffs.b[k])
    return L.tocsr()


@dataclass
class _ColoredSystem:
    """Reduced system L_II x = f split into mutually uncoupled color classes."""

    unknowns: np.ndarray
    L_rows: sparse.csr_matrix
    colors: List[Tuple[np.ndarray, sparse.csr_matrix, np.ndarray, np.ndarray]]


def _colored_system(grid: Grid, L: sparse.csr_matrix, unknowns: np.ndarray) -> _ColoredSystem:
    n = grid.n
    multi = np.unravel_index(unknowns, grid.spatial_shape)
    # Kuhn stencil offsets are ±(sum of e_i over a nonempty subset), so coloring
    # by the index sum modulo n + 1 leaves each class uncoupled.
    color = np.sum(np.stack(multi), axis=0) % (n + 1)
    thin = multi[-1] == grid.thin_index
    L_rows = L[unknowns]
    L_II = L_rows[:, unknowns].tocsr()
    diag = L_II.diagonal()
    classes = []
    for c in range(n + 1):
        sel = np.flatnonzero(color == c)
        if sel.size:
            classes.append((sel, L_II[sel].tocsr(), diag[sel], thin[sel]))
    return _ColoredSystem(unknowns=unknowns, L_rows=L_rows, colors=classes)


def _relax(
    system: _ColoredSystem,
    f: np.ndarray,
    x: np.ndarray,
    omega: float,
    constrained: bool,
    tol: float,
    max_sweeps: int,
    time_index: int,
) -> Tuple[np.ndarray, int]:
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        residual = 0.0
        for sel, L_c, d_c, thin_c in system.colors:
            current = x[sel]
            update = current + omega * (f[sel] - L_c @ x) / d_c
            if constrained:
                update[thin_c] = np.maximum(update[thin_c], 0.0)
            residual = max(residual, float(np.max(np.abs(update - current))))
            x[sel] = update
        if residual <= tol:
            return x, sweep
    raise SolverConvergenceError(residual, time_index, max_sweeps)


def _check_thin_data(data: ScalarField, mask: np.ndarray, tol: float) -> None:
    g = data.grid
    boundary = parabolic_boundary_mask(mask) & g.thin_layer()
    values = np.where(boundary, data.values, 0.0)
    worst = np.unravel_index(np.argmin(values), g.shape)
    if values[worst] < -tol:
        raise ConstraintViolationError(tuple(int(i) for i in worst), float(values[worst]))


def _march(spec: SolveSpec) -> ScalarField:
    data = spec.boundary_data
    g = data.grid
    mask = region_mask(g, spec.region)
    coeffs = spec.coefficients
    if coeffs is not None and coeffs.is_identity and not coeffs.has_drift:
        coeffs = None
    if spec.constrained:
        _check_thin_data(data, mask, spec.tol)

    u = np.array(data.values, dtype=float)
    flat = u.reshape(u.shape[0], -1)
    mask_flat = mask.reshape(mask.shape[0], -1)
    time_dependent = coeffs is not None and not coeffs.time_independent
    cache_key: Optional[Tuple[bytes, int]] = None
    system: Optional[_ColoredSystem] = None
    total_sweeps = 0

    for k in range(1, g.time_steps + 1):
        unknowns = np.flatnonzero(mask_flat[k])
        if unknowns.size == 0:
            continue
        key = (unknowns.tobytes(), k if time_dependent else -1)
        if key != cache_key:
            L = _layer_operator(g, coeffs, k)
            system = _colored_system(g, L, unknowns)
            cache_key = key
        assert system is not None
        known = flat[k].copy()
        known[unknowns] = 0.0
        f = flat[k - 1][unknowns] / g.tau - system.L_rows @ known
        x = flat[k - 1][unknowns].copy()
        if spec.constrained:
            thin = np.unravel_index(unknowns, g.spatial_shape)[-1] == g.thin_index
            x[thin] = np.maximum(x[thin], 0.0)
        x, sweeps = _relax(
            system, f, x, spec.psor_omega, spec.constrained, spec.tol, spec.max_sweeps, k
        )
        total_sweeps += sweeps
        flat[k][unknowns] = x
        logger.debug("time layer %d: %d unknowns, %d sweeps", k, unknowns.size, sweeps)

    logger.info(
        "%s solve finished: %d layers, %d sweeps in total",
        "Signorini" if spec.constrained else "heat",
        g.time_steps,
        total_sweeps,
    )
    return ScalarField(g, u)


def heat_solve(spec: SolveSpec) -> ScalarField:
    """
    Solve ∂_t u - div(A∇u) + ⟨b,∇u⟩ = 0 on the region of ``spec``.

    Args:
        spec: Solve specification with ``constrained=False``

    Returns:
        Full-grid field equal to the boundary data off the region

    Raises:
        SolverConvergenceError: If a time step fails to converge
    """
    if spec.constrained:
        raise ValueError("heat_solve expects an unconstrained SolveSpec")
    return _march(spec)


def signorini_solve(spec: SolveSpec) -> ScalarField:
    """
    Solve the parabolic Signorini problem with zero thin obstacle.

    Each implicit step is a projected relaxation: thin-layer values are clamped
    at zero after every update, which yields u >= 0, a nonnegative flux jump and
    complementarity on the thin space.

    Args:
        spec: Solve specification with ``constrained=True``

    Returns:
        Full-grid field equal to the boundary data off the region

    Raises:
        ConstraintViolationError: If the data is negative on the thin boundary
        SolverConvergenceError: If a time step fails to converge
    """
    if not spec.constrained:
        raise ValueError("signorini_solve expects a constrained SolveSpec")
    result = _march(spec)
    residuals = complementarity_residuals(result, region_mask(result.grid, spec.region))
    logger.debug("complementarity residuals: %s", residuals)
    if residuals.negativity > 10 * spec.tol:
        logger.warning("Projected solve left negative thin values: %s", residuals)
    return result


def caloric_replacement(
    u: ScalarField,
    c: Cylinder,
    coefficients: Optional[CoefficientField] = None,
    tol: float = 1e-10,
    psor_omega: float = 1.5,
    max_sweeps: int = 20000,
) -> ScalarField:
    """Caloric function in Q_r(z0) with the parabolic boundary values of u."""
    return heat_solve(
        SolveSpec(
            boundary_data=u,
            region=c,
            constrained=False,
            coefficients=coefficients,
            psor_omega=psor_omega,
            tol=tol,
            max_sweeps=max_sweeps,
        )
    )


def signorini_replacement(
    u: ScalarField,
    c: Union[Cylinder, EllipticCylinder],
    coefficients: Optional[CoefficientField] = None,
    tol: float = 1e-10,
    psor_omega: float = 1.5,
    max_sweeps: int = 20000,
) -> ScalarField:
    """Parabolic Signorini replacement of u in the cylinder (u >= 0 on its thin boundary)."""
    return signorini_solve(
        SolveSpec(
            boundary_data=u,
            region=c,
            constrained=True,
            coefficients=coefficients,
            psor_omega=psor_omega,
            tol=tol,
            max_sweeps=max_sweeps,
        )
    )


@dataclass(frozen=True)
class ComplementarityResiduals:
    """Discrete complementarity on the thin layer (maxima over the region's thin nodes)."""

    negativity: float
    flux_negativity: float
    product: float


def flux_jump(u: ScalarField) -> np.ndarray:
    """J = ∂_{x_n}u from below minus ∂_{x_n}u from above, on the thin layer."""
    below, above = thin_normal_derivatives(u)
    return below - above


def complementarity_residuals(
    u: ScalarField, mask: Optional[np.ndarray] = None
) -> ComplementarityResiduals:
    """
    Measure u >= 0, J >= 0 and u·J = 0 on the thin nodes of a region.

    Args:
        u: Signorini solution
        mask: Region mask (defaults to the full interior)

    Returns:
        The three residuals, each >= 0
    """
    g = u.grid
    if mask is None:
        mask = g.full_interior_mask()
    thin = mask[..., g.thin_index]
    if not thin.any():
        return ComplementarityResiduals(0.0, 0.0, 0.0)
    values = u.values[..., g.thin_index][thin]
    jump = flux_jump(u)[thin]
    return ComplementarityResiduals(
        negativity=float(max(0.0, -values.min())),
        flux_negativity=float(max(0.0, -jump.min())),
        product=float(np.max(np.abs(values * jump))),
    )
