"""
Profiles module.

Named closed-form boundary-data families. Each profile is a function of
(t, x_1, ..., x_n) on broadcasting arrays.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import math
from typing import Any, Callable, Dict

import numpy as np

from signorinilab.field import ScalarField
from signorinilab.geometry import spd_sqrt
from signorinilab.grid import Grid

Profile = Callable[..., np.ndarray]


def _zero(**_: Any) -> Profile:
    return lambda t, *xs: np.zeros(np.broadcast(t, *xs).shape)


def _linear_x1(**_: Any) -> Profile:
    return lambda t, *xs: xs[0] + 0.0 * t


def _caloric_quadratic(**_: Any) -> Profile:
    """x_1^2 + 2t."""
    return lambda t, *xs: xs[0] ** 2 + 2.0 * t


def _harmonic_saddle(**_: Any) -> Profile:
    """x_1^2 - x_2^2."""
    return lambda t, *xs: xs[0] ** 2 - xs[1] ** 2 + 0.0 * t


def _positive_caloric(shift: float = 3.0, **_: Any) -> Profile:
    """shift + x_1^2 + 2t, positive on the unit grid for shift > 2."""
    return lambda t, *xs: shift + xs[0] ** 2 + 2.0 * t


def _heat_mode(k: float = math.pi / 2, **_: Any) -> Profile:
    """exp(-k^2 t) sin(k x_1)."""
    return lambda t, *xs: np.exp(-(k**2) * t) * np.sin(k * xs[0])


def _signorini_three_halves(**_: Any) -> Profile:
    """Re((x_1 + i|x_n|)^{3/2}), time independent, exactly zero on the contact set."""

    def profile(t: np.ndarray, *xs: np.ndarray) -> np.ndarray:
        x1, xn = np.broadcast_arrays(xs[0], xs[-1])
        values = np.real(np.power(x1 + 1j * np.abs(xn), 1.5))
        values = np.where((xn == 0) & (x1 <= 0), 0.0, values)
        return values + 0.0 * t

    return profile


def _sqrt_thin(**_: Any) -> Profile:
    """|x_n|^{1/2}."""
    return lambda t, *xs: np.sqrt(np.abs(xs[-1])) + 0.0 * t


def _elliptic_bump(matrix: Any = None, rho0: float = 0.6, **_: Any) -> Profile:
    """1 + (1 - |a^{-1} x|^2 / rho0^2)_+^4 with a = matrix^{1/2}, time independent."""

    def profile(t: np.ndarray, *xs: np.ndarray) -> np.ndarray:
        n = len(xs)
        A = np.eye(n) if matrix is None else np.asarray(matrix, dtype=float)
        a_inv = np.linalg.inv(spd_sqrt(A))
        grid_xs = np.broadcast_arrays(*xs)
        stacked = np.stack(grid_xs, axis=-1)
        local = stacked @ a_inv.T
        s = 1.0 - np.sum(local**2, axis=-1) / rho0**2
        return 1.0 + np.clip(s, 0.0, None) ** 4 + 0.0 * t

    return profile


PROFILES: Dict[str, Callable[..., Profile]] = {
    "zero": _zero,
    "linear_x1": _linear_x1,
    "caloric_quadratic": _caloric_quadratic,
    "harmonic_saddle": _harmonic_saddle,
    "positive_caloric": _positive_caloric,
    "heat_mode": _heat_mode,
    "signorini_three_halves": _signorini_three_halves,
    "sqrt_thin": _sqrt_thin,
    "elliptic_bump": _elliptic_bump,
}


def get_profile(name: str, **params: Any) -> Profile:
    """
    Look up a named profile.

    Raises:
        ValueError: If the name is unknown
    """
    try:
        factory = PROFILES[name]
    except KeyError:
        raise ValueError(
            f"Unknown profile {name!r}.\nAvailable: {', '.join(sorted(PROFILES))}"
        ) from None
    return factory(**params)


def sample_profile(grid: Grid, name: str, **params: Any) -> ScalarField:
    """Sample a named profile on every node of the grid."""
    return ScalarField.from_function(grid, get_profile(name, **params))
