import numpy as np
import pytest

from signorinilab.analysis import dyadic_ladder
from signorinilab.certify import (
    Competitor,
    CompetitorKind,
    InadmissibleCompetitorError,
    bump_family,
    certify_caloric,
    certify_deskewed,
    certify_drift,
    certify_frozen,
    certify_signorini,
    check_admissible,
    deficit,
    omega_min,
)
from signorinilab.grid import Cylinder, PPoint, build_grid
from signorinilab.profiles import sample_profile
from signorinilab.solve import SolveSpec, heat_solve, region_mask

SANITY_RADII = [0.25, 0.3, 0.375, 0.45]
A0 = np.array([[1.5, 0.4], [0.4, 0.8]])


def test_check_admissible(signorini_solution):
    u = signorini_solution
    g = u.grid
    c = Cylinder(PPoint.origin(2), 0.4)
    mask = region_mask(g, c)
    assert check_admissible(u, u, mask) == (True, "")

    values = np.array(u.values)
    values[0, 0, 0] += 1.0
    ok, reason = check_admissible(u, u.with_values(values), mask)
    assert not ok
    assert "parabolic boundary" in reason

    values = np.array(u.values)
    k, i = np.argwhere(mask[..., g.thin_index])[0]
    values[k, i, g.thin_index] = -1.0
    ok, reason = check_admissible(u, u.with_values(values), mask)
    assert not ok
    assert "negative" in reason
    assert check_admissible(u, u.with_values(values), mask, constrained=False)[0]


def test_deficit_rejects_inadmissible_competitor(signorini_solution):
    c = Cylinder(PPoint.origin(2), 0.4)
    bad = Competitor(signorini_solution, CompetitorKind.BUMP_PERTURBATION, False, "test")
    with pytest.raises(InadmissibleCompetitorError, match="test"):
        deficit(signorini_solution, bad, c)
    with pytest.raises(ValueError, match="at least one competitor"):
        omega_min(signorini_solution, c, [])


def test_self_competitor_has_zero_deficit(signorini_solution):
    c = Cylinder(PPoint.origin(2), 0.4)
    same = Competitor(signorini_solution, CompetitorKind.REPLACEMENT, True)
    d = deficit(signorini_solution, same, c)
    assert d.P == 0.0
    assert d.excess == 0.0
    assert d.ratio == 0.0


def test_bump_family_is_admissible(signorini_solution):
    c = Cylinder(PPoint.origin(2), 0.4)
    family = bump_family(signorini_solution, c)
    assert len(family) == 18
    assert all(comp.admissible for comp in family)
    assert all(comp.kind == CompetitorKind.BUMP_PERTURBATION for comp in family)
    g = signorini_solution.grid
    for comp in family:
        assert comp.field.values[..., g.thin_index].min() >= -1e-12


def test_signorini_solution_is_a_minimizer(signorini_solution):
    report = certify_signorini(signorini_solution, PPoint.origin(2), SANITY_RADII)
    assert report.competitors_per_cylinder == 19
    assert report.radii == tuple(SANITY_RADII)
    assert max(report.omega_min) <= 1e-6


def test_caloric_solution_is_a_minimizer():
    g = build_grid(2, 33, 64)
    u = heat_solve(SolveSpec(boundary_data=sample_profile(g, "heat_mode"), tol=1e-10))
    report = certify_caloric(u, PPoint.origin(2), SANITY_RADII)
    assert max(report.omega_min) <= 1e-6


def test_drift_raises_the_gauge():
    radii = dyadic_ladder(0.25, 0.5)
    plain, _ = certify_drift(4.0, N=17, K=32, drift="zero", radii=radii, eps=0.005)
    pushed, u = certify_drift(
        4.0, N=17, K=32, magnitude=5.0, drift="constant", radii=radii, eps=0.005
    )
    assert u.grid.shape == (33, 17, 17)
    assert max(plain.omega_min) <= 1e-6
    assert max(pushed.omega_min) > max(plain.omega_min)


def test_drift_validation():
    with pytest.raises(ValueError, match="must exceed"):
        certify_drift(2.0)
    with pytest.raises(ValueError, match="Unknown drift"):
        certify_drift(4.0, N=9, K=8, drift="sideways")


def test_frozen_gauge_transfers_to_deskewed_field():
    g = build_grid(2, 129, 64)
    U = sample_profile(g, "elliptic_bump", matrix=A0)
    radii = dyadic_ladder(0.2, 0.4)
    center = PPoint.origin(2)
    frozen = certify_frozen(U, center, radii, A0, eps=0.05, include_replacement=False)
    deskewed = certify_deskewed(
        U, center, radii, A0, R=0.5, eps=0.05, include_replacement=False
    )
    assert frozen.radii == deskewed.radii
    for a, b in zip(frozen.omega_min, deskewed.omega_min):
        assert a > 0
        assert abs(a - b) / max(a, b) <= 0.05


def test_omega_min_grows_with_the_family(small_grid):
    u = sample_profile(small_grid, "sqrt_thin")
    c = Cylinder(PPoint.origin(2), 0.5)
    family = bump_family(u, c, eps=0.01, constrained=False)
    gauges = [omega_min(u, c, family[: j + 1]) for j in range(len(family))]
    assert np.all(np.diff(gauges) >= 0)
    assert gauges[-1] > 0


def test_omega_min_ignores_constant_shift(small_grid):
    u = sample_profile(small_grid, "sqrt_thin")
    shifted = u + 10.0
    c = Cylinder(PPoint.origin(2), 0.5)
    plain = omega_min(u, c, bump_family(u, c, eps=0.01, constrained=False))
    moved = omega_min(shifted, c, bump_family(shifted, c, eps=0.01, constrained=False))
    assert moved == pytest.approx(plain, rel=1e-8)


def test_frozen_gauge_with_identity_matches_plain_gauge():
    g = build_grid(2, 33, 64)
    U = sample_profile(g, "elliptic_bump")
    center = PPoint.origin(2)
    frozen = certify_frozen(U, center, SANITY_RADII, None, eps=0.05)
    plain = certify_signorini(U, center, SANITY_RADII, eps=0.05)
    assert frozen.radii == plain.radii
    assert frozen.omega_min == pytest.approx(plain.omega_min, rel=1e-6, abs=1e-12)


def test_drift_gauge_exponent_for_p4():
    report, u = certify_drift(4.0)
    assert u.grid.shape == (257, 65, 65)
    assert report.fitted_alpha >= 0.3
