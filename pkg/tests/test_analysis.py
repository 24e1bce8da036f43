import math
from fractions import Fraction

import numpy as np
import pytest

from signorinilab.analysis import (
    FunctionalKind,
    GrowthReport,
    beta_exponent,
    dyadic_ladder,
    fit_power_law,
    growth_report,
    hl_iteration_check,
    implied_holder,
    ratio_bound,
    regularity_report,
)
from signorinilab.functionals import phi
from signorinilab.grid import Cylinder, PPoint, build_grid
from signorinilab.profiles import sample_profile
from signorinilab.solve import SolveSpec, heat_solve


@pytest.fixture(scope="module")
def linear_field():
    return sample_profile(build_grid(2, 65, 256), "linear_x1")


def test_fit_power_law_recovers_exact_power():
    radii = [0.1, 0.2, 0.3, 0.4]
    fit = fit_power_law(radii, [3.0 * r**2.5 for r in radii])
    assert fit.exponent == pytest.approx(2.5)
    assert fit.prefactor == pytest.approx(3.0)
    assert fit.residual < 1e-10


def test_fit_power_law_zero_value_is_infinite():
    fit = fit_power_law([0.1, 0.2, 0.3, 0.4], [0.0, 1.0, 2.0, 3.0])
    assert fit.exponent == math.inf
    assert fit.prefactor == math.inf


def test_fit_power_law_validation():
    with pytest.raises(ValueError, match="at least 4"):
        fit_power_law([0.1, 0.2, 0.3], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="positive"):
        fit_power_law([0.0, 0.1, 0.2, 0.3], [1.0, 1.0, 1.0, 1.0])
    with pytest.raises(ValueError, match="nonnegative"):
        fit_power_law([0.1, 0.2, 0.3, 0.4], [1.0, -1.0, 1.0, 1.0])


def test_dyadic_ladder():
    radii = dyadic_ladder(0.25, 0.5)
    assert len(radii) == 5
    assert radii[0] == pytest.approx(0.25)
    assert radii[-1] == 0.5
    assert np.all(np.diff(radii) > 0)
    assert len(dyadic_ladder(0.125, 0.5, per_octave=1)) == 3
    with pytest.raises(ValueError, match="r_min <= r_max"):
        dyadic_ladder(0.5, 0.25)


def test_beta_exponent_is_exact():
    assert beta_exponent(2, Fraction(1, 2)) == Fraction(1, 68)
    assert beta_exponent(2, 0.5) == Fraction(1, 68)
    assert beta_exponent(3, 1) == Fraction(1, 44)
    with pytest.raises(ValueError, match="at least 2"):
        beta_exponent(1, 0.5)
    with pytest.raises(ValueError, match=r"\(0, 1\]"):
        beta_exponent(2, 0)


def test_ratio_bound():
    radii = [0.1, 0.2, 0.3, 0.4]
    values = [r**3 for r in radii]
    assert ratio_bound(radii, values, 3.0) == pytest.approx(1.0)
    assert ratio_bound(radii, values, 2.0) < 1.0


def test_iteration_check_on_exact_power():
    samples = [(r, r**3) for r in (0.1, 0.2, 0.3, 0.4)]
    check = hl_iteration_check(samples, a=1.0, gamma=3.0, beta=1.0)
    assert check.hypothesis
    assert check.needed_a == pytest.approx(1.0)
    assert check.constant <= 1.0
    failing = hl_iteration_check(samples, a=0.5, gamma=3.0, beta=1.0)
    assert not failing.hypothesis
    assert failing.needed_a == pytest.approx(1.0)


def test_iteration_check_validation():
    samples = [(0.1, 1.0), (0.2, 2.0)]
    with pytest.raises(ValueError, match="gamma > beta"):
        hl_iteration_check(samples, a=1.0, gamma=1.0, beta=2.0)
    with pytest.raises(ValueError, match="strictly increasing"):
        hl_iteration_check([(0.2, 1.0), (0.1, 2.0)], a=1.0, gamma=2.0, beta=1.0)


def test_implied_holder():
    assert implied_holder(FunctionalKind.PHI, 9.0, 2) == pytest.approx(0.5)
    assert implied_holder(FunctionalKind.DIRICHLET, 3.0, 2) == pytest.approx(0.5)
    assert implied_holder(FunctionalKind.MEAN_OSC, 5.0, 2) == pytest.approx(0.5)
    assert implied_holder("campanato_grad", 20.0, 2) == 1.0
    assert implied_holder(FunctionalKind.PHI, 1.0, 2) == 0.0
    assert implied_holder(FunctionalKind.PHI, math.inf, 2) == 1.0


def test_growth_report_validation():
    center = PPoint.origin(2)
    with pytest.raises(ValueError, match="at least 4"):
        GrowthReport(center, (0.1, 0.2, 0.3), (1.0, 1.0, 1.0), 1.0, 0.0, FunctionalKind.PHI)
    with pytest.raises(ValueError, match="strictly increasing"):
        GrowthReport(
            center, (0.1, 0.3, 0.2, 0.4), (1.0, 1.0, 1.0, 1.0), 1.0, 0.0, FunctionalKind.PHI
        )
    with pytest.raises(ValueError, match="nonnegative"):
        GrowthReport(
            center, (0.1, 0.2, 0.3, 0.4), (1.0, -1.0, 1.0, 1.0), 1.0, 0.0, FunctionalKind.PHI
        )


def test_phi_growth_of_linear_field(linear_field):
    report = growth_report(
        linear_field, PPoint.origin(2), FunctionalKind.PHI, dyadic_ladder(0.25, 0.5)
    )
    # phi of a linear function grows like r^{2n+6}
    assert report.fitted_exponent == pytest.approx(10.0, abs=0.2)
    assert report.implied_sigma >= 0.9
    assert not report.degenerate


def test_mean_oscillation_growth_of_linear_field(linear_field):
    report = growth_report(
        linear_field, PPoint.origin(2), FunctionalKind.MEAN_OSC, dyadic_ladder(0.25, 0.5)
    )
    assert report.fitted_exponent == pytest.approx(6.0, abs=0.2)


def test_regularity_report_is_thread_independent(linear_field):
    centers = [PPoint.origin(2), PPoint((0.1, 0.0), -0.2)]
    radii = dyadic_ladder(0.25, 0.5)
    serial = regularity_report(linear_field, centers, FunctionalKind.DIRICHLET, radii)
    threaded = regularity_report(
        linear_field, centers, FunctionalKind.DIRICHLET, radii, threads=2
    )
    assert serial == threaded
    assert len(serial.reports) == 2
    assert serial.min_exponent <= serial.median_exponent
    with pytest.raises(ValueError, match="at least one center"):
        regularity_report(linear_field, [], FunctionalKind.PHI, radii)


def test_constant_field_report_is_degenerate():
    g = build_grid(2, 33, 64)
    u = sample_profile(g, "zero")
    report = regularity_report(
        u, [PPoint.origin(2)], FunctionalKind.MEAN_OSC, dyadic_ladder(0.25, 0.5)
    )
    assert report.degenerate
    assert report.min_sigma == 1.0


def test_gradient_campanato_growth_of_harmonic_field():
    g = build_grid(2, 65, 256)
    u = sample_profile(g, "harmonic_saddle")
    report = growth_report(
        u, PPoint.origin(2), FunctionalKind.CAMPANATO_GRAD, dyadic_ladder(8 * g.h, 0.5)
    )
    # n + 4 for a quadratic harmonic field
    assert report.fitted_exponent == pytest.approx(6.0, abs=0.15)


def test_iteration_check_on_solver_output():
    g = build_grid(2, 33, 64)
    u = heat_solve(SolveSpec(boundary_data=sample_profile(g, "heat_mode"), tol=1e-10))
    samples = [
        (r, phi(u, Cylinder(PPoint.origin(2), r)).total) for r in dyadic_ladder(0.25, 0.5)
    ]
    first = hl_iteration_check(samples, a=1.0, gamma=10.0, beta=9.8)
    assert 0 < first.needed_a < math.inf
    check = hl_iteration_check(samples, a=first.needed_a, gamma=10.0, beta=9.8)
    assert check.hypothesis
    assert check.needed_a == pytest.approx(first.needed_a)
    assert 0 < check.constant < math.inf
