import numpy as np
import pytest

from signorinilab.profiles import PROFILES, get_profile, sample_profile


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_every_profile_samples_finite_values(small_grid, name):
    field = sample_profile(small_grid, name)
    assert field.values.shape == small_grid.shape
    assert np.all(np.isfinite(field.values))


def test_three_halves_profile_vanishes_on_contact_set(small_grid):
    u = sample_profile(small_grid, "signorini_three_halves")
    thin = u.values[..., small_grid.thin_index]
    x1 = small_grid.axis
    assert np.all(thin[:, x1 <= 0] == 0.0)
    assert np.allclose(thin[:, x1 > 0], x1[x1 > 0] ** 1.5)
    # even in x_2
    assert np.allclose(u.values, u.values[..., ::-1])


def test_caloric_quadratic_values(small_grid):
    u = sample_profile(small_grid, "caloric_quadratic")
    k, i = 4, 12
    t, x1 = small_grid.times[k], small_grid.axis[i]
    assert u.values[k, i, 3] == pytest.approx(x1**2 + 2 * t)


def test_profile_parameters(small_grid):
    shifted = sample_profile(small_grid, "positive_caloric", shift=5.0)
    plain = sample_profile(small_grid, "positive_caloric")
    assert np.allclose(shifted.values - plain.values, 2.0)


def test_elliptic_bump_follows_its_matrix(small_grid):
    A = np.diag([4.0, 1.0])
    u = sample_profile(small_grid, "elliptic_bump", matrix=A)
    m = small_grid.thin_index
    # support reaches 0.6 * sqrt(4) along x_1 but only 0.6 along x_2
    assert u.values[0, m + 8, m] > 1.0
    assert u.values[0, m, m + 8] == 1.0
    assert u.values[0, m, m] == pytest.approx(2.0)


def test_unknown_profile():
    with pytest.raises(ValueError, match="Unknown profile 'cubic'"):
        get_profile("cubic")
