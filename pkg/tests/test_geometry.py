import numpy as np
import pytest

from signorinilab.field import ScalarField
from signorinilab.geometry import (
    EllipticCylinder,
    align_rotation,
    deskew,
    deskewed_grid,
    elliptic_cylinder_mask,
    frame_at,
    frozen_coefficient_constant,
    identity_frame,
    rotation_holder_ratio,
    spd_sqrt,
    validate_spd,
)
from signorinilab.grid import PPoint, build_grid, cylinder_mask
from signorinilab.solve import CoefficientField

A0 = np.array([[1.5, 0.4], [0.4, 0.8]])


def test_spd_sqrt_reconstructs_random_matrices(rng):
    for n in (2, 3, 4):
        B = rng.standard_normal((n, n))
        A = B @ B.T + n * np.eye(n)
        a = spd_sqrt(A)
        assert np.allclose(a, a.T, atol=0)
        assert np.max(np.abs(a @ a - A)) <= 1e-10
        assert np.linalg.eigvalsh(a).min() > 0


def test_validate_spd_rejects_bad_matrices():
    with pytest.raises(ValueError, match="not symmetric"):
        validate_spd(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="not positive definite"):
        validate_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError, match="square"):
        validate_spd(np.ones((2, 3)))


def test_align_rotation_is_a_rotation_onto_a_en():
    a = spd_sqrt(A0)
    O = align_rotation(a)
    assert np.allclose(O @ O.T, np.eye(2), atol=1e-12)
    assert np.linalg.det(O) == pytest.approx(1.0)
    target = a[:, -1] / np.linalg.norm(a[:, -1])
    assert np.allclose(O[:, -1], target, atol=1e-12)
    assert np.allclose(align_rotation(np.eye(3)), np.eye(3))


def test_frame_keeps_thin_space_flat():
    for A in (A0, np.array([[2.0, 0.3, -0.2], [0.3, 1.0, 0.4], [-0.2, 0.4, 1.5]])):
        n = A.shape[0]
        frame = frame_at(A, PPoint.origin(n))
        assert np.allclose(frame.a_bar @ frame.a_bar.T, A, atol=1e-12)
        tangential = frame.a_bar_inv[-1, :-1]
        assert np.allclose(tangential, 0.0, atol=1e-12)
        assert frame.det == pytest.approx(np.sqrt(np.linalg.det(A)))


def test_identity_frame_gives_round_cylinders(small_grid):
    center = PPoint((0.1, 0.0), -0.2)
    for frame in (identity_frame(center), frame_at(np.eye(2), center)):
        ec = EllipticCylinder(frame, 0.45)
        assert np.array_equal(
            elliptic_cylinder_mask(small_grid, ec), cylinder_mask(small_grid, ec.as_cylinder())
        )


def test_elliptic_cylinder_covers_ellipse_area():
    g = build_grid(2, 129, 16)
    frame = frame_at(A0, PPoint.origin(2))
    mask = elliptic_cylinder_mask(g, EllipticCylinder(frame, 0.4))
    area = mask[-1].sum() * g.h**2
    assert area == pytest.approx(np.pi * 0.4**2 * frame.det, rel=0.02)


def test_deskew_is_exact_on_affine_fields():
    g = build_grid(2, 33, 64)
    U = ScalarField.from_function(g, lambda t, x1, x2: 1.0 + 2.0 * x1 - x2 + 0.5 * t)
    center = PPoint((0.1, 0.05), -0.2)
    frame = frame_at(A0, center)
    u = deskew(U, frame, 0.4)
    target = u.grid
    assert target.half_width == 0.4
    assert target.duration == pytest.approx(0.16)
    y = target.spatial_points()
    x = frame.to_global(y)
    expected = (
        1.0 + 2.0 * x[:, 0] - x[:, 1] + 0.5 * (target.times[:, None] + center.t)
    ).reshape(target.shape)
    assert np.max(np.abs(u.values - expected)) <= 1e-12


def test_deskew_rejects_images_outside_the_grid(small_grid):
    U = ScalarField.zeros(small_grid)
    with pytest.raises(ValueError, match="outside the source grid"):
        deskew(U, frame_at(A0, PPoint.origin(2)), 0.95)
    with pytest.raises(ValueError, match="time window"):
        deskew(U, identity_frame(PPoint.origin(2, t=-0.9)), 0.5)


def test_deskewed_grid_matches_source_spacing():
    source = build_grid(2, 129, 64)
    g = deskewed_grid(source, 0.5)
    assert g.nodes_per_axis == 65
    assert g.time_steps == 16
    assert g.h == pytest.approx(source.h)
    assert g.tau == pytest.approx(source.tau)


def test_frozen_coefficient_constant(small_grid, rng):
    constant = CoefficientField.constant(small_grid, A0)
    assert frozen_coefficient_constant(constant, rng=rng) == 0.0
    assert rotation_holder_ratio(constant, pairs=50, rng=rng) == pytest.approx(0.0, abs=1e-12)
    holder = CoefficientField.holder(small_grid, 0.5, amplitude=0.3)
    c1 = frozen_coefficient_constant(holder, samples=500, rng=rng)
    assert 0 < c1 < np.inf
    assert rotation_holder_ratio(holder, pairs=100, rng=rng) > 0


def test_spd_sqrt_commutes_with_rotations(rng):
    for n in (2, 3):
        B = rng.standard_normal((n, n))
        A = B @ B.T + n * np.eye(n)
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        rotated = spd_sqrt(Q @ A @ Q.T)
        assert np.max(np.abs(rotated - Q @ spd_sqrt(A) @ Q.T)) <= 1e-10
