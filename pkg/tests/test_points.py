import numpy as np
import pytest

from rieszgas import (
    DimensionMismatchError,
    DomainError,
    PointConfiguration,
    RieszError,
    finite_density,
    points_from_csv,
    points_to_csv,
    rescale,
    translate,
    zero_field_on_box,
)


def test_configuration_shape_and_dimension():
    c = PointConfiguration([0.0, 1.0])
    assert c.n == 2 and c.d == 1
    c2 = PointConfiguration([[0.0, 1.0], [2.0, 3.0]])
    assert c2.n == 2 and c2.d == 2


def test_configuration_rejects_nonfinite():
    with pytest.raises(RieszError):
        PointConfiguration([0.0, np.inf])
    with pytest.raises(RieszError):
        PointConfiguration([[0.0], [np.nan]])


def test_configuration_is_immutable():
    c = PointConfiguration([0.0, 1.0])
    with pytest.raises(ValueError):
        c.points[0] = 5.0


def test_domain_tag_membership_checked():
    field = zero_field_on_box([[0.0, 1.0]])
    PointConfiguration([0.2, 0.8], domain_tag=field)
    with pytest.raises(DomainError):
        PointConfiguration([0.2, 1.5], domain_tag=field)


def test_translate_identity_and_shift():
    c = PointConfiguration([0.0, 1.0])
    assert np.array_equal(translate(c, [0.0]).points, c.points)
    shifted = translate(c, [1.0])
    assert np.allclose(shifted.points.ravel(), [-1.0, 0.0])


def test_translate_dimension_mismatch():
    c = PointConfiguration([[0.0, 1.0]])
    with pytest.raises(DimensionMismatchError):
        translate(c, [1.0])


def test_translate_round_trip_random():
    rng = np.random.default_rng(1)
    for _ in range(200):
        d = rng.integers(1, 4)
        pts = rng.normal(size=(rng.integers(1, 20), d))
        a = rng.normal(size=d)
        c = PointConfiguration(pts)
        back = translate(translate(c, a), -a)
        assert np.max(np.abs(back.points - pts)) <= 4 * np.finfo(float).eps * (
            1 + np.max(np.abs(pts)) + np.max(np.abs(a))
        )


def test_rescale_examples():
    c = PointConfiguration([0.0, 1.0])
    assert np.allclose(rescale(c, 4.0).points.ravel(), [0.0, 4.0])
    c2 = PointConfiguration([[1.0, 1.0]])
    assert np.allclose(rescale(c2, 4.0).points, [[2.0, 2.0]])


def test_rescale_requires_positive_mass():
    c = PointConfiguration([0.0])
    with pytest.raises(RieszError):
        rescale(c, 0.0)
    with pytest.raises(RieszError):
        rescale(c, -2.0)


def test_rescale_round_trip_random():
    rng = np.random.default_rng(2)
    for _ in range(200):
        d = rng.integers(1, 4)
        pts = rng.normal(size=(rng.integers(1, 20), d))
        m = float(rng.uniform(0.1, 10.0))
        c = PointConfiguration(pts)
        back = rescale(rescale(c, m), 1.0 / m)
        assert np.max(np.abs(back.points - pts)) <= 8 * np.finfo(float).eps * (
            1 + np.max(np.abs(pts))
        )


def test_finite_density_integer_comb():
    c = PointConfiguration(np.arange(-10, 11, dtype=float))  # Z restricted to [-10.5, 10.5]
    assert finite_density(c, 10.0) == pytest.approx(1.1)


def test_finite_density_empty():
    c = PointConfiguration(np.empty((0, 1)))
    assert finite_density(c, 3.0) == 0.0


def test_finite_density_scaling_identity():
    rng = np.random.default_rng(3)
    for d in (1, 2):
        pts = rng.uniform(-5, 5, size=(60, d))
        c = PointConfiguration(pts)
        m = 2.7
        lhs = finite_density(rescale(c, m), m ** (1.0 / d) * 6.0)
        rhs = finite_density(c, 6.0) / m
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_finite_density_of_lattice_tends_to_one():
    for d in (1, 2):
        for R in (5.0, 10.0, 20.0):
            axes = [np.arange(-int(R), int(R) + 1, dtype=float)] * d
            grid = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([g.ravel() for g in grid], axis=1)
            c = PointConfiguration(pts)
            assert abs(finite_density(c, R) - 1.0) <= (d + 1) / R


def test_csv_round_trip():
    rng = np.random.default_rng(4)
    c = PointConfiguration(rng.normal(size=(7, 3)))
    text = points_to_csv(c)
    assert text.splitlines()[0] == "# d=3 n=7"
    back = points_from_csv(text)
    assert np.array_equal(back.points, c.points)


def test_csv_rejects_bad_header():
    with pytest.raises(RieszError):
        points_from_csv("0.0,1.0\n")
    with pytest.raises(RieszError):
        points_from_csv("# d=2 n=3\n0.0,1.0\n")
