import math

import numpy as np
import pytest
from scipy.special import zeta as riemann_zeta

from rieszgas import (
    BravaisLattice,
    LatticeError,
    PointConfiguration,
    RieszError,
    epstein_hurwitz_grad,
    epstein_hurwitz_zeta,
    epstein_zeta,
    lattice_preset,
    lattice_ws,
    periodic_config_ws,
    periodic_energy,
    truncated_interaction,
    window_energy_density,
)

TWO_ZETA_2 = math.pi**2 / 3


def catalan_series(terms=200000):
    k = np.arange(terms)
    return float(np.sum((-1.0) ** k / (2 * k + 1) ** 2))


def test_presets():
    assert lattice_preset("Z1").d == 1
    assert lattice_preset("Z2").d == 2
    assert lattice_preset("Z3").d == 3
    hexa = lattice_preset("hexagonal")
    assert hexa.covolume == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(LatticeError):
        lattice_preset("A4")


def test_singular_generator_rejected():
    with pytest.raises(LatticeError):
        BravaisLattice(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_covolume_matches_determinant():
    rng = np.random.default_rng(0)
    for _ in range(50):
        U = rng.normal(size=(2, 2))
        if abs(np.linalg.det(U)) < 1e-3:
            continue
        lat = BravaisLattice(U)
        assert abs(lat.covolume - abs(np.linalg.det(U))) <= 1e-12 * lat.covolume


def test_reduce_lands_in_fundamental_domain():
    rng = np.random.default_rng(1)
    lat = lattice_preset("hexagonal")
    for _ in range(100):
        x = rng.normal(scale=10, size=2)
        r = lat.reduce(x)
        assert lat.in_fundamental_domain(r)
        # reduction is by a lattice vector
        w = np.linalg.solve(lat.generator, x - r)
        assert np.allclose(w, np.round(w), atol=1e-9)


def test_epstein_zeta_integer_lattice():
    res = epstein_zeta(lattice_preset("Z1"), 2.0, 1e-8)
    assert abs(res.value - TWO_ZETA_2) <= 1e-8
    assert abs(res.value - TWO_ZETA_2) <= res.tail_bound


def test_epstein_zeta_certified_for_range_of_s():
    lat = lattice_preset("Z1")
    for s in (1.5, 2.0, 3.0, 4.0):
        res = epstein_zeta(lat, s, 1e-10)
        exact = 2.0 * float(riemann_zeta(s))
        assert abs(res.value - exact) <= res.tail_bound
        assert res.tail_bound <= 1e-10


def test_epstein_zeta_scaled_lattice():
    res = epstein_zeta(BravaisLattice(np.array([[2.0]])), 2.0, 1e-10)
    assert res.value == pytest.approx(TWO_ZETA_2 / 4.0, abs=1e-9)


def test_epstein_zeta_square_lattice_s4():
    res = epstein_zeta(lattice_preset("Z2"), 4.0, 1e-6)
    exact = 4.0 * float(riemann_zeta(2)) * catalan_series()
    assert abs(res.value - exact) <= res.tail_bound + 1e-9
    assert res.value == pytest.approx(6.026812, abs=2e-6)


def test_epstein_zeta_divergent_exponent_rejected():
    with pytest.raises(LatticeError):
        epstein_zeta(lattice_preset("Z2"), 1.0, 1e-6)
    with pytest.raises(LatticeError):
        epstein_zeta(lattice_preset("Z2"), 2.0, 1e-6)


def test_epstein_zeta_rotation_invariance():
    # distances are rotation invariant, so the reported value must agree to
    # floating-point noise regardless of the certified tolerance
    rng = np.random.default_rng(2)
    base = epstein_zeta(lattice_preset("Z2"), 4.0, 1e-5).value
    for _ in range(3):
        theta = rng.uniform(0, 2 * np.pi)
        Q = np.array(
            [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
        )
        rotated = epstein_zeta(BravaisLattice(Q @ np.eye(2)), 4.0, 1e-5).value
        assert abs(rotated - base) <= 1e-10 * base


def test_hurwitz_half_point():
    res = epstein_hurwitz_zeta(lattice_preset("Z1"), 2.0, [0.5], 1e-8)
    assert abs(res.value - math.pi**2) <= 1e-8


def test_hurwitz_symmetry_and_periodicity():
    lat = lattice_preset("hexagonal")
    x = np.array([0.21, -0.13])
    v = epstein_hurwitz_zeta(lat, 3.0, x, 1e-9).value
    assert epstein_hurwitz_zeta(lat, 3.0, -x, 1e-9).value == pytest.approx(v, rel=1e-12)
    shift = lat.generator @ np.array([2.0, -1.0])
    assert epstein_hurwitz_zeta(lat, 3.0, x + shift, 1e-9).value == pytest.approx(
        v, rel=1e-10
    )


def test_hurwitz_on_lattice_point_rejected():
    lat = lattice_preset("Z1")
    with pytest.raises(LatticeError):
        epstein_hurwitz_zeta(lat, 2.0, [0.0], 1e-8)
    with pytest.raises(LatticeError):
        epstein_hurwitz_zeta(lat, 2.0, [3.0], 1e-8)


def test_hurwitz_gradient_matches_finite_differences():
    # d >= 2 sums converge like K^(d-s), so the 2-D case uses a larger s
    # and a wider stencil to stay cheap at certified tolerances
    for lat, x, s, eps, tol in (
        (lattice_preset("Z1"), np.array([0.31]), 2.5, 1e-6, 1e-12),
        (lattice_preset("hexagonal"), np.array([0.17, 0.05]), 5.0, 1e-4, 1e-8),
    ):
        g, _ = epstein_hurwitz_grad(lat, s, x, 1e-8)
        for k in range(lat.d):
            dx = np.zeros(lat.d)
            dx[k] = eps
            fp = epstein_hurwitz_zeta(lat, s, x + dx, tol).value
            fm = epstein_hurwitz_zeta(lat, s, x - dx, tol).value
            assert g[k] == pytest.approx((fp - fm) / (2 * eps), rel=1e-5)


def test_periodic_energy_two_point_example():
    cfg = PointConfiguration([0.0, 0.5])
    e = periodic_energy(lattice_preset("Z1"), cfg, 2.0, 1e-8)
    assert e == pytest.approx(8 * math.pi**2 / 3, abs=1e-6)
    # unfolded route: the union with the lattice is (1/2) Z
    unfolded = 2.0 * epstein_zeta(BravaisLattice(np.array([[0.5]])), 2.0, 1e-9).value
    assert e == pytest.approx(unfolded, abs=1e-6)


def test_periodic_energy_equally_spaced():
    for n in (2, 3, 5):
        cfg = PointConfiguration(np.arange(n) / n - 0.5 + 1.0 / (2 * n))
        e = periodic_energy(lattice_preset("Z1"), cfg, 2.0, 1e-9)
        assert e == pytest.approx(TWO_ZETA_2 * n**3, rel=1e-10)


def test_periodic_energy_single_point():
    cfg = PointConfiguration([0.0])
    e = periodic_energy(lattice_preset("Z1"), cfg, 2.0, 1e-10)
    assert e == pytest.approx(TWO_ZETA_2, abs=1e-9)


def test_periodic_energy_congruent_points_rejected():
    lat = lattice_preset("Z1")
    with pytest.raises(RieszError):
        periodic_energy(lat, PointConfiguration([0.25, 0.25]), 2.0)
    with pytest.raises(RieszError):
        periodic_energy(lat, PointConfiguration([0.25, 3.25]), 2.0)


def test_periodic_energy_outside_fundamental_domain_rejected():
    with pytest.raises(RieszError):
        periodic_energy(lattice_preset("Z1"), PointConfiguration([0.0, 0.9]), 2.0)


def test_periodic_energy_matches_direct_image_sum():
    lat = lattice_preset("Z1")
    cfg = PointConfiguration([-0.31, 0.05, 0.4])
    s = 2.0
    via_zeta = periodic_energy(lat, cfg, s, 1e-10)
    # direct route: fold in explicit lattice images out to a finite radius
    R = 4000
    images = (cfg.points[None, :, :] + np.arange(-R, R + 1)[:, None, None]).reshape(-1, 1)
    big = PointConfiguration(images)
    direct = truncated_interaction(cfg, big, s, 1e-12)
    # dropped images lie beyond R - 1; 3 points each side, integral tail bound
    tail = 2 * cfg.n * cfg.n * (R - 1.0) ** (1.0 - s) / (s - 1.0)
    assert abs(via_zeta - direct) <= tail + 1e-8


def test_lattice_ws_values_and_scaling():
    assert lattice_ws(lattice_preset("Z1"), 2.0, 1e-10) == pytest.approx(
        TWO_ZETA_2, abs=1e-9
    )
    base = lattice_ws(lattice_preset("Z1"), 2.0, 1e-12)
    for a in (0.5, 2.0, 3.0):
        got = lattice_ws(BravaisLattice(np.array([[a]])), 2.0, 1e-12)
        assert got == pytest.approx(a ** -(1.0 + 2.0) * base, rel=1e-10)
    assert lattice_ws(lattice_preset("Z2"), 4.0, 1e-6) == pytest.approx(
        6.026812, abs=2e-6
    )


def test_periodic_config_ws():
    cfg = PointConfiguration([0.0, 0.5])
    got = periodic_config_ws(lattice_preset("Z1"), cfg, 2.0, 1e-8)
    assert got == pytest.approx(8 * math.pi**2 / 3, abs=1e-6)
    half = BravaisLattice(np.array([[2.0]]))
    got2 = periodic_config_ws(half, PointConfiguration([0.0]), 2.0, 1e-10)
    assert got2 == pytest.approx(math.pi**2 / 24, abs=1e-9)


def test_periodic_config_ws_agrees_with_window_energy():
    lat = lattice_preset("Z1")
    cfg = PointConfiguration([0.0, 0.5])
    ws = periodic_config_ws(lat, cfg, 2.0, 1e-9)
    # unfold into a long window and compare the finite-R energy density
    k = np.arange(-160, 161)
    unfolded = PointConfiguration(
        np.concatenate([(cfg.points.ravel()[None, :] + k[:, None]).ravel()])
    )
    win = window_energy_density(unfolded, 2.0, 200.0)
    assert abs(win - ws) / ws < 0.02
