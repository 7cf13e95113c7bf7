import numpy as np

from freeconv import maps


def test_joukowsky_inverse_identity_inside_disk():
    rng = np.random.default_rng(1)
    w = rng.uniform(0.05, 0.95, 200) * np.exp(2j * np.pi * rng.uniform(0, 1, 200))
    z = maps.joukowsky(w)
    assert np.max(np.abs(maps.joukowsky_inv(z) - w)) < 1e-12


def test_joukowsky_inverse_lands_in_disk():
    rng = np.random.default_rng(2)
    z = rng.uniform(-5, 5, 300) + 1j * rng.uniform(-5, 5, 300)
    z = z[np.abs(z.imag) > 1e-3]
    assert np.all(np.abs(maps.joukowsky_inv(z)) < 1.0)


def test_joukowsky_inverse_stable_at_large_arguments():
    for t in (1e8, 1e12, -1e10):
        w = complex(maps.joukowsky_inv(complex(t)))
        assert abs(w - 1.0 / (2.0 * t)) < 1e-12 * abs(1.0 / (2.0 * t))
    d1 = complex(maps.joukowsky_inv_d1(complex(1.5e8)))
    assert abs(d1 + 1.0 / (2.0 * 1.5e8 ** 2)) < 1e-24


def test_joukowsky_inverse_derivatives_match_finite_differences():
    h = 1e-6
    for z in (2.3 + 0.7j, -1.8 + 0.2j, 0.4 - 1.1j):
        fd1 = (maps.joukowsky_inv(z + h) - maps.joukowsky_inv(z - h)) / (2 * h)
        assert abs(maps.joukowsky_inv_d1(z) - fd1) < 1e-7
        fd2 = (maps.joukowsky_inv_d1(z + h) - maps.joukowsky_inv_d1(z - h)) / (2 * h)
        assert abs(maps.joukowsky_inv_d2(z) - fd2) < 1e-6


def test_mobius_maps_upper_half_plane_to_disk():
    rng = np.random.default_rng(3)
    x = rng.uniform(-10, 10, 200) + 1j * rng.uniform(0.01, 10, 200)
    lam = maps.mobius(x)
    assert np.all(np.abs(lam) < 1.0)
    assert np.max(np.abs(maps.mobius_inv(lam) - x)) < 1e-10


def test_mobius_real_axis_on_circle():
    x = np.linspace(-50, 50, 101)
    assert np.max(np.abs(np.abs(maps.mobius(x)) - 1.0)) < 1e-12


def test_affine_maps_round_trip():
    t = np.linspace(-1, 1, 11)
    x = maps.to_interval(-2.5, 4.0, t)
    assert np.max(np.abs(maps.from_interval(-2.5, 4.0, x) - t)) < 1e-14
    assert x[0] == -2.5 and x[-1] == 4.0


def test_halfline_map_round_trip():
    t = np.linspace(-0.99, 0.99, 11)
    x = maps.to_halfline(1.5, t)
    assert np.all(x > 1.5)
    assert np.max(np.abs(maps.from_halfline(1.5, x) - t)) < 1e-12


def test_unit_circle_nodes_start_at_minus_one():
    u = maps.unit_circle_nodes(9)
    assert abs(u[0] + 1.0) < 1e-15
    assert np.max(np.abs(np.abs(u) - 1.0)) < 1e-15


def test_chebyshev_nodes_are_second_kind_extrema():
    t = maps.chebyshev_second_kind_nodes(5)
    assert np.allclose(t, [-1.0, -np.sqrt(0.5), 0.0, np.sqrt(0.5), 1.0])
