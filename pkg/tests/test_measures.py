import numpy as np
import pytest
from scipy import integrate

import freeconv as fc
from freeconv import measures
from freeconv.errors import AtomDensityUndefined, MomentDiverges, SupportInvalid


def cauchy_law_coeffs():
    # hand expansion of 1/(pi (1 + x^2)) in u = (i - x)/(i + x)
    return np.array([1 / (4 * np.pi), 1 / (2 * np.pi), 1 / (4 * np.pi)], dtype=complex)


def halfsqrt_example():
    # factor psi(M(t)) = U_0 - U_1/2 = 1 - t vanishes at t = 1, so the
    # density decays fast enough to integrate; normalize the mass to 1
    raw = fc.HalfSqrtMeasure(0.5, np.array([1.0, -0.5]))
    total = fc.mass(raw)
    return fc.HalfSqrtMeasure(0.5, raw.coeffs / total)


def test_semicircle_density_center():
    sc = fc.semicircle()
    assert abs(fc.density(sc, 0.0) - 1 / np.pi) < 1e-14
    grid = np.linspace(-2, 2, 401)
    exact = np.sqrt(np.maximum(4 - grid**2, 0.0)) / (2 * np.pi)
    assert np.max(np.abs(fc.density(sc, grid) - exact)) < 1e-14


def test_smooth_cauchy_density():
    m = fc.SmoothMeasure(cauchy_law_coeffs())
    assert abs(fc.density(m, 0.0) - 1 / np.pi) < 1e-14
    xs = np.linspace(-30, 30, 301)
    assert np.max(np.abs(fc.density(m, xs) - 1 / (np.pi * (1 + xs**2)))) < 1e-14


def test_atom_density_undefined():
    with pytest.raises(AtomDensityUndefined):
        fc.density(fc.PointMass(0.0), 0.5)
    with pytest.raises(AtomDensityUndefined):
        fc.density(fc.AtomSum.from_pairs([(-1.0, 0.5), (1.0, 0.5)]), 0.0)


def test_mass_examples():
    assert fc.mass(fc.PointMass(3.0, 1.0)) == 1.0
    sc = fc.semicircle()
    assert abs(fc.mass(sc) - np.pi * 4 * sc.coeffs[0] / 4) < 1e-15
    assert abs(fc.mass(sc) - 1.0) < 1e-15
    assert fc.mass(fc.AtomSum.from_pairs([(-1.0, 0.5), (1.0, 0.5)])) == 1.0
    assert fc.mass(fc.UniformMeasure(-1, 1)) == 1.0
    assert fc.mass(fc.marchenko_pastur()) == 1.0


def test_smooth_mass_by_quadrature():
    m = fc.SmoothMeasure(cauchy_law_coeffs())
    assert abs(fc.mass(m) - 1.0) < 1e-10
    g = fc.gaussian(n=100)
    assert abs(fc.mass(g) - 1.0) < 1e-10


def test_moments_semicircle():
    sc = fc.semicircle()
    assert abs(fc.moment(sc, 1)) < 1e-15
    assert abs(fc.moment(sc, 2) - 1.0) < 1e-15
    # Catalan numbers: m4 = 2, m6 = 5
    assert abs(fc.moment(sc, 4) - 2.0) < 1e-14
    assert abs(fc.moment(sc, 6) - 5.0) < 1e-13


def test_moments_point_and_uniform():
    assert fc.moment(fc.PointMass(2.0), 3) == 8.0
    u = fc.UniformMeasure(-1, 1)
    assert abs(fc.moment(u, 2) - 1 / 3) < 1e-15
    assert fc.moment(u, 1) == 0.0


def test_moment_diverges_for_cauchy_law():
    m = fc.SmoothMeasure(cauchy_law_coeffs())
    for k in (1, 2):
        with pytest.raises(MomentDiverges):
            fc.moment(m, k)


def test_gaussian_moments():
    g = fc.gaussian(n=80)
    assert abs(fc.moment(g, 1)) < 1e-9
    assert abs(fc.moment(g, 2) - 2**-0.5) < 1e-4


def test_marchenko_pastur_moments_are_catalan():
    mp = fc.marchenko_pastur()
    for k, catalan in [(1, 1.0), (2, 2.0), (3, 5.0), (4, 14.0)]:
        assert abs(fc.moment(mp, k) - catalan) < 1e-13


def test_halfsqrt_mass_density_and_divergence():
    m = halfsqrt_example()
    assert abs(fc.mass(m) - 1.0) < 1e-9
    xs = np.linspace(0.5, 40.0, 500)
    assert np.min(fc.density(m, xs)) >= -1e-12
    assert fc.density(m, 0.4) == 0.0
    with pytest.raises(MomentDiverges):
        fc.moment(m, 1)


def test_atomsum_sorts_and_merges():
    a = fc.AtomSum.from_pairs([(1.0, 0.25), (-1.0, 0.5), (1.0, 0.25)])
    assert np.allclose(a.locations, [-1.0, 1.0])
    assert np.allclose(a.weights, [0.5, 0.5])
    with pytest.raises(ValueError):
        fc.AtomSum.from_pairs([(0.0, 0.3), (1.0, 0.3)])
    with pytest.raises(ValueError):
        fc.AtomSum.from_pairs([(0.0, -0.5), (1.0, 1.5)])


def test_point_mass_weight_validation():
    with pytest.raises(ValueError):
        fc.PointMass(0.0, 0.0)
    with pytest.raises(ValueError):
        fc.PointMass(0.0, 1.5)


def test_support_validation():
    with pytest.raises(SupportInvalid):
        fc.SqrtMeasure(2.0, 2.0, [1.0])
    with pytest.raises(SupportInvalid):
        fc.UniformMeasure(1.0, -1.0)


def test_smooth_invariants():
    g = fc.gaussian(n=64)
    n = g.order
    # conjugate symmetry and the vanishing-at-infinity constraint
    assert np.max(np.abs(g.coeffs - np.conj(g.coeffs[::-1]))) < 1e-15
    ks = np.arange(-n, n + 1)
    assert abs(np.sum(g.coeffs * (-1.0) ** ks)) < 1e-10
    xs = np.linspace(-40, 40, 1000)
    assert np.max(np.abs(np.imag(g.factor(xs)))) < 1e-12


def test_sqrt_density_nonnegative_and_vanishing_at_edges():
    for m in (fc.semicircle(), fc.semicircle(variance=2.0), fc.quartic_equilibrium()):
        grid = np.linspace(m.a, m.b, 2001)
        dens = fc.density(m, grid)
        assert np.min(dens) >= -1e-10
        assert dens[0] == 0.0 and dens[-1] == 0.0


def test_quartic_equilibrium_is_normalized():
    q = fc.quartic_equilibrium()
    assert abs(fc.mass(q) - 1.0) < 1e-14
    a = (4.0 / 3.0) ** 0.25
    xs = np.linspace(-a + 1e-6, a - 1e-6, 101)
    exact = (2 * xs**2 + a * a) * np.sqrt(a * a - xs * xs) / np.pi
    assert np.max(np.abs(fc.density(q, xs) - exact)) < 1e-13


def test_u_times_affine_matches_pointwise_product():
    rng = np.random.default_rng(4)
    coeffs = rng.standard_normal(6)
    out = measures.u_times_affine(coeffs, 0.7, 1.3)
    t = np.linspace(-0.99, 0.99, 50)
    lhs = measures._chebu_eval(out, t)
    rhs = (0.7 + 1.3 * t) * measures._chebu_eval(coeffs, t)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_times_x_for_marchenko_pastur():
    nu = fc.times_x(fc.marchenko_pastur())
    assert (nu.a, nu.b) == (0.0, 4.0)
    assert np.allclose(nu.coeffs, [1 / np.pi])
    xs = np.linspace(0.1, 3.9, 101)
    assert np.max(np.abs(fc.density(nu, xs) - xs * fc.density(fc.marchenko_pastur(), xs))) < 1e-13


def test_trim_trailing():
    c = np.array([1.0, 0.5, 1e-20, 1e-20])
    assert len(measures.trim_trailing(c)) == 2
    assert len(measures.trim_trailing(np.zeros(4))) == 1


def test_validate_probability():
    fc.validate_probability(fc.semicircle())
    bad = fc.SqrtMeasure(-2, 2, np.array([2.0 / np.pi]))
    with pytest.raises(ValueError):
        fc.validate_probability(bad)


def test_cdf_closed_forms():
    u = fc.CumulativeDensity(fc.UniformMeasure(-1, 1))
    assert u(0.0) == 0.5 and u(-2.0) == 0.0 and u(3.0) == 1.0
    mp = fc.CumulativeDensity(fc.marchenko_pastur())
    val, _ = integrate.quad(lambda t: fc.density(fc.marchenko_pastur(), t), 0, 1.0)
    assert abs(mp(1.0) - val) < 1e-10
    sc = fc.CumulativeDensity(fc.semicircle())
    xs = np.linspace(-2, 2, 21)
    exact = 0.5 + (xs * np.sqrt(4 - xs**2) + 4 * np.arcsin(xs / 2)) / (4 * np.pi)
    assert np.max(np.abs(sc(xs) - exact)) < 1e-7
    from scipy.special import erf

    g = fc.CumulativeDensity(fc.gaussian(n=80))
    xs = np.linspace(-3, 3, 25)
    exact = 0.5 * (1 + erf(xs / np.sqrt(2 * 2**-0.5)))
    assert np.max(np.abs(g(xs) - exact)) < 1e-6


def test_cdf_of_atoms_is_step():
    a = fc.AtomSum.from_pairs([(-1.0, 0.5), (1.0, 0.5)])
    cd = fc.CumulativeDensity(a)
    assert cd(-2.0) == 0.0 and cd(0.0) == 0.5 and cd(1.0) == 1.0


def test_support_interval():
    assert fc.support_interval(fc.semicircle()) == (-2.0, 2.0)
    assert fc.support_interval(fc.gaussian(n=8)) == (-np.inf, np.inf)
    assert fc.support_interval(fc.PointMass(1.5)) == (1.5, 1.5)
    assert fc.support_interval(halfsqrt_example()) == (0.5, np.inf)
    assert fc.is_compact(fc.marchenko_pastur())
    assert not fc.is_compact(fc.gaussian(n=8))
