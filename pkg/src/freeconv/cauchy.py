"""Series fitting and Cauchy transform evaluation for all measure variants.

``fit_smooth``/``fit_sqrt``/``fit_ellipse`` build measures from pointwise
density (or transform) samples.  ``CauchyEvaluator`` evaluates G, the
T-transform, boundary values and the first two derivatives; instances are
immutable after construction and safe to share between threads.
"""

import numpy as np
from scipy import fft as spfft

from . import maps, measures
from .errors import (
    AtomDensityUndefined,
    CoefficientGrowth,
    NonFiniteSample,
    OnSupport,
    SupportInvalid,
    SupportNotEnclosed,
)
from .measures import (
    AtomSum,
    EllipseMeasure,
    HalfSqrtMeasure,
    MarchenkoPastur,
    PointMass,
    SmoothMeasure,
    SqrtMeasure,
    TRUNC_TOL,
    TransformSource,
    UniformMeasure,
    trim_trailing,
)

TOL_SUPPORT = 1e-12
DEFAULT_ELLIPSE_RADIUS = 0.8
TOL_ELLIPSE = 1e-8
_TWO_PI_I = 2j * np.pi


# ---------------------------------------------------------------------------
# fitting


def fit_smooth(density_fn, n):
    """Fit a SmoothMeasure from real-line density samples.

    Samples the density at x = i (1 - u)/(1 + u) for m = 2n + 1 evenly
    spaced unit-circle points u and reads the Laurent coefficients off the
    FFT; conjugate symmetry is enforced by averaging.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    m = 2 * n + 1
    u = maps.unit_circle_nodes(m)
    samples = np.empty(m)
    samples[0] = 0.0  # u = -1 maps to infinity where the density vanishes
    x = np.real(maps.mobius_inv(u[1:]))
    for j, xj in enumerate(x, start=1):
        samples[j] = float(density_fn(float(xj)))
    if not np.all(np.isfinite(samples)):
        raise NonFiniteSample("density returned a non-finite sample")
    g = np.fft.fft(samples) / m
    ks = np.arange(-n, n + 1)
    psi = ((-1.0) ** ks) * g[np.mod(ks, m)]
    psi = 0.5 * (psi + np.conj(psi[::-1]))
    return SmoothMeasure(psi)


def _vals_to_cheb_t(vals_ascending):
    """First-kind Chebyshev coefficients from values at second-kind points."""
    g = np.asarray(vals_ascending, dtype=float)[::-1]  # reorder to theta grid
    n = g.size
    c = spfft.dct(g, type=1) / (n - 1)
    c[0] *= 0.5
    c[-1] *= 0.5
    return c


def _cheb_t_to_u(c):
    """Convert T-coefficients to U-coefficients.

    T_0 = U_0, T_1 = U_1/2, T_k = (U_k - U_{k-2})/2.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    u = np.zeros(n)
    ext = np.concatenate([c, [0.0, 0.0]])
    u[0] = c[0] - 0.5 * ext[2]
    for j in range(1, n):
        u[j] = 0.5 * (ext[j] - ext[j + 2])
    return u


def fit_sqrt(density_fn, support, n, factor=False):
    """Fit a SqrtMeasure from density samples on (a, b).

    The smooth factor is sampled at n Chebyshev points of the second kind,
    converted to first-kind coefficients by the DCT and then to the U basis.
    With ``factor=True`` the callable is taken to be the smooth factor
    itself; otherwise it is the full density and is divided by the
    square-root weight (endpoint nodes are nudged inward by 1e-12 so the
    0/0 ratio is never formed).
    """
    a, b = support
    if not (np.isfinite(a) and np.isfinite(b) and a < b):
        raise SupportInvalid(f"invalid support ({a}, {b})")
    if n < 1:
        raise ValueError("n must be at least 1")
    t = maps.chebyshev_second_kind_nodes(n)
    if factor:
        vals = np.array([float(density_fn(float(xj))) for xj in maps.to_interval(a, b, t)])
    else:
        te = np.clip(t, -1.0 + 1e-12, 1.0 - 1e-12)
        xe = maps.to_interval(a, b, te)
        weight = 2.0 * np.sqrt(xe - a) * np.sqrt(b - xe) / (b - a)
        vals = np.array([float(density_fn(float(xj))) for xj in xe]) / weight
    if not np.all(np.isfinite(vals)):
        raise NonFiniteSample("density returned a non-finite sample")
    if n == 1:
        return SqrtMeasure(a, b, np.array([vals[0]]))
    u = _cheb_t_to_u(_vals_to_cheb_t(vals))
    return SqrtMeasure(a, b, trim_trailing(u))


def fit_ellipse(source, interval, r=DEFAULT_ELLIPSE_RADIUS, n=None):
    """Wrap a compactly supported measure in an ellipse expansion.

    Samples the source's Cauchy transform on the image of the circle
    |w| = 1 under M_(a,b)(J(r w)) and keeps the Taylor coefficients
    g_1..g_n.  The expansion is valid (and invertible) outside the ellipse.
    """
    a, b = interval
    if not (0.0 < r < 1.0):
        raise ValueError("ellipse radius must lie in (0, 1)")
    lo, hi = measures.support_interval(source)
    if not (np.isfinite(lo) and np.isfinite(hi)) or not (a < lo and hi < b):
        raise SupportNotEnclosed(f"support [{lo}, {hi}] not inside ({a}, {b})")
    src = CauchyEvaluator(source)
    sizes = [int(n)] if n is not None else [64, 128, 256, 512, 1024, 2048]
    coeffs = None
    for ntry in sizes:
        m = 2 * ntry
        w = np.exp(2j * np.pi * np.arange(m) / m)
        z = maps.to_interval(a, b, maps.joukowsky(r * w))
        vals = src.cauchy_many(z)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteSample("source transform non-finite on the ellipse")
        g = np.fft.fft(vals) / m
        coeffs = g[1 : ntry + 1]
        scale = np.max(np.abs(coeffs))
        if np.abs(g[0]) > 1e-8 * max(scale, 1e-300):
            raise CoefficientGrowth(
                f"constant Taylor term {np.abs(g[0]):.2e} does not vanish; "
                "source transform must decay at infinity"
            )
        tail = np.max(np.abs(coeffs[-3:]))
        if tail <= TRUNC_TOL * scale:
            break
    else:
        raise CoefficientGrowth(
            f"trailing coefficient {tail / scale:.2e} above truncation tolerance; r={r} too large"
        )
    if tail > TRUNC_TOL * scale:
        raise CoefficientGrowth(
            f"trailing coefficient {tail / scale:.2e} above truncation tolerance at n={sizes[-1]}"
        )
    em = EllipseMeasure(a, b, r, trim_trailing(coeffs), source)
    ev = CauchyEvaluator(em)
    ztest = maps.to_interval(a, b, maps.joukowsky(0.5 * r * np.exp(1j * np.linspace(0.3, 5.9, 7))))
    err = np.max(np.abs(ev.cauchy_many(ztest) - src.cauchy_many(ztest)))
    if err > TOL_ELLIPSE:
        raise CoefficientGrowth(f"ellipse reconstruction error {err:.2e} exceeds {TOL_ELLIPSE}")
    return em


# ---------------------------------------------------------------------------
# evaluation


def _polyval_ascending(coeffs, z):
    out = np.zeros_like(z)
    for c in np.asarray(coeffs)[::-1]:
        out = out * z + c
    return out


def _polyder_ascending(coeffs, order=1):
    c = np.asarray(coeffs)
    for _ in range(order):
        c = c[1:] * np.arange(1, c.size)
    return c


class CauchyEvaluator:
    """Pointwise G_mu, T_mu and derivatives for one measure.

    Scalar entry points (`cauchy`, `t_transform`, `derivative`,
    `cauchy_boundary`) raise on invalid points; the `*_many` variants are
    vectorized and return NaN where evaluation is undefined.
    """

    def __init__(self, measure):
        self.measure = measure
        self.support = measures.support_interval(measure)
        self._source_eval = None
        if isinstance(measure, EllipseMeasure):
            self._source_eval = CauchyEvaluator(measure.source)
        if isinstance(measure, SmoothMeasure):
            n = measure.order
            self._plus = measure.coeffs[n:]  # psi_0 .. psi_n
            self._minus = measure.coeffs[:n][::-1]  # psi_-1 .. psi_-n
            self._alt = np.sum(self._plus * (-1.0) ** np.arange(n + 1))
        self.mass = measures.mass(measure)

    # -- on-support detection ------------------------------------------------

    def _on_support_mask(self, z):
        m = self.measure
        im_small = np.abs(z.imag) <= TOL_SUPPORT
        if isinstance(m, SmoothMeasure):
            return im_small
        if isinstance(m, (PointMass, AtomSum)):
            locs = (
                np.array([m.location])
                if isinstance(m, PointMass)
                else m.locations
            )
            d = np.min(np.abs(z[..., None] - locs), axis=-1)
            return d <= TOL_SUPPORT
        if isinstance(m, EllipseMeasure):
            return self._source_eval._on_support_mask(z)
        lo, hi = self.support
        if np.isinf(hi):
            return im_small & (z.real >= lo - TOL_SUPPORT)
        return im_small & (z.real >= lo - TOL_SUPPORT) & (z.real <= hi + TOL_SUPPORT)

    # -- vectorized cores ------------------------------------------------------

    def cauchy_many(self, z):
        """G at an array of points; NaN on the support."""
        z = np.asarray(z, dtype=complex)
        out = self._g(z)
        bad = self._on_support_mask(z)
        if np.any(bad):
            out = np.where(bad, np.nan + 0j, out)
        return out

    def derivative_many(self, z, order=1):
        z = np.asarray(z, dtype=complex)
        out = self._dg(z, order)
        bad = self._on_support_mask(z)
        if np.any(bad):
            out = np.where(bad, np.nan + 0j, out)
        return out

    def _g(self, z):
        m = self.measure
        if isinstance(m, PointMass):
            return m.weight / (z - m.location)
        if isinstance(m, AtomSum):
            return np.sum(m.weights / (z[..., None] - m.locations), axis=-1)
        if isinstance(m, UniformMeasure):
            return (np.log(z - m.a) - np.log(z - m.b)) / (m.b - m.a)
        if isinstance(m, SmoothMeasure):
            lam = maps.mobius(z)
            upper = -_TWO_PI_I * (_polyval_ascending(self._plus, lam) - self._alt)
            with np.errstate(divide="ignore", invalid="ignore"):
                v = 1.0 / lam
            minus_sum = v * _polyval_ascending(self._minus, v)
            lower = _TWO_PI_I * (minus_sum + self._alt)
            return np.where(z.imag > 0, upper, lower)
        if isinstance(m, SqrtMeasure):
            s = maps.joukowsky_inv(maps.from_interval(m.a, m.b, z))
            return np.pi * s * _polyval_ascending(m.coeffs, s)
        if isinstance(m, HalfSqrtMeasure):
            s = maps.joukowsky_inv(maps.from_halfline(m.a, z))
            total = np.sum(m.coeffs)
            return np.pi * (s * _polyval_ascending(m.coeffs, s) - total)
        if isinstance(m, MarchenkoPastur):
            s = maps.joukowsky_inv(0.5 * (z - 2.0))
            return (1.0 + s) / z
        if isinstance(m, EllipseMeasure):
            v = maps.joukowsky_inv(maps.from_interval(m.a, m.b, z)) / m.radius
            inside = np.abs(v) <= 1.0
            vv = np.where(inside, v, 0.0)
            series = vv * _polyval_ascending(m.taylor, vv)
            if np.all(inside):
                return series
            direct = self._source_eval._g(z)
            return np.where(inside, series, direct)
        if isinstance(m, TransformSource):
            return m.fn(z)
        raise TypeError(f"unknown measure type {type(m).__name__}")

    def _dg(self, z, order):
        if order not in (1, 2):
            raise ValueError("derivative order must be 1 or 2")
        m = self.measure
        if isinstance(m, PointMass):
            return (-m.weight / (z - m.location) ** 2 if order == 1
                    else 2.0 * m.weight / (z - m.location) ** 3)
        if isinstance(m, AtomSum):
            dz = z[..., None] - m.locations
            return (np.sum(-m.weights / dz ** 2, axis=-1) if order == 1
                    else np.sum(2.0 * m.weights / dz ** 3, axis=-1))
        if isinstance(m, UniformMeasure):
            if order == 1:
                return (1.0 / (z - m.a) - 1.0 / (z - m.b)) / (m.b - m.a)
            return (-1.0 / (z - m.a) ** 2 + 1.0 / (z - m.b) ** 2) / (m.b - m.a)
        if isinstance(m, SmoothMeasure):
            lam = maps.mobius(z)
            du, d2u = maps.mobius_d1(z), maps.mobius_d2(z)
            p1 = _polyder_ascending(self._plus, 1)
            if order == 1:
                upper = -_TWO_PI_I * _polyval_ascending(p1, lam) * du
            else:
                p2 = _polyder_ascending(self._plus, 2)
                upper = -_TWO_PI_I * (
                    _polyval_ascending(p2, lam) * du ** 2 + _polyval_ascending(p1, lam) * d2u
                )
            mser = np.concatenate([[0.0], self._minus])  # series in v with no constant
            m1 = _polyder_ascending(mser, 1)
            with np.errstate(divide="ignore", invalid="ignore"):
                v = 1.0 / lam
            dv = -du / lam ** 2
            if order == 1:
                lower = _TWO_PI_I * _polyval_ascending(m1, v) * dv
            else:
                m2 = _polyder_ascending(mser, 2)
                d2v = -d2u / lam ** 2 + 2.0 * du ** 2 / lam ** 3
                lower = _TWO_PI_I * (
                    _polyval_ascending(m2, v) * dv ** 2 + _polyval_ascending(m1, v) * d2v
                )
            return np.where(z.imag > 0, upper, lower)
        if isinstance(m, SqrtMeasure):
            t = maps.from_interval(m.a, m.b, z)
            scale = 2.0 / (m.b - m.a)
            s = maps.joukowsky_inv(t)
            coeffs = np.pi * np.concatenate([[0.0], m.coeffs])
            f1 = _polyval_ascending(_polyder_ascending(coeffs, 1), s)
            s1 = maps.joukowsky_inv_d1(t) * scale
            if order == 1:
                return f1 * s1
            f2 = _polyval_ascending(_polyder_ascending(coeffs, 2), s)
            s2 = maps.joukowsky_inv_d2(t) * scale ** 2
            return f2 * s1 ** 2 + f1 * s2
        if isinstance(m, HalfSqrtMeasure):
            q = maps.from_halfline(m.a, z)
            s = maps.joukowsky_inv(q)
            coeffs = np.pi * np.concatenate([[0.0], m.coeffs])
            f1 = _polyval_ascending(_polyder_ascending(coeffs, 1), s)
            q1 = maps.from_halfline_d1(m.a, z)
            s1 = maps.joukowsky_inv_d1(q) * q1
            if order == 1:
                return f1 * s1
            f2 = _polyval_ascending(_polyder_ascending(coeffs, 2), s)
            q2 = maps.from_halfline_d2(m.a, z)
            s2 = maps.joukowsky_inv_d2(q) * q1 ** 2 + maps.joukowsky_inv_d1(q) * q2
            return f2 * s1 ** 2 + f1 * s2
        if isinstance(m, MarchenkoPastur):
            t = 0.5 * (z - 2.0)
            s = maps.joukowsky_inv(t)
            s1 = 0.5 * maps.joukowsky_inv_d1(t)
            if order == 1:
                return s1 / z - (1.0 + s) / z ** 2
            s2 = 0.25 * maps.joukowsky_inv_d2(t)
            return s2 / z - 2.0 * s1 / z ** 2 + 2.0 * (1.0 + s) / z ** 3
        if isinstance(m, EllipseMeasure):
            t = maps.from_interval(m.a, m.b, z)
            v = maps.joukowsky_inv(t) / m.radius
            inside = np.abs(v) <= 1.0
            if not np.all(inside):
                direct = self._source_eval._dg(z, order)
                series = self._ellipse_deriv(np.where(inside, z, maps.to_interval(m.a, m.b, 2.0)), order)
                return np.where(inside, series, direct)
            return self._ellipse_deriv(z, order)
        if isinstance(m, TransformSource):
            return m.dfn(z, order)
        raise TypeError(f"unknown measure type {type(m).__name__}")

    def _ellipse_deriv(self, z, order):
        m = self.measure
        t = maps.from_interval(m.a, m.b, z)
        scale = 2.0 / (m.b - m.a)
        v = maps.joukowsky_inv(t) / m.radius
        coeffs = np.concatenate([[0.0], m.taylor])
        f1 = _polyval_ascending(_polyder_ascending(coeffs, 1), v)
        v1 = maps.joukowsky_inv_d1(t) * scale / m.radius
        if order == 1:
            return f1 * v1
        f2 = _polyval_ascending(_polyder_ascending(coeffs, 2), v)
        v2 = maps.joukowsky_inv_d2(t) * scale ** 2 / m.radius
        return f2 * v1 ** 2 + f1 * v2

    # -- scalar API -----------------------------------------------------------

    def cauchy(self, z):
        """G_mu(z) for a single point off the support."""
        z = complex(z)
        if bool(self._on_support_mask(np.asarray(z, dtype=complex))):
            raise OnSupport(f"{z} lies on the support")
        return complex(self._g(np.asarray(z, dtype=complex)))

    def derivative(self, z, order=1):
        """G' or G'' at a single point off the support."""
        z = complex(z)
        if bool(self._on_support_mask(np.asarray(z, dtype=complex))):
            raise OnSupport(f"{z} lies on the support")
        return complex(self._dg(np.asarray(z, dtype=complex), order))

    def t_transform(self, z):
        """T_mu(z) = z G_mu(z) - mass."""
        z = complex(z)
        return z * self.cauchy(z) - self.mass

    def t_transform_many(self, z):
        z = np.asarray(z, dtype=complex)
        return z * self.cauchy_many(z) - self.mass

    def t_derivative_many(self, z, order=1):
        z = np.asarray(z, dtype=complex)
        if order == 1:
            return self.cauchy_many(z) + z * self.derivative_many(z, 1)
        return 2.0 * self.derivative_many(z, 1) + z * self.derivative_many(z, 2)

    def cauchy_boundary(self, x, side):
        """Limiting value G^+/G^- at a point of a density-carrying support."""
        if side not in ("above", "below"):
            raise ValueError("side must be 'above' or 'below'")
        m = self.measure
        x = float(x)
        if isinstance(m, (PointMass, AtomSum)):
            raise AtomDensityUndefined("atoms have no boundary values")
        if isinstance(m, EllipseMeasure):
            return self._source_eval.cauchy_boundary(x, side)
        sign = -1.0 if side == "above" else 1.0
        if isinstance(m, SmoothMeasure):
            lam = maps.mobius(x)
            if side == "above":
                return complex(-_TWO_PI_I * (_polyval_ascending(self._plus, lam) - self._alt))
            v = 1.0 / lam
            return complex(_TWO_PI_I * (v * _polyval_ascending(self._minus, v) + self._alt))
        if isinstance(m, UniformMeasure):
            if not (m.a < x < m.b):
                raise OnSupport(f"{x} is not interior to the support")
            return complex(
                (np.log((x - m.a) / (m.b - x)) + sign * 1j * np.pi) / (m.b - m.a)
            )
        if isinstance(m, SqrtMeasure):
            t = maps.from_interval(m.a, m.b, x)
            if not (-1.0 < t < 1.0):
                raise OnSupport(f"{x} is not interior to the support")
            s = t + sign * 1j * np.sqrt(1.0 - t * t)
            return complex(np.pi * s * _polyval_ascending(m.coeffs, s))
        if isinstance(m, HalfSqrtMeasure):
            t = maps.from_halfline(m.a, x)
            if not (-1.0 < t < 1.0):
                raise OnSupport(f"{x} is not interior to the support")
            s = t + sign * 1j * np.sqrt(1.0 - t * t)
            total = np.sum(m.coeffs)
            return complex(np.pi * (s * _polyval_ascending(m.coeffs, s) - total))
        if isinstance(m, MarchenkoPastur):
            if not (0.0 < x < 4.0):
                raise OnSupport(f"{x} is not interior to the support")
            t = 0.5 * (x - 2.0)
            s = t + sign * 1j * np.sqrt(1.0 - t * t)
            return complex((1.0 + s) / x)
        raise TypeError(f"unknown measure type {type(m).__name__}")

    def edge_images(self):
        """(G at min supp, G at max supp) as extended reals.

        Finite only where the measure has a square-root edge; measures whose
        transform blows up at an edge contribute -inf/+inf, which drops out
        of bracket max/min computations.
        """
        m = self.measure
        if isinstance(m, SqrtMeasure):
            lo = np.pi * -1.0 * _polyval_ascending(m.coeffs, np.asarray(-1.0 + 0j))
            hi = np.pi * _polyval_ascending(m.coeffs, np.asarray(1.0 + 0j))
            return (float(np.real(lo)), float(np.real(hi)))
        if isinstance(m, HalfSqrtMeasure):
            total = np.sum(m.coeffs)
            lo = np.pi * (-1.0 * _polyval_ascending(m.coeffs, np.asarray(-1.0 + 0j)) - total)
            return (float(np.real(lo)), np.inf)
        if isinstance(m, MarchenkoPastur):
            return (-np.inf, 0.5)
        if isinstance(m, EllipseMeasure):
            return self._source_eval.edge_images()
        return (-np.inf, np.inf)
