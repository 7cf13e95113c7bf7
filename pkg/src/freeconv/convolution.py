"""Free additive, multiplicative and compressive convolution drivers.

Each driver builds a pointwise inverse-transform oracle for the output
measure from the inputs' inverse transforms, generates and prunes a point
cloud, and recovers the output via least squares:

* addition:        G_C^{-1}(y) = G_A^{-1}(y) + G_B^{-1}(y) - 1/y
* multiplication:  T_C^{-1}(y) = T_A^{-1}(y) T_B^{-1}(y) y/(1+y), recovered
  as the square-root measure x d(mu_A x mu_B) and divided by x afterwards
* compression:     G_C^{-1}(y) = G_mu^{-1}(alpha y) + 1/y - 1/(alpha y)
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import maps, measures, recovery
from .cauchy import CauchyEvaluator, DEFAULT_ELLIPSE_RADIUS, fit_ellipse, fit_sqrt
from .errors import (
    DivisionByXUnstable,
    EmptyCloud,
    NoSignChange,
    SupportNotPositive,
)
from .inversion import Inverter, TURNING_TOL
from .measures import (
    AtomSum,
    EllipseMeasure,
    MarchenkoPastur,
    PointMass,
    SqrtMeasure,
    TransformSource,
    UniformMeasure,
    times_x,
)
from .recovery import InverseOracle, PointCloud, RecoveredMeasure, compute_measure

DEFAULT_N = 40
_MAX_CLOUD_ATTEMPTS = 5


@dataclass(frozen=True)
class ConvolutionRequest:
    """Knobs for one convolution run.

    ``cloud`` is the per-dimension cloud parameter m (None = automatic),
    ``form`` one of 'auto' | 'smooth' | 'sqrt', ``bracket`` an optional
    (a0, b0) override for the support search.
    """

    operation: str = ""
    n: int = DEFAULT_N
    cloud: int | None = None
    form: str = "auto"
    bracket: tuple | None = None

    def __post_init__(self):
        if self.form not in ("auto", "smooth", "sqrt"):
            raise ValueError("form must be 'auto', 'smooth' or 'sqrt'")
        if self.n < 1:
            raise ValueError("n must be positive")


def _pad_interval(lo, hi, frac=0.1):
    width = hi - lo
    pad = frac * width if width > 0 else max(1.0, abs(lo)) * frac
    return (lo - pad, hi + pad)


def prepare_invertible(measure, r=DEFAULT_ELLIPSE_RADIUS):
    """Replace measures lacking a direct inverse by ellipse wrappers."""
    if isinstance(measure, AtomSum):
        lo, hi = measures.support_interval(measure)
        return fit_ellipse(measure, _pad_interval(lo, hi), r=r)
    return measure


class _InputInverse:
    """G^{-1} with derivatives for one input measure."""

    def __init__(self, measure):
        self.original = measure
        self.prepared = prepare_invertible(measure)
        self.evaluator = CauchyEvaluator(self.prepared)
        self.inverter = Inverter(self.prepared, self.evaluator)

    def eval_many(self, ys):
        ys = np.asarray(ys, dtype=complex)
        results = self.inverter.solve_many(ys)
        ok = np.array([r.multiplicity == 1 for r in results], dtype=bool)
        z = np.array(
            [r.preimages[0] if r.multiplicity == 1 else 1j for r in results],
            dtype=complex,
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            g1 = self.evaluator.derivative_many(z, 1)
            g2 = self.evaluator.derivative_many(z, 2)
            d1 = 1.0 / g1
            d2 = -g2 / g1 ** 3
        # a preimage at a square-root support edge has G' = inf there, so the
        # inverse derivative is exactly 0 (quadratic turning point of G^-1)
        bad = ~(np.isfinite(d1) & np.isfinite(d2))
        if np.any(bad):
            lo, hi = self.evaluator.support
            scale = 1.0 + max(abs(x) for x in (lo, hi) if np.isfinite(x)) if np.isfinite(lo) or np.isfinite(hi) else 1.0
            at_edge = np.zeros_like(bad)
            for edge in (lo, hi):
                if np.isfinite(edge):
                    at_edge |= np.abs(z - edge) <= 1e-8 * scale
            d1 = np.where(bad & at_edge, 0.0, d1)
            d2 = np.where(bad & at_edge, 0.0, d2)
            ok = ok & (at_edge | ~bad)
        ok = ok & np.isfinite(z)
        return z, d1, d2, ok

    def edge_images(self):
        return self.evaluator.edge_images()


class _PointTInverse:
    """Closed-form T^{-1} for a point mass: T(z) = w a/(z - a)."""

    def __init__(self, measure):
        self.original = measure
        self.a = measure.location
        self.w = measure.weight

    def eval_many(self, ys):
        ys = np.asarray(ys, dtype=complex)
        wa = self.w * self.a
        z = self.a + wa / ys
        return z, -wa / ys ** 2, 2.0 * wa / ys ** 3, np.ones(ys.shape, dtype=bool)

    def edge_images(self):
        return (-np.inf, np.inf)


def _t_inverse(measure):
    """Inverse T-transform machinery (the x dmu route) for one input."""
    if isinstance(measure, PointMass):
        return _PointTInverse(measure)
    if isinstance(measure, (SqrtMeasure, MarchenkoPastur)):
        return _InputInverse(times_x(measure))
    if isinstance(measure, (AtomSum, UniformMeasure, EllipseMeasure)):
        ev = CauchyEvaluator(measure)
        lo, hi = measures.support_interval(measure)
        first_moment = measures.moment(measure, 1)
        src = TransformSource(
            fn=ev.t_transform_many,
            dfn=ev.t_derivative_many,
            support=(lo, hi),
            total_mass=first_moment,
        )
        em = fit_ellipse(src, _pad_interval(lo, hi))
        return _InputInverse(em)
    raise SupportNotPositive(
        f"free multiplication is not supported for {type(measure).__name__} inputs"
    )


# ---------------------------------------------------------------------------
# oracles


class AdditionOracle(InverseOracle):
    def __init__(self, inv_a, inv_b):
        self.inv_a = inv_a
        self.inv_b = inv_b

    def evaluate_many(self, ys):
        ys = np.asarray(ys, dtype=complex)
        ga, da1, da2, oka = self.inv_a.eval_many(ys)
        gb, db1, db2, okb = self.inv_b.eval_many(ys)
        val = ga + gb - 1.0 / ys
        d1 = da1 + db1 + 1.0 / ys ** 2
        d2 = da2 + db2 - 2.0 / ys ** 3
        return val, d1, d2, oka & okb


class CompressionOracle(InverseOracle):
    def __init__(self, inv_mu, alpha):
        self.inv_mu = inv_mu
        self.alpha = float(alpha)

    def evaluate_many(self, ys):
        ys = np.asarray(ys, dtype=complex)
        al = self.alpha
        g, d1, d2, ok = self.inv_mu.eval_many(al * ys)
        val = g + 1.0 / ys - 1.0 / (al * ys)
        dv1 = al * d1 - 1.0 / ys ** 2 + 1.0 / (al * ys ** 2)
        dv2 = al ** 2 * d2 + 2.0 / ys ** 3 - 2.0 / (al * ys ** 3)
        return val, dv1, dv2, ok


class MultiplicationOracle(InverseOracle):
    def __init__(self, tinv_a, tinv_b):
        self.tinv_a = tinv_a
        self.tinv_b = tinv_b

    def evaluate_many(self, ys):
        ys = np.asarray(ys, dtype=complex)
        p, p1, p2, oka = self.tinv_a.eval_many(ys)
        q, q1, q2, okb = self.tinv_b.eval_many(ys)
        h = ys / (1.0 + ys)
        h1 = 1.0 / (1.0 + ys) ** 2
        h2 = -2.0 / (1.0 + ys) ** 3
        val = p * q * h
        d1 = p1 * q * h + p * q1 * h + p * q * h1
        d2 = (
            p2 * q * h + p * q2 * h + p * q * h2
            + 2.0 * (p1 * q1 * h + p1 * q * h1 + p * q1 * h1)
        )
        return val, d1, d2, oka & okb


# ---------------------------------------------------------------------------
# drivers


def _pick_form(requested, inputs):
    if requested != "auto":
        return requested
    return "sqrt" if all(measures.is_compact(m) for m in inputs) else "smooth"


def _default_cloud(n):
    # angle count must exceed the series order or the circle Vandermonde
    # aliases; the oversampling target then follows automatically
    return max(16, int(np.ceil(1.1 * n)) + 6)


def _gather_cloud(source_inv, oracle, request, transform="cauchy"):
    """Generate and prune clouds, growing m until the target size is met.

    The oracle's single-valuedness flag subsumes the cloud self-check, so
    generation runs with ``selfcheck=False``.
    """
    n = request.n
    m = request.cloud or _default_cloud(n)
    target = recovery.OVER_FACTOR * n
    raw = pruned = None
    for _ in range(_MAX_CLOUD_ATTEMPTS):
        raw = recovery.generate_cloud(
            source_inv.prepared,
            m,
            evaluator=source_inv.evaluator,
            selfcheck=False,
            transform=transform,
        )
        pruned = recovery.prune(oracle, raw)
        if len(pruned) >= target or request.cloud is not None:
            break
        m = int(m * 1.6) + 1
    return raw, pruned


def _bracket_for(request, inverses):
    if request.bracket is not None:
        return request.bracket
    lows, highs = zip(*(inv.edge_images() for inv in inverses))
    return (max(lows), min(highs))


def _finish(oracle, raw, pruned, form, n, bracket):
    result = compute_measure(oracle, pruned, form, n, bracket=bracket)
    diag = replace(result.diagnostics, raw_count=len(raw))
    return RecoveredMeasure(result.measure, result.residual, diag)


def free_add(mu_a, mu_b, request=None):
    """Free additive convolution mu_a boxplus mu_b."""
    req = request or ConvolutionRequest("add")
    inv_a = _InputInverse(mu_a)
    inv_b = _InputInverse(mu_b)
    oracle = AdditionOracle(inv_a, inv_b)
    form = _pick_form(req.form, [mu_a, mu_b])
    bracket = _bracket_for(req, [inv_a, inv_b]) if form == "sqrt" else None
    raw, pruned = _gather_cloud(inv_a, oracle, req)
    return _finish(oracle, raw, pruned, form, req.n, bracket)


def free_compress(alpha, mu, request=None):
    """Free compression alpha boxdot mu for alpha in (0, 1]."""
    if not (0.0 < alpha <= 1.0):
        raise ValueError("compression ratio must lie in (0, 1]")
    req = request or ConvolutionRequest("compress")
    inv = _InputInverse(mu)
    oracle = CompressionOracle(inv, alpha)
    form = _pick_form(req.form, [mu])
    bracket = None
    if form == "sqrt":
        if req.bracket is not None:
            bracket = req.bracket
        else:
            lo, hi = inv.edge_images()
            bracket = (lo / alpha, hi / alpha)
    raw, pruned = _gather_cloud(inv, oracle, req)
    return _finish(oracle, raw, pruned, form, req.n, bracket)


def free_multiply(mu_a, mu_b, request=None):
    """Free multiplicative convolution mu_a boxtimes mu_b.

    Recovery produces the square-root measure x d(mu_a boxtimes mu_b); when
    the recovered support stays away from zero, the output is divided by x
    and renormalized, otherwise the x-weighted measure is returned with the
    ``x_weighted`` diagnostic flag set.
    """
    req = request or ConvolutionRequest("multiply")
    for m in (mu_a, mu_b):
        lo, _ = measures.support_interval(m)
        if lo < -1e-12:
            raise SupportNotPositive(
                f"support of {type(m).__name__} starts at {lo}; must be >= 0"
            )
        if isinstance(m, PointMass) and abs(m.location) < 1e-300:
            raise ValueError("free multiplication by the point mass at 0 is degenerate")
    tinv_a = _t_inverse(mu_a)
    tinv_b = _t_inverse(mu_b)
    oracle = MultiplicationOracle(tinv_a, tinv_b)
    bracket = _bracket_for(req, [tinv_a, tinv_b])
    source = tinv_a if isinstance(tinv_a, _InputInverse) else tinv_b
    if not isinstance(source, _InputInverse):
        raise ValueError("free multiplication of two point masses is closed-form; not supported")
    # the x dmu representation turns T_A into a plain Cauchy transform, so
    # the cloud y = T_A(z) is the ordinary cloud of the prepared measure
    raw, pruned = _gather_cloud(source, oracle, req)
    nu_result = _finish(oracle, raw, pruned, "sqrt", req.n, bracket)
    return _divide_out_x(nu_result, req.n)


def x_weighted_density(nu, x):
    """Density of mu when ``nu`` represents x dmu (flagged outputs)."""
    x = np.asarray(x, dtype=float)
    out = measures.density(nu, x) / x
    return out if out.ndim else float(out)


def x_weighted_cdf(nu, gridsize=4001):
    """CDF callable of mu when ``nu`` represents x dmu on (a, b), a >= 0.

    Integrates nu(x)/x on a sqrt-substituted grid, which tames the
    inverse-square-root edge density at a hard edge a = 0.
    """
    a = max(nu.a, 0.0)
    u = np.linspace(np.sqrt(a), np.sqrt(nu.b), gridsize)
    x = u * u
    inner = x > max(a, 0.0)
    vals = np.where(inner, nu.factor(x) * _sqrt_weight(nu, x), 0.0)
    # d mu = (nu(x)/x) dx = 2 nu(u^2)/u du under x = u^2
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(u > 0, 2.0 * vals / u, 0.0)
    from scipy.integrate import cumulative_trapezoid

    cum = cumulative_trapezoid(integrand, u, initial=0.0)
    if cum[-1] > 0:
        cum = cum / cum[-1]

    def cdf(t):
        t = np.asarray(t, dtype=float)
        out = np.interp(np.sqrt(np.clip(t, 0.0, None)), u, cum, left=0.0, right=1.0)
        return out if out.ndim else float(out)

    return cdf


def _sqrt_weight(nu, x):
    return 2.0 * np.sqrt(np.maximum(x - nu.a, 0.0)) * np.sqrt(np.maximum(nu.b - x, 0.0)) / (nu.b - nu.a)


def _divide_out_x(nu_result, n):
    nu = nu_result.measure
    a, b = nu.a, nu.b
    if a <= 1e-6 * (b - a):
        diag = replace(nu_result.diagnostics, x_weighted=True)
        return RecoveredMeasure(nu, nu_result.residual, diag)
    divided = fit_sqrt(
        lambda x: float(nu.factor(x)) / x, (a, b), max(n, len(nu.coeffs)) + 8, factor=True
    )
    total = measures.mass(divided)
    if not np.isfinite(total) or total <= 0:
        raise DivisionByXUnstable(f"divided measure has mass {total}")
    out = SqrtMeasure(a, b, divided.coeffs / total)
    grid = maps.to_interval(a, b, np.linspace(-0.999, 0.999, 2001))
    dens = measures.density(out, grid)
    if np.min(dens) < -measures.TOL_NEG:
        raise DivisionByXUnstable(f"divided density dips to {np.min(dens):.3e}")
    return RecoveredMeasure(out, nu_result.residual, nu_result.diagnostics)
