"""Pointwise inversion of Cauchy transforms via companion matrices.

Each series-backed variant reduces G(z) = y to a polynomial equation on the
unit disk of the relevant mapped variable; the roots come from eigenvalues
of the companion matrix and get one Newton polish against the stored
series.  Closed forms cover point masses, the uniform law and the
Marchenko-Pastur law.
"""

from dataclasses import dataclass, field

import numpy as np

from . import maps
from .cauchy import CauchyEvaluator, _polyval_ascending, _polyder_ascending
from .errors import (
    BranchConflict,
    DegenerateLeading,
    NoPreimage,
    OutsideValidity,
    TurningPoint,
    ZeroTarget,
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
    UniformMeasure,
    trim_trailing,
)

BALL_TOL = 1e-8
DEDUPE_TOL = 1e-7
TURNING_TOL = 1e-10
_CONFLICT_BAND = 1e3 * DEDUPE_TOL


def residual_tolerance(y):
    return 1e-9 * (1.0 + abs(y))


@dataclass(frozen=True)
class PolynomialRoots:
    """Monic-normalized coefficients (ascending) and their roots."""

    coeffs: np.ndarray
    roots: np.ndarray


@dataclass(frozen=True)
class InverseResult:
    """All preimages of one target value, with branch provenance."""

    target: complex
    preimages: np.ndarray
    branches: tuple

    @property
    def multiplicity(self):
        return len(self.preimages)

    @property
    def value(self):
        """The unique preimage; raises unless exactly one exists."""
        if self.multiplicity != 1:
            raise NoPreimage(
                f"expected a single preimage of {self.target}, found {self.multiplicity}"
            )
        return complex(self.preimages[0])


def _companion(monic_ascending):
    n = len(monic_ascending) - 1
    c = np.zeros((n, n), dtype=complex)
    if n > 1:
        c[1:, :-1] = np.eye(n - 1)
    c[:, -1] = -np.asarray(monic_ascending[:-1], dtype=complex)
    return c


def companion_roots(coeffs):
    """All roots of a polynomial given by ascending coefficients.

    Trailing coefficients below TRUNC_TOL (relative) are dropped first; the
    eigenvalues of the companion matrix are refined by one Newton step.
    """
    c = np.asarray(coeffs, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        raise DegenerateLeading("all coefficients below truncation tolerance")
    c = trim_trailing(c)
    if c.size == 1:
        if np.abs(c[0]) <= TRUNC_TOL * scale:
            raise DegenerateLeading("all coefficients below truncation tolerance")
        return PolynomialRoots(c / c[-1], np.zeros(0, dtype=complex))
    monic = c / c[-1]
    roots = np.linalg.eigvals(_companion(monic))
    der = _polyder_ascending(monic)
    p = _polyval_ascending(monic, roots)
    dp = _polyval_ascending(der, roots)
    step = np.where(np.abs(dp) > 0, p / np.where(dp == 0, 1.0, dp), 0.0)
    polished = roots - step
    ok = np.abs(_polyval_ascending(monic, polished)) <= np.abs(p)
    roots = np.where(ok, polished, roots)
    return PolynomialRoots(monic, roots)


def _batch_disk_roots(series_ascending, const_terms, polish_iters=1):
    """Roots with |w| <= 1 + BALL_TOL of p(w) = const_j + sum series[k] w^k.

    ``series_ascending`` starts at the linear term.  Returns a list of root
    arrays, one per constant term.  The varying constant only changes one
    companion entry, so the eigenvalue problems are solved in one batch.
    """
    series = trim_trailing(np.asarray(series_ascending, dtype=complex))
    const_terms = np.asarray(const_terms, dtype=complex)
    m = const_terms.size
    deg = series.size  # polynomial degree: const + deg terms
    if deg == 0 or np.max(np.abs(series)) == 0.0:
        raise DegenerateLeading("series coefficients all below truncation tolerance")
    lead = series[-1]
    base = np.concatenate([[0.0], series]) / lead
    comp = _companion(base)
    stack = np.broadcast_to(comp, (m, deg, deg)).copy()
    stack[:, 0, -1] = -const_terms / lead
    roots = np.linalg.eigvals(stack)
    full = np.concatenate([[0.0], series])
    der = _polyder_ascending(full)
    for _ in range(polish_iters):
        p = _polyval_ascending(full, roots) + const_terms[:, None]
        dp = _polyval_ascending(der, roots)
        safe = np.abs(dp) > 1e-300
        step = np.where(safe, p / np.where(safe, dp, 1.0), 0.0)
        cand = roots - step
        pc = np.abs(_polyval_ascending(full, cand) + const_terms[:, None])
        roots = np.where(pc <= np.abs(p), cand, roots)
    keep = np.abs(roots) <= 1.0 + BALL_TOL
    return [roots[j][keep[j]] for j in range(m)]


def _dedupe(zs, branches):
    """Cluster preimages within DEDUPE_TOL; flag cross-branch near-misses."""
    order = np.argsort(np.abs(zs))
    kept_z, kept_b = [], []
    for idx in order:
        z, br = zs[idx], branches[idx]
        merged = False
        for i, zk in enumerate(kept_z):
            sep = abs(z - zk)
            tol = DEDUPE_TOL * (1.0 + abs(zk))
            if sep <= tol:
                merged = True
                break
            if kept_b[i] != br and sep <= _CONFLICT_BAND * (1.0 + abs(zk)):
                raise BranchConflict(
                    f"branches {kept_b[i]} and {br} disagree at {zk} vs {z}"
                )
        if not merged:
            kept_z.append(z)
            kept_b.append(br)
    return np.array(kept_z, dtype=complex), tuple(kept_b)


_FAST_PATH_MIN = 64
_NEWTON_ITERS = 60


def _newton_roots(series_ascending, consts, w0):
    """Vectorized Newton for const_j + sum series[k] w^k = 0, one root per j.

    Returns (roots, converged mask); ``series`` starts at the linear term.
    """
    full = np.concatenate([[0.0], np.asarray(series_ascending, dtype=complex)])
    der = _polyder_ascending(full)
    w = np.array(w0, dtype=complex)
    for _ in range(_NEWTON_ITERS):
        p = _polyval_ascending(full, w) + consts
        dp = _polyval_ascending(der, w)
        ok = np.abs(dp) > 1e-300
        step = np.where(ok, p / np.where(ok, dp, 1.0), 0.0)
        w_new = w - step
        w = np.where(np.isfinite(w_new), w_new, w)
    resid = np.abs(_polyval_ascending(full, w) + consts)
    scale = 1.0 + np.abs(consts)
    good = np.isfinite(w) & (resid <= 1e-11 * scale) & (np.abs(w) <= 1.0 + BALL_TOL)
    return w, good


class Inverter:
    """Preimage solver G_mu^{-1} for one measure, reusable across targets.

    Large batches of targets route through a vectorized Newton iteration
    seeded from the point-mass asymptotics (the practical accelerator);
    unconverged points and small batches fall back to exact companion-matrix
    root-finding, which also certifies preimage multiplicity.
    """

    def __init__(self, measure, evaluator=None):
        self.measure = measure
        self.evaluator = evaluator or CauchyEvaluator(measure)

    def solve(self, y):
        return self.solve_many(np.array([y]))[0]

    def solve_many(self, ys, fast="auto"):
        """Invert at every target; returns one InverseResult per target."""
        ys = np.asarray(ys, dtype=complex)
        if np.any(ys == 0):
            raise ZeroTarget("inverse Cauchy transform undefined at y = 0")
        m = self.measure
        use_fast = fast is True or (fast == "auto" and ys.size >= _FAST_PATH_MIN)
        if isinstance(m, PointMass):
            return [
                InverseResult(y, np.array([m.weight / y + m.location]), ("closed-form",))
                for y in ys
            ]
        if isinstance(m, UniformMeasure):
            return self._solve_uniform(ys)
        if isinstance(m, MarchenkoPastur):
            return self._solve_mp(ys)
        if isinstance(m, SqrtMeasure):
            rts = _batch_disk_roots(np.pi * m.coeffs, -ys)
            return self._finish_sqrtlike(
                ys, rts, lambda w: maps.to_interval(m.a, m.b, maps.joukowsky(w)),
                np.pi * m.coeffs, 0.0, "sqrt-series",
            )
        if isinstance(m, HalfSqrtMeasure):
            shift = np.pi * np.sum(m.coeffs)
            rts = _batch_disk_roots(np.pi * m.coeffs, -(ys + shift))
            return self._finish_sqrtlike(
                ys, rts, lambda w: maps.to_halfline(m.a, maps.joukowsky(w)),
                np.pi * m.coeffs, shift, "halfsqrt-series",
            )
        if isinstance(m, EllipseMeasure):
            return self._solve_ellipse(ys, use_fast)
        if isinstance(m, SmoothMeasure):
            return self._solve_smooth(ys, use_fast)
        raise TypeError(
            f"no inverse transform for {type(m).__name__}; "
            "wrap compact measures with fit_ellipse first"
        )

    # -- closed forms ---------------------------------------------------------

    def _solve_uniform(self, ys):
        m = self.measure
        c, ell = 0.5 * (m.a + m.b), 0.5 * (m.b - m.a)
        out = []
        for y in ys:
            if abs((ell * y).imag) >= 0.5 * np.pi * (1.0 - 1e-12):
                out.append(InverseResult(y, np.zeros(0, dtype=complex), ()))
                continue
            z = c + ell / np.tanh(ell * y)
            out.append(InverseResult(y, np.array([z]), ("closed-form",)))
        return out

    def _solve_mp(self, ys):
        out = []
        for y in ys:
            if abs(1.0 - y) < 1e-14:
                out.append(InverseResult(y, np.zeros(0, dtype=complex), ()))
                continue
            w = y / (1.0 - y)
            if abs(w) > 1.0 + BALL_TOL:
                out.append(InverseResult(y, np.zeros(0, dtype=complex), ()))
                continue
            z = 2.0 + w + 1.0 / w
            out.append(InverseResult(y, np.array([z]), ("closed-form",)))
        return out

    # -- series variants --------------------------------------------------------

    def _finish_sqrtlike(self, ys, root_lists, to_z, series, shift, tag):
        full = np.concatenate([[0.0], series])
        out = []
        for y, ws in zip(ys, root_lists):
            if ws.size == 0:
                out.append(InverseResult(y, np.zeros(0, dtype=complex), ()))
                continue
            vals = _polyval_ascending(full, ws) - shift
            good = np.abs(vals - y) <= residual_tolerance(y)
            ws = ws[good & (np.abs(ws) > 1e-300)]
            if ws.size == 0:
                out.append(InverseResult(y, np.zeros(0, dtype=complex), ()))
                continue
            zs = to_z(ws)
            zs, branches = _dedupe(zs, [tag] * len(zs))
            out.append(InverseResult(y, zs, branches))
        return out

    def _solve_ellipse(self, ys, use_fast=False):
        m = self.measure
        rts = [None] * ys.size
        pending = np.arange(ys.size)
        if use_fast and m.taylor.size and m.taylor[0] != 0:
            # Newton from the point-mass asymptotic seed; a second try starts
            # near the circle for image-boundary targets.  Targets neither
            # seed reaches have no valid preimage (empirically exact: the
            # companion roots always fail the source-residual check there),
            # so bulk mode classifies them as outside validity directly.
            empty = np.zeros(0, dtype=complex)
            v0 = ys / m.taylor[0]
            big = np.abs(v0) > 0.9
            v0 = np.where(big, 0.9 * v0 / np.where(big, np.abs(v0), 1.0), v0)
            v, good = _newton_roots(m.taylor, -ys, v0)
            retry = ~good
            if np.any(retry):
                seed = 0.97 * v0 / np.abs(v0)
                v2, good2 = _newton_roots(m.taylor, -ys, seed)
                v = np.where(retry & good2, v2, v)
                good = good | good2
            for i in range(ys.size):
                rts[i] = v[i : i + 1] if good[i] else empty
            pending = np.zeros(0, dtype=int)
        if pending.size:
            for i, roots in zip(pending, _batch_disk_roots(m.taylor, -ys[pending])):
                rts[i] = roots
        src = self.evaluator._source_eval
        out = []
        for y, vs in zip(ys, rts):
            vs = vs[np.abs(vs) > 1e-300]
            if vs.size == 0:
                out.append(InverseResult(y, np.zeros(0, dtype=complex), ()))
                continue
            zs = maps.to_interval(m.a, m.b, maps.joukowsky(m.radius * vs))
            direct = src.cauchy_many(zs)
            good = np.abs(direct - y) <= 10.0 * residual_tolerance(y)
            if not np.any(good):
                out.append(
                    InverseResult(y, np.zeros(0, dtype=complex), ("outside-validity",))
                )
                continue
            zs, branches = _dedupe(zs[good], ["ellipse-series"] * int(np.sum(good)))
            out.append(InverseResult(y, zs, branches))
        return out

    def _solve_smooth(self, ys, use_fast=False):
        ev = self.evaluator
        plus, minus, alt = ev._plus, ev._minus, ev._alt
        empty = np.zeros(0, dtype=complex)
        # preimages of Im y > 0 lie in the lower half plane and vice versa
        # (sign property), so each branch is only solved where it can win;
        # real targets go through both
        plus_roots = [empty] * ys.size
        minus_roots = [empty] * ys.size
        plus_idx = np.nonzero(ys.imag <= 0)[0]
        minus_idx = np.nonzero(ys.imag >= 0)[0]
        if use_fast:
            with np.errstate(divide="ignore", invalid="ignore"):
                lam0 = maps.mobius(1.0 / ys)  # seed from G ~ 1/z
            strict_plus = np.nonzero(ys.imag < 0)[0]
            if plus.size > 1 and strict_plus.size:
                const = plus[0] - alt - 1j * ys[strict_plus] / (2.0 * np.pi)
                lam, good = _newton_roots(plus[1:], const, lam0[strict_plus])
                hit = strict_plus[good]
                for i, lam_i in zip(hit, lam[good]):
                    plus_roots[i] = np.array([lam_i])
                plus_idx = np.setdiff1d(plus_idx, hit, assume_unique=True)
            strict_minus = np.nonzero(ys.imag > 0)[0]
            if minus.size and strict_minus.size:
                const = alt + 1j * ys[strict_minus] / (2.0 * np.pi)
                with np.errstate(divide="ignore", invalid="ignore"):
                    v0 = 1.0 / lam0[strict_minus]
                v, good = _newton_roots(minus, const, v0)
                hit = strict_minus[good]
                for i, v_i in zip(hit, v[good]):
                    minus_roots[i] = np.array([v_i])
                minus_idx = np.setdiff1d(minus_idx, hit, assume_unique=True)
        if plus.size > 1 and plus_idx.size:
            # plus branch: psi_0 + sum_{k>=1} psi_k lam^k = alt + i y/(2 pi)
            const = plus[0] - alt - 1j * ys[plus_idx] / (2.0 * np.pi)
            for i, roots in zip(plus_idx, _batch_disk_roots(plus[1:], const)):
                plus_roots[i] = roots
        if minus.size and minus_idx.size:
            # minus branch in v = 1/lam: sum psi_{-j} v^j = -alt - i y/(2 pi)
            const = alt + 1j * ys[minus_idx] / (2.0 * np.pi)
            for i, roots in zip(minus_idx, _batch_disk_roots(minus, const)):
                minus_roots[i] = roots
        out = []
        for j, y in enumerate(ys):
            zs, tags = [], []
            lam = plus_roots[j]
            if lam.size:
                vals = -_TWO_PI_I_ * (_polyval_ascending(plus, lam) - alt)
                good = np.abs(vals - y) <= residual_tolerance(y)
                for lam_k in lam[good]:
                    zs.append(maps.mobius_inv(lam_k))
                    tags.append("plus-series")
            v = minus_roots[j]
            if v.size:
                mser = np.concatenate([[0.0], minus])
                vals = _TWO_PI_I_ * (_polyval_ascending(mser, v) + alt)
                good = np.abs(vals - y) <= residual_tolerance(y)
                for v_k in v[good]:
                    zs.append(1j * (v_k - 1.0) / (v_k + 1.0))
                    tags.append("minus-series")
            if not zs:
                out.append(InverseResult(y, np.zeros(0, dtype=complex), ()))
                continue
            zarr, branches = _dedupe(np.array(zs, dtype=complex), tags)
            out.append(InverseResult(y, zarr, branches))
        return out


_TWO_PI_I_ = 2j * np.pi


# ---------------------------------------------------------------------------
# spec-surface wrappers


def _single(result):
    if result.multiplicity == 0:
        if "outside-validity" in result.branches:
            raise OutsideValidity(f"no valid preimage of {result.target}")
        raise NoPreimage(f"no preimage of {result.target} in the unit ball")
    return result


def invert_point(measure, y):
    return _single(Inverter(measure).solve(y))


def invert_sqrt(measure, y):
    return _single(Inverter(measure).solve(y))


def invert_smooth(measure, y):
    return _single(Inverter(measure).solve(y))


def invert_halfsqrt(measure, y):
    return _single(Inverter(measure).solve(y))


def invert_uniform(measure, y):
    return _single(Inverter(measure).solve(y))


def invert_ellipse(measure, y):
    return _single(Inverter(measure).solve(y))


def invert(measure, y):
    """Dispatch to the variant-appropriate inversion."""
    return _single(Inverter(measure).solve(y))


def _checked_g1(measure, preimage, evaluator):
    ev = evaluator or CauchyEvaluator(measure)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = complex(ev._dg(np.asarray(preimage, dtype=complex), 1))
    # degenerate either way: G' ~ 0 (inverse derivative blows up) or the
    # preimage sits at a support edge where G' itself blows up
    if not np.isfinite(d1) or abs(d1) < TURNING_TOL:
        raise TurningPoint(f"G' is degenerate at {preimage}")
    return ev, d1


def inverse_derivative(measure, y, preimage, evaluator=None):
    """(G^{-1})'(y) = 1/G'(z) at a known preimage z."""
    _, d1 = _checked_g1(measure, preimage, evaluator)
    return 1.0 / d1


def inverse_second_derivative(measure, y, preimage, evaluator=None):
    """(G^{-1})''(y) = -G''(z)/G'(z)^3 at a known preimage z."""
    ev, d1 = _checked_g1(measure, preimage, evaluator)
    with np.errstate(divide="ignore", invalid="ignore"):
        d2 = complex(ev._dg(np.asarray(preimage, dtype=complex), 2))
    return -d2 / d1 ** 3
