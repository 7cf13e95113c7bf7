"""Recovering a measure from pointwise evaluations of its inverse transform.

The pipeline mirrors the forward machinery in reverse: generate a point
cloud in the image of the transform, prune it to the region where the
(unknown) output transform is actually invertible, locate the support for
square-root outputs by bisection on the derivative, then solve a
Vandermonde-type least-squares system for the series coefficients.
"""

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import maps, measures
from .cauchy import CauchyEvaluator
from .errors import EmptyCloud, IllConditioned, NoSignChange, NotSingleValued, ResidualTooLarge
from .inversion import Inverter
from .measures import SmoothMeasure, SqrtMeasure, trim_trailing

OVER_FACTOR = 4
COND_MAX = 1e12
ACCEPT_RESID = 1e-6
BISECT_TOL = 1e-14
MAX_BISECT = 60
_ENDPOINT_DG_TOL = 1e-8


def thread_count():
    """Worker cap from FREECONV_THREADS (default: serial)."""
    try:
        return max(1, int(os.environ.get("FREECONV_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class OracleValue:
    """One inverse-transform evaluation: g(y), g'(y), g''(y) and validity."""

    value: complex
    d1: complex
    d2: complex
    single_valued: bool


class InverseOracle:
    """Pointwise inverse Cauchy transform of an output measure.

    Subclasses override ``evaluate_many``; the scalar ``__call__`` is a
    convenience wrapper.  Evaluations at distinct points are independent and
    may run concurrently.
    """

    def evaluate_many(self, ys):
        raise NotImplementedError

    def __call__(self, y):
        vals, d1, d2, ok = self.evaluate_many(np.array([y], dtype=complex))
        return OracleValue(complex(vals[0]), complex(d1[0]), complex(d2[0]), bool(ok[0]))


class CallableOracle(InverseOracle):
    """Adapter for a scalar callable y -> OracleValue."""

    def __init__(self, fn):
        self.fn = fn

    def evaluate_many(self, ys):
        ys = np.asarray(ys, dtype=complex)
        workers = thread_count()
        if workers > 1 and ys.size > 4 * workers:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(self.fn, ys))
        else:
            results = [self.fn(y) for y in ys]
        vals = np.array([r.value for r in results], dtype=complex)
        d1 = np.array([r.d1 for r in results], dtype=complex)
        d2 = np.array([r.d2 for r in results], dtype=complex)
        ok = np.array([r.single_valued for r in results], dtype=bool)
        return vals, d1, d2, ok


@dataclass(frozen=True)
class PointCloud:
    """Complex sample points with provenance."""

    points: np.ndarray
    stage: str  # 'raw' | 'pruned'
    m: int
    values: tuple | None = None  # cached oracle arrays for pruned clouds

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class SupportBracket:
    """Turning points of the inverse transform and the support they map to."""

    a0: float
    b0: float
    xi_a: float
    xi_b: float
    a: float
    b: float
    iterations: tuple = (0, 0)
    widths: tuple = ((), ())


@dataclass(frozen=True)
class RecoveryDiagnostics:
    raw_count: int
    pruned_count: int
    rows: int
    n: int
    condition: float
    max_point_residual: float
    support: SupportBracket | None = None
    x_weighted: bool = False
    notes: tuple = ()


@dataclass(frozen=True)
class RecoveredMeasure:
    measure: object
    residual: float
    diagnostics: RecoveryDiagnostics


# ---------------------------------------------------------------------------
# point clouds


def generate_cloud(measure, m, evaluator=None, inverter=None, selfcheck=True, transform="cauchy"):
    """Image-space point cloud y = G_mu(z) over a tensor-product disk cloud.

    The disk cloud is the tensor product of m unit-circle points with m
    Chebyshev-spaced radii in (0, 1); z-points come from the lower half
    plane (conjugated Moebius map for full-line supports, Joukowsky map for
    interval supports).  Points where the measure's own inverse fails the
    round-trip single-valuedness check are discarded; callers whose pruning
    oracle repeats that check can pass ``selfcheck=False``.
    """
    if m < 2:
        raise ValueError("cloud parameter m must be at least 2")
    evaluator = evaluator or CauchyEvaluator(measure)
    u = maps.unit_circle_nodes(m)
    radii = 0.5 * (1.0 + maps.chebyshev_second_kind_nodes(m))
    d = np.multiply.outer(u, radii).ravel()
    lo, hi = evaluator.support
    if np.isfinite(lo) and np.isfinite(hi):
        with np.errstate(divide="ignore", invalid="ignore"):
            z = maps.to_interval(lo, hi, maps.joukowsky(d))
    else:
        # the Moebius image of the disk is the upper half plane; conjugate
        z = np.conj(maps.mobius_inv(d))
    z = z[np.isfinite(z) & (z.imag < -1e-12)]
    if z.size == 0:
        raise EmptyCloud("no cloud points fell in the lower half plane")
    if transform == "cauchy":
        y = evaluator.cauchy_many(z)
    elif transform == "t":
        y = evaluator.t_transform_many(z)
    else:
        raise ValueError("transform must be 'cauchy' or 't'")
    y = y[np.isfinite(y)]
    if selfcheck:
        if inverter is None:
            try:
                inverter = Inverter(measure, evaluator) if transform == "cauchy" else None
            except TypeError:
                inverter = None
        if inverter is not None:
            results = inverter.solve_many(y)
            keep = np.array([r.multiplicity == 1 for r in results], dtype=bool)
            y = y[keep]
    if y.size == 0:
        raise EmptyCloud("single-valuedness check removed every cloud point")
    return PointCloud(points=y, stage="raw", m=m)


def prune(oracle, cloud):
    """Keep cloud points with a sign flip of Im under the oracle.

    A point y survives when sgn Im g(y) != sgn Im y and the oracle reports a
    single-valued inverse there.
    """
    if cloud.stage != "raw":
        raise ValueError("prune expects a raw cloud")
    ys = cloud.points
    vals, d1, d2, ok = oracle.evaluate_many(ys)
    finite = np.isfinite(vals) & np.isfinite(d1) & np.isfinite(d2)
    flip = np.sign(vals.imag) != np.sign(ys.imag)
    keep = ok & finite & flip
    if not np.any(keep):
        if not np.any(ok & finite):
            raise NotSingleValued("inverse transform multi-valued on the whole cloud")
        raise EmptyCloud("sign-flip criterion removed every cloud point")
    return PointCloud(
        points=ys[keep],
        stage="pruned",
        m=cloud.m,
        values=(vals[keep], d1[keep], d2[keep]),
    )


# ---------------------------------------------------------------------------
# support search


def _real_d1(oracle, y):
    return float(np.real(oracle(complex(y)).d1))


def _limit_value(oracle, xi, label):
    """g(xi), nudging toward 0 when the endpoint evaluation is singular."""
    val = oracle(complex(xi)).value
    if np.isfinite(val):
        return float(np.real(val))
    for delta in (1e-9, 1e-7, 1e-5):
        val = oracle(complex(xi * (1.0 - delta))).value
        if np.isfinite(val):
            return float(np.real(val))
    raise NoSignChange(f"cannot evaluate g near the {label} turning point {xi}")


def _bisect_turning(oracle, outer, inner, label):
    """Bisect g' between an outer endpoint and a point near the pole at 0.

    g' -> -infinity near zero, so the sign at ``inner`` is negative; a
    turning point sits where g' crosses zero.  When g' vanishes (or is
    singular, as at a hard-edge image boundary) at the outer endpoint,
    inputs did not shrink the image there and the endpoint itself is the
    turning point.
    """
    d_outer = _real_d1(oracle, outer)
    if not np.isfinite(d_outer):
        return float(outer), 0, ()
    if d_outer <= 0.0:
        if abs(d_outer) <= _ENDPOINT_DG_TOL:
            return float(outer), 0, ()
        raise NoSignChange(
            f"g' has sign {np.sign(d_outer)} at both ends of the {label} bracket"
        )
    lo, hi = (outer, inner) if outer < inner else (inner, outer)
    # orient so f(left) and f(right) differ; f(inner) < 0 by the pole
    f_lo = _real_d1(oracle, lo)
    widths = []
    it = 0
    scale = max(abs(lo), abs(hi), 1.0)
    while hi - lo > BISECT_TOL * scale and it < MAX_BISECT:
        mid = 0.5 * (lo + hi)
        f_mid = _real_d1(oracle, mid)
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        widths.append(hi - lo)
        it += 1
    xi = 0.5 * (lo + hi)
    # one Newton polish using g''
    val = oracle(complex(xi))
    d2 = float(np.real(val.d2))
    if abs(d2) > 1e-300:
        cand = xi - float(np.real(val.d1)) / d2
        if min(lo, hi) - BISECT_TOL <= cand <= max(lo, hi) + BISECT_TOL:
            xi = cand
    return float(xi), it, tuple(widths)


def find_support(oracle, a0, b0):
    """Locate the support of a square-root decaying output measure.

    Searches for the turning points xi_a in (a0, 0) and xi_b in (0, b0) by
    bisection on g' (plus one Newton polish), then maps them through g.
    """
    if not (a0 < 0.0 < b0):
        raise ValueError("bracket must satisfy a0 < 0 < b0")
    if not (np.isfinite(a0) and np.isfinite(b0)):
        raise NoSignChange(
            "bracket endpoint is infinite; no square-root edge among the inputs"
        )
    inner_r = b0 * 1e-8
    inner_l = a0 * 1e-8
    xi_b, it_b, w_b = _bisect_turning(oracle, b0, inner_r, "right")
    xi_a, it_a, w_a = _bisect_turning(oracle, a0, inner_l, "left")
    a = _limit_value(oracle, xi_a, "left")
    b = _limit_value(oracle, xi_b, "right")
    if not a < b:
        raise NoSignChange(f"support search produced an empty interval ({a}, {b})")
    return SupportBracket(
        a0=a0, b0=b0, xi_a=xi_a, xi_b=xi_b, a=a, b=b,
        iterations=(it_a, it_b), widths=(w_a, w_b),
    )


# ---------------------------------------------------------------------------
# least-squares recovery


def _cloud_values(oracle, cloud):
    if cloud.values is not None:
        return cloud.values
    vals, d1, d2, ok = oracle.evaluate_many(cloud.points)
    return vals, d1, d2


def _effective_n(n, rows):
    if rows >= OVER_FACTOR * n:
        return n
    reduced = max(1, rows // OVER_FACTOR)
    warnings.warn(
        f"cloud of {rows} points cannot support n={n}; reducing to n={reduced}",
        stacklevel=3,
    )
    return reduced


#: singular directions below this relative level carry only oracle noise
_LSTSQ_RCOND = 3e-8


def _equilibrated_lstsq(a, b):
    """Column-equilibrated least squares with noise-level truncation.

    Singular directions below ``_LSTSQ_RCOND`` (relative) resolve nothing
    above the inverse-oracle noise and are dropped; the condition gate
    applies to the directions actually used, while the full singular-value
    spread is reported for diagnostics.
    """
    scale = np.linalg.norm(a, axis=0)
    scale[scale == 0.0] = 1.0
    x, _, _, sv = np.linalg.lstsq(a / scale, b, rcond=_LSTSQ_RCOND)
    if sv.size == 0 or sv[-1] <= 0:
        raise IllConditioned("system is numerically rank deficient")
    kept = sv[sv >= _LSTSQ_RCOND * sv[0]]
    cond_eff = float(sv[0] / kept[-1]) if kept.size else np.inf
    if cond_eff > COND_MAX:
        raise IllConditioned(f"condition estimate {cond_eff:.3e} exceeds {COND_MAX:.0e}")
    return x / scale, float(sv[0] / sv[-1])


def recover_smooth(oracle, cloud, n):
    """Fit the Laurent coefficients of a smoothly decaying output measure.

    Solves the truncated-series system for psi_1..psi_n in a least-squares
    sense; psi_0 comes from the vanishing-at-infinity condition and
    psi_{-k} by conjugate symmetry.  The conjugated pair (conj y, conj g(y))
    is used so the plus-branch series converges on its disk.
    """
    if cloud.stage != "pruned":
        raise ValueError("recover_smooth expects a pruned cloud")
    ys = cloud.points
    g = _cloud_values(oracle, cloud)[0]
    rows = len(ys)
    n = _effective_n(n, rows)
    lam = maps.mobius(np.conj(g))
    k = np.arange(1, n + 1)
    a_mat = -2j * np.pi * (lam[:, None] ** k - (-1.0) ** k)
    b_vec = np.conj(ys)
    psi, cond = _equilibrated_lstsq(a_mat, b_vec)
    fit = a_mat @ psi
    resid = float(np.linalg.norm(fit - b_vec) / np.linalg.norm(b_vec))
    max_pt = float(np.max(np.abs(fit - b_vec) / (1.0 + np.abs(b_vec))))
    psi0 = -2.0 * float(np.real(np.sum((-1.0) ** k * psi)))
    coeffs = np.concatenate([np.conj(psi[::-1]), [psi0], psi])
    diag = RecoveryDiagnostics(
        raw_count=rows, pruned_count=rows, rows=rows, n=n,
        condition=cond, max_point_residual=max_pt,
    )
    if resid > ACCEPT_RESID:
        raise ResidualTooLarge(
            f"relative residual {resid:.3e} exceeds {ACCEPT_RESID:.0e}", diag
        )
    return RecoveredMeasure(SmoothMeasure(_trim_symmetric(coeffs)), resid, diag)


def _trim_symmetric(coeffs):
    n = (len(coeffs) - 1) // 2
    mags = np.abs(coeffs)
    scale = mags.max()
    if scale == 0.0:
        return coeffs[n : n + 1]
    keep = n
    for k in range(n, 0, -1):
        if max(mags[n + k], mags[n - k]) >= measures.TRUNC_TOL * scale:
            keep = k
            break
    else:
        keep = 0
    return coeffs[n - keep : n + keep + 1]


def recover_sqrt(oracle, cloud, support, n):
    """Fit the Chebyshev-U coefficients of a square-root output measure.

    Stacks the real and imaginary parts of the mapped-series identity into
    one real least-squares system for the (real) coefficients.
    """
    if cloud.stage != "pruned":
        raise ValueError("recover_sqrt expects a pruned cloud")
    a, b = support
    ys = cloud.points
    g = _cloud_values(oracle, cloud)[0]
    rows = len(ys)
    n = _effective_n(n, rows)
    s = maps.joukowsky_inv(maps.from_interval(a, b, g))
    k = np.arange(1, n + 1)
    powers = s[:, None] ** k
    a_mat = np.pi * np.vstack([powers.real, powers.imag])
    b_vec = np.concatenate([ys.real, ys.imag])
    psi, cond = _equilibrated_lstsq(a_mat, b_vec)
    fit = a_mat @ psi
    resid = float(np.linalg.norm(fit - b_vec) / np.linalg.norm(b_vec))
    pt_err = np.abs((fit[:rows] + 1j * fit[rows:]) - ys) / (1.0 + np.abs(ys))
    diag = RecoveryDiagnostics(
        raw_count=rows, pruned_count=rows, rows=2 * rows, n=n,
        condition=cond, max_point_residual=float(np.max(pt_err)),
    )
    if resid > ACCEPT_RESID:
        raise ResidualTooLarge(
            f"relative residual {resid:.3e} exceeds {ACCEPT_RESID:.0e}", diag
        )
    return RecoveredMeasure(SqrtMeasure(a, b, trim_trailing(psi)), resid, diag)


def compute_measure(oracle, cloud, form, n, bracket=None):
    """Prune, locate the support if needed, and recover the output measure."""
    raw_count = len(cloud)
    if cloud.stage == "raw":
        cloud = prune(oracle, cloud)
    if form == "sqrt":
        if bracket is None:
            raise ValueError("square-root recovery requires a bracket (a0, b0)")
        sup = find_support(oracle, bracket[0], bracket[1])
        result = recover_sqrt(oracle, cloud, (sup.a, sup.b), n)
        diag = replace(
            result.diagnostics, support=sup, raw_count=raw_count, pruned_count=len(cloud)
        )
        return RecoveredMeasure(result.measure, result.residual, diag)
    if form == "smooth":
        result = recover_smooth(oracle, cloud, n)
        diag = replace(result.diagnostics, raw_count=raw_count, pruned_count=len(cloud))
        return RecoveredMeasure(result.measure, result.residual, diag)
    raise ValueError("form must be 'smooth' or 'sqrt'")
