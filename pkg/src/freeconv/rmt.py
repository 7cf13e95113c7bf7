"""Random-matrix Monte Carlo harness: ensembles, eigenvalues, KS distances.

Two symmetric eigensolver engines are available: the default 'ql'
(Householder tridiagonalization + implicit QL via LAPACK, fast at the
ensemble sizes the histograms need) and 'jacobi' (a self-contained
threshold-cyclic sweep with round-robin pivot ordering, useful as an
independent cross-check at moderate sizes).

All randomness flows from numpy's PCG64 generator; each Monte Carlo trial
owns a child stream spawned from (seed, trial index), so pools are
bitwise-reproducible.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import measures
from .errors import NotSymmetric
from .measures import CumulativeDensity, DEFAULT_GAUSSIAN_VARIANCE

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 30
WISHART_SHIFT = 3.0


def sample_goe(n, rng):
    """Symmetrized scaled Gaussian matrix (A + A^T)/sqrt(2 n).

    Entries of A are standard normal, so the spectrum tends to the
    semicircle law on (-2, 2).
    """
    if n < 2:
        raise ValueError("matrix size must be at least 2")
    a = rng.standard_normal((n, n))
    return (a + a.T) / np.sqrt(2.0 * n)


def sample_orthogonal(n, rng):
    """Haar orthogonal matrix from the sign-corrected QR of a Gaussian."""
    if n < 2:
        raise ValueError("matrix size must be at least 2")
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _round_robin_schedule(n):
    """Disjoint pivot pairs covering all (p, q) combinations in n-1 rounds."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    np_ = len(players)
    rounds = []
    arr = players[:]
    for _ in range(np_ - 1):
        ps, qs = [], []
        for i in range(np_ // 2):
            p, q = arr[i], arr[np_ - 1 - i]
            if p >= 0 and q >= 0:
                ps.append(min(p, q))
                qs.append(max(p, q))
        rounds.append((np.array(ps), np.array(qs)))
        arr = [arr[0]] + [arr[-1]] + arr[1:-1]
    return rounds


def _jacobi_eigvals_stack(stack, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    a = np.array(stack, dtype=float, copy=True)
    batch, n, _ = a.shape
    if n == 1:
        return a[:, :, 0]
    schedule = _round_robin_schedule(n)
    fro = np.linalg.norm(a, axis=(1, 2))
    fro[fro == 0.0] = 1.0
    for sweep in range(max_sweeps):
        off = np.sqrt(np.maximum(
            np.linalg.norm(a, axis=(1, 2)) ** 2
            - np.linalg.norm(np.diagonal(a, axis1=1, axis2=2), axis=1) ** 2,
            0.0,
        ))
        if np.all(off <= tol * fro):
            break
        for p, q in schedule:
            app = a[:, p, p]
            aqq = a[:, q, q]
            apq = a[:, p, q]
            # threshold strategy: rotations below the convergence scale are skipped
            rotate = np.abs(apq) > 0.01 * tol * fro[:, None]
            with np.errstate(over="ignore"):
                tau = np.where(rotate, (aqq - app) / np.where(rotate, 2.0 * apq, 1.0), 0.0)
                denom = np.abs(tau) + np.where(
                    np.abs(tau) > 1e150, np.abs(tau), np.sqrt(1.0 + tau * tau)
                )
            t = np.where(rotate, np.where(tau == 0.0, 1.0, np.sign(tau)) / denom, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            colp = a[:, :, p].copy()
            colq = a[:, :, q].copy()
            a[:, :, p] = c[:, None, :] * colp - s[:, None, :] * colq
            a[:, :, q] = s[:, None, :] * colp + c[:, None, :] * colq
            rowp = a[:, p, :].copy()
            rowq = a[:, q, :].copy()
            a[:, p, :] = c[:, :, None] * rowp - s[:, :, None] * rowq
            a[:, q, :] = s[:, :, None] * rowp + c[:, :, None] * rowq
    else:
        warnings.warn(
            f"Jacobi sweep limit {max_sweeps} reached; off-norm {np.max(off / fro):.2e}"
        )
    return np.sort(np.diagonal(a, axis1=1, axis2=2), axis=1)


def eigenvalues_symmetric(matrix, method="ql", tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """All eigenvalues of a symmetric matrix, ascending.

    ``method='ql'`` routes through the tridiagonal QL path (LAPACK);
    ``method='jacobi'`` runs the self-contained threshold-cyclic sweep.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetric("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > 1e-12 * scale:
        raise NotSymmetric("matrix is not symmetric within 1e-12")
    if method == "ql":
        return np.linalg.eigvalsh(m)
    if method == "jacobi":
        return _jacobi_eigvals_stack(m[None], tol=tol, max_sweeps=max_sweeps)[0]
    raise ValueError("method must be 'ql' or 'jacobi'")


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EnsembleSpec:
    """One Monte Carlo experiment.

    kinds:
      'goe'                            -- S_n alone
      'orthogonal-conjugated-diagonal' -- Q diag(d) Q^T + S_n with d from the
        diagonal sampler; a fixed eigenvalue list instead conjugates the
        fixed diagonal and adds an independent Gaussian diagonal (the two
        forms are conjugation-equivalent)
      'wishart-product'                -- B B^T (S_n + 3 I) with B = A/sqrt(n)
      'principal-block'                -- leading (alpha n) x (alpha n) block
        of Q diag(d) Q^T
    """

    kind: str
    size: int
    trials: int = 100
    seed: int = 0
    diagonal: object = "gaussian"
    alpha: float = 1.0

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("ensemble size must be at least 2")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")


def _diagonal_sample(spec, rng):
    if isinstance(spec.diagonal, str):
        if spec.diagonal == "gaussian":
            return rng.normal(0.0, np.sqrt(DEFAULT_GAUSSIAN_VARIANCE), spec.size)
        if spec.diagonal == "uniform":
            return rng.uniform(-1.0, 1.0, spec.size)
        raise ValueError(f"unknown diagonal sampler {spec.diagonal!r}")
    return np.asarray(spec.diagonal, dtype=float)


def _trial_matrix(spec, rng):
    n = spec.size
    if spec.kind == "goe":
        return sample_goe(n, rng)
    if spec.kind == "orthogonal-conjugated-diagonal":
        q = sample_orthogonal(n, rng)
        d = _diagonal_sample(spec, rng)
        conjugated = (q * d) @ q.T
        if isinstance(spec.diagonal, str):
            return conjugated + sample_goe(n, rng)
        gauss = rng.normal(0.0, np.sqrt(DEFAULT_GAUSSIAN_VARIANCE), n)
        return conjugated + np.diag(gauss)
    if spec.kind == "wishart-product":
        b = rng.standard_normal((n, n)) / np.sqrt(n)
        chol = np.linalg.cholesky(b @ b.T)
        shifted = sample_goe(n, rng) + WISHART_SHIFT * np.eye(n)
        return chol.T @ shifted @ chol
    if spec.kind == "principal-block":
        q = sample_orthogonal(n, rng)
        d = _diagonal_sample(spec, rng)
        k = max(2, int(round(spec.alpha * n)))
        qk = q[:k]
        return (qk * d) @ qk.T
    raise ValueError(f"unknown ensemble kind {spec.kind!r}")


def sample_ensemble(spec):
    """Pooled sorted eigenvalues over all trials of an ensemble."""
    children = np.random.SeedSequence(spec.seed).spawn(spec.trials)
    matrices = [_trial_matrix(spec, np.random.default_rng(c)) for c in children]
    pool = np.concatenate([eigenvalues_symmetric(m) for m in matrices])
    return np.sort(pool)


# ---------------------------------------------------------------------------
# empirical CDFs and Kolmogorov-Smirnov distance


class EmpiricalCDF:
    """Right-continuous step CDF of a sample."""

    def __init__(self, samples):
        s = np.sort(np.asarray(samples, dtype=float).ravel())
        if s.size == 0:
            raise ValueError("empty sample")
        self.samples = s

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.searchsorted(self.samples, x, side="right") / self.samples.size
        return out if out.ndim else float(out)


def ks_distance(empirical, measure):
    """sup_x |F_n(x) - F(x)| between a sample and a measure.

    Evaluated at the sample points (both one-sided limits of the step CDF)
    and at midpoints between consecutive samples.
    """
    if not isinstance(empirical, EmpiricalCDF):
        empirical = EmpiricalCDF(empirical)
    xs = empirical.samples
    n = xs.size
    ref = CumulativeDensity(measure) if not callable(measure) else measure
    fx = np.asarray(ref(xs), dtype=float)
    steps_hi = np.arange(1, n + 1) / n
    steps_lo = np.arange(0, n) / n
    d = max(np.max(np.abs(steps_hi - fx)), np.max(np.abs(steps_lo - fx)))
    if n > 1:
        mids = 0.5 * (xs[:-1] + xs[1:])
        fm = np.asarray(ref(mids), dtype=float)
        d = max(d, float(np.max(np.abs(steps_hi[:-1] - fm))))
    return float(d)


def ks_between(measure_a, measure_b, lo, hi, npoints=2001):
    """sup-norm CDF gap between two measures on a grid over [lo, hi]."""
    grid = np.linspace(lo, hi, npoints)
    fa = CumulativeDensity(measure_a)(grid)
    fb = CumulativeDensity(measure_b)(grid)
    return float(np.max(np.abs(fa - fb)))
