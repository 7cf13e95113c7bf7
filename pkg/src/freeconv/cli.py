"""Command-line front end.

Subcommands:
  convolve        run add/multiply/compress on measure spec files
  validate        Monte Carlo eigenvalue pools and KS distances
  sample-density  tabulate a measure's density on a grid

Exit codes: 0 success, 2 invalid input or schema, 3 convergence failure
(diagnostics are still written when available).
"""

import argparse
import json
import sys
import time

import numpy as np

from . import catalog, measures, rmt
from .cauchy import CauchyEvaluator
from .convolution import ConvolutionRequest, free_add, free_compress, free_multiply
from .errors import (
    AtomDensityUndefined,
    CoefficientGrowth,
    EmptyCloud,
    FreeConvError,
    IllConditioned,
    NoSignChange,
    NotSingleValued,
    ResidualTooLarge,
    SupportNotPositive,
)
from .measures import (
    AtomSum,
    CumulativeDensity,
    HalfSqrtMeasure,
    PointMass,
    SmoothMeasure,
    SqrtMeasure,
    UniformMeasure,
)

_CONVERGENCE_ERRORS = (
    ResidualTooLarge,
    EmptyCloud,
    IllConditioned,
    NoSignChange,
    NotSingleValued,
    CoefficientGrowth,
)


class SpecError(Exception):
    """Invalid measure specification file."""


# ---------------------------------------------------------------------------
# measure spec files


def _require(spec, key, kind=None):
    if key not in spec:
        raise SpecError(f"missing field {key!r}")
    val = spec[key]
    if kind is not None and not isinstance(val, kind):
        raise SpecError(f"field {key!r} has wrong type {type(val).__name__}")
    return val


def _finite_array(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise SpecError(f"field {name!r} must be a nonempty finite array")
    return arr


def measure_from_spec(spec):
    """Build a measure from a parsed spec dictionary."""
    if not isinstance(spec, dict):
        raise SpecError("measure spec must be a JSON object")
    kind = _require(spec, "type", str)
    try:
        if kind == "semicircle":
            return catalog.semicircle(spec.get("variance", 1.0), spec.get("center", 0.0))
        if kind == "gaussian":
            return catalog.gaussian(
                spec.get("mean", 0.0),
                spec.get("variance", measures.DEFAULT_GAUSSIAN_VARIANCE),
                int(spec.get("n", 64)),
            )
        if kind == "cauchy":
            return catalog.cauchy_law(
                spec.get("location", 0.0), spec.get("scale", 1.0), int(spec.get("n", 8))
            )
        if kind == "point":
            return PointMass(float(_require(spec, "location")), spec.get("weight", 1.0))
        if kind == "atoms":
            locs = _finite_array(_require(spec, "locations"), "locations")
            if "weights" in spec:
                return AtomSum(locs, _finite_array(spec["weights"], "weights"))
            return AtomSum.from_eigenvalues(locs)
        if kind == "uniform":
            a, b = _require(spec, "support")
            return UniformMeasure(float(a), float(b))
        if kind == "marchenko_pastur":
            return catalog.marchenko_pastur()
        if kind == "chebyshev_sqrt":
            a, b = _require(spec, "support")
            coeffs = _finite_array(_require(spec, "coeffs"), "coeffs")
            return SqrtMeasure(float(a), float(b), coeffs)
        if kind == "fourier_smooth":
            raw = _require(spec, "coeffs", list)
            coeffs = np.array(
                [complex(c[0], c[1]) if isinstance(c, list) else complex(c) for c in raw]
            )
            if not np.all(np.isfinite(coeffs)):
                raise SpecError("field 'coeffs' must be finite")
            return SmoothMeasure(coeffs)
        if kind == "half_sqrt":
            coeffs = _finite_array(_require(spec, "coeffs"), "coeffs")
            return HalfSqrtMeasure(float(_require(spec, "a")), coeffs)
        if kind == "counting_from_matrix":
            path = _require(spec, "path", str)
            matrix = np.loadtxt(path, delimiter=",", ndmin=2)
            return AtomSum.from_eigenvalues(rmt.eigenvalues_symmetric(matrix))
    except SpecError:
        raise
    except (ValueError, OSError, FreeConvError) as exc:
        raise SpecError(str(exc)) from exc
    raise SpecError(f"unknown measure type {kind!r}")


def load_measure(path):
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path} is not valid JSON: {exc}") from exc
    return measure_from_spec(spec)


def measure_to_spec(measure, diagnostics=None, meta=None):
    """Serialize a recovered measure so it reloads as a spec file."""
    if isinstance(measure, SqrtMeasure):
        doc = {
            "type": "chebyshev_sqrt",
            "form": "sqrt",
            "support": [measure.a, measure.b],
            "coeffs": [float(c) for c in measure.coeffs],
        }
    elif isinstance(measure, SmoothMeasure):
        doc = {
            "type": "fourier_smooth",
            "form": "smooth",
            "support": None,
            "coeffs": [[float(c.real), float(c.imag)] for c in measure.coeffs],
        }
    else:
        raise TypeError(f"cannot serialize {type(measure).__name__}")
    if diagnostics is not None:
        doc["diagnostics"] = diagnostics
    if meta is not None:
        doc["meta"] = meta
    return doc


def _diag_dict(result):
    d = result.diagnostics
    out = {
        "residual": result.residual,
        "condition": d.condition,
        "raw_count": d.raw_count,
        "pruned_count": d.pruned_count,
        "rows": d.rows,
        "n": d.n,
        "max_point_residual": d.max_point_residual,
        "x_weighted": d.x_weighted,
    }
    if d.support is not None:
        s = d.support
        out["support_trace"] = {
            "a0": s.a0, "b0": s.b0, "xi_a": s.xi_a, "xi_b": s.xi_b,
            "a": s.a, "b": s.b, "iterations": list(s.iterations),
        }
    return out


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _density_grid(measure, a, b, k, chebyshev=False):
    if chebyshev:
        from . import maps

        grid = maps.to_interval(a, b, maps.chebyshev_second_kind_nodes(k))
    else:
        grid = np.linspace(a, b, k)
    return grid, np.asarray(measures.density(measure, grid), dtype=float)


def _write_density_csv(path, grid, dens):
    with open(path, "w") as fh:
        fh.write("x,density\n")
        for x, d in zip(grid, dens):
            fh.write(f"{float(x)!r},{float(d)!r}\n")


def _auto_grid(measure, points):
    lo, hi = measures.support_interval(measure)
    if np.isfinite(lo) and np.isfinite(hi):
        return np.linspace(lo, hi, points)
    cd = CumulativeDensity(measure)
    xs = np.linspace(-50.0, 50.0, 20001)
    F = cd(xs)
    lo = xs[np.searchsorted(F, 1e-6)]
    hi = xs[min(np.searchsorted(F, 1.0 - 1e-6), xs.size - 1)]
    return np.linspace(lo, hi, points)


# ---------------------------------------------------------------------------
# commands


def cmd_convolve(args):
    request = ConvolutionRequest(
        operation=args.operation, n=args.n, cloud=args.cloud, form=args.form
    )
    start = time.perf_counter()
    try:
        if args.operation == "compress":
            try:
                alpha = float(args.spec_a)
            except ValueError:
                print("compress expects: compress ALPHA SPEC.json", file=sys.stderr)
                return 2
            if not (0.0 < alpha <= 1.0):
                print(f"alpha {alpha} outside (0, 1]", file=sys.stderr)
                return 2
            mu = load_measure(args.spec_b)
            result = free_compress(alpha, mu, request)
        else:
            mu_a = load_measure(args.spec_a)
            mu_b = load_measure(args.spec_b)
            op = free_add if args.operation == "add" else free_multiply
            result = op(mu_a, mu_b, request)
    except (SpecError, SupportNotPositive, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except _CONVERGENCE_ERRORS as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        doc = {"error": type(exc).__name__, "message": str(exc)}
        diag = getattr(exc, "diagnostics", None)
        if diag is not None:
            doc["diagnostics"] = {
                "condition": diag.condition,
                "n": diag.n,
                "rows": diag.rows,
            }
        if args.out:
            _write_json(args.out, doc)
        return 3
    runtime = time.perf_counter() - start
    meta = None if args.no_meta else {"timestamp": time.time(), "runtime_seconds": runtime}
    doc = measure_to_spec(result.measure, diagnostics=_diag_dict(result), meta=meta)
    if args.out:
        _write_json(args.out, doc)
    else:
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        print()
    if args.samples:
        lo, hi = measures.support_interval(result.measure)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            grid = _auto_grid(result.measure, args.grid_points)
        else:
            grid = np.linspace(lo, hi, args.grid_points)
        dens = np.asarray(measures.density(result.measure, grid), dtype=float)
        _write_density_csv(args.samples, grid, dens)
    return 0


def cmd_validate(args):
    try:
        measure = load_measure(args.spec)
        spec = rmt.EnsembleSpec(
            kind=args.ensemble,
            size=args.size,
            trials=args.trials,
            seed=args.seed,
            diagonal=args.diagonal,
            alpha=args.alpha,
        )
    except (SpecError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    pool = rmt.sample_ensemble(spec)
    ks = rmt.ks_distance(pool, measure)
    with open(f"{args.out}_pool.csv", "w") as fh:
        fh.write("eigenvalue\n")
        for v in pool:
            fh.write(f"{float(v)!r}\n")
    counts, edges = np.histogram(pool, bins="fd")
    widths = np.diff(edges)
    with open(f"{args.out}_histogram.csv", "w") as fh:
        fh.write("bin_left,bin_right,count,density\n")
        for left, right, c, w in zip(edges[:-1], edges[1:], counts, widths):
            fh.write(f"{float(left)!r},{float(right)!r},{int(c)},{float(c / (w * pool.size))!r}\n")
    _write_json(
        f"{args.out}_summary.json",
        {
            "ks_distance": ks,
            "kind": spec.kind,
            "size": spec.size,
            "trials": spec.trials,
            "seed": spec.seed,
            "pool_size": int(pool.size),
        },
    )
    print(f"ks_distance {ks!r}")
    return 0


def cmd_sample_density(args):
    try:
        measure = load_measure(args.spec)
        a, b, k = args.grid
        k = int(k)
        if k < 2 or not (a < b):
            raise SpecError(f"invalid grid ({a}, {b}, {k})")
        grid, dens = _density_grid(measure, a, b, k, chebyshev=args.chebyshev)
    except AtomDensityUndefined as exc:
        print(f"invalid input: AtomDensityUndefined: {exc}", file=sys.stderr)
        return 2
    except (SpecError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    if args.out:
        _write_density_csv(args.out, grid, dens)
    else:
        sys.stdout.write("x,density\n")
        for x, d in zip(grid, dens):
            sys.stdout.write(f"{float(x)!r},{float(d)!r}\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="freeconv",
        description="Numerical free convolution of probability measures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convolve", help="free addition, multiplication, compression")
    conv.add_argument("operation", choices=["add", "multiply", "compress"])
    conv.add_argument("spec_a", help="measure spec file (or alpha for compress)")
    conv.add_argument("spec_b", help="measure spec file")
    conv.add_argument("--n", type=int, default=40, help="series truncation order")
    conv.add_argument("--cloud", type=int, default=None, help="cloud parameter m")
    conv.add_argument("--form", choices=["auto", "smooth", "sqrt"], default="auto")
    conv.add_argument("--out", default=None, help="result JSON path")
    conv.add_argument("--samples", default=None, help="density CSV path")
    conv.add_argument("--grid-points", type=int, default=201)
    conv.add_argument("--seed", type=int, default=0, help="accepted for interface parity")
    conv.add_argument("--no-meta", action="store_true", help="omit timestamp/runtime metadata")
    conv.set_defaults(func=cmd_convolve)

    val = sub.add_parser("validate", help="Monte Carlo comparison against a measure")
    val.add_argument("spec", help="reference measure spec file")
    val.add_argument("--ensemble", default="goe", choices=[
        "goe", "orthogonal-conjugated-diagonal", "wishart-product", "principal-block",
    ])
    val.add_argument("--size", type=int, default=200)
    val.add_argument("--trials", type=int, default=100)
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--diagonal", default="gaussian")
    val.add_argument("--alpha", type=float, default=1.0)
    val.add_argument("--out", default="validate", help="output file prefix")
    val.set_defaults(func=cmd_validate)

    dens = sub.add_parser("sample-density", help="tabulate a density on a grid")
    dens.add_argument("spec", help="measure spec file")
    dens.add_argument("--grid", nargs=3, type=float, required=True, metavar=("A", "B", "K"))
    dens.add_argument("--chebyshev", action="store_true", help="Chebyshev-spaced grid")
    dens.add_argument("--out", default=None, help="CSV path (default: stdout)")
    dens.set_defaults(func=cmd_sample_density)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
