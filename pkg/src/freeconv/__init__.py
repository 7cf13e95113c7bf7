"""Numerical free convolution of probability measures with spectral accuracy."""

from . import errors
from .catalog import (
    cauchy_law,
    gaussian,
    marchenko_pastur,
    quartic_equilibrium,
    semicircle,
)
from .cauchy import (
    CauchyEvaluator,
    DEFAULT_ELLIPSE_RADIUS,
    fit_ellipse,
    fit_smooth,
    fit_sqrt,
)
from .convolution import (
    AdditionOracle,
    CompressionOracle,
    ConvolutionRequest,
    MultiplicationOracle,
    free_add,
    free_compress,
    free_multiply,
    prepare_invertible,
)
from .inversion import (
    InverseResult,
    Inverter,
    PolynomialRoots,
    companion_roots,
    invert,
    invert_ellipse,
    invert_halfsqrt,
    invert_point,
    invert_smooth,
    invert_sqrt,
    invert_uniform,
    inverse_derivative,
    inverse_second_derivative,
)
from .measures import (
    AtomSum,
    CumulativeDensity,
    DEFAULT_GAUSSIAN_VARIANCE,
    EllipseMeasure,
    HalfSqrtMeasure,
    MarchenkoPastur,
    Measure,
    PointMass,
    SmoothMeasure,
    SqrtMeasure,
    UniformMeasure,
    cdf,
    density,
    is_compact,
    mass,
    moment,
    support_interval,
    times_x,
    validate_probability,
)
from .recovery import (
    CallableOracle,
    InverseOracle,
    OracleValue,
    PointCloud,
    RecoveredMeasure,
    RecoveryDiagnostics,
    SupportBracket,
    compute_measure,
    find_support,
    generate_cloud,
    prune,
    recover_smooth,
    recover_sqrt,
)
from .rmt import (
    EmpiricalCDF,
    EnsembleSpec,
    eigenvalues_symmetric,
    ks_between,
    ks_distance,
    sample_ensemble,
    sample_goe,
    sample_orthogonal,
)

__version__ = "0.1.0"
