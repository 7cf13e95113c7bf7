"""Constructors for the standard laws used as convolution inputs."""

import numpy as np

from .cauchy import fit_smooth
from .measures import (
    DEFAULT_GAUSSIAN_VARIANCE,
    MarchenkoPastur,
    SqrtMeasure,
)


def semicircle(variance=1.0, center=0.0):
    """Semicircle law with the given variance, supported on center +- 2 sqrt(v)."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    radius = 2.0 * np.sqrt(variance)
    coeff = 1.0 / (np.pi * np.sqrt(variance))
    return SqrtMeasure(center - radius, center + radius, np.array([coeff]))


def gaussian(mean=0.0, variance=DEFAULT_GAUSSIAN_VARIANCE, n=64):
    """Gaussian law fitted as a smoothly decaying measure (default var 1/sqrt 2)."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    sd = np.sqrt(variance)

    def dens(x):
        return np.exp(-0.5 * ((x - mean) / sd) ** 2) / (sd * np.sqrt(2.0 * np.pi))

    return fit_smooth(dens, n)


def cauchy_law(location=0.0, scale=1.0, n=8):
    """Cauchy law; the standard one has the exact three-term Laurent series."""
    if scale <= 0:
        raise ValueError("scale must be positive")

    def dens(x):
        return scale / (np.pi * (scale * scale + (x - location) ** 2))

    return fit_smooth(dens, n)


def marchenko_pastur():
    """Singular Marchenko-Pastur law sqrt(4 - x)/(2 pi sqrt(x)) on (0, 4)."""
    return MarchenkoPastur()


def quartic_equilibrium():
    """Equilibrium measure of the potential x^4: (2x^2 + a^2) sqrt(a^2 - x^2)/pi."""
    a = (4.0 / 3.0) ** 0.25
    scale = a ** 3 / np.pi
    return SqrtMeasure(-a, a, scale * np.array([1.5, 0.0, 0.5]))
