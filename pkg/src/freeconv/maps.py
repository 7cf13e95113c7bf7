"""Conformal building blocks: Moebius, Joukowsky and affine interval maps.

All functions accept scalars or numpy arrays and use the principal square
root, so ``joukowsky_inv`` has its branch cut along [-1, 1] and maps the
slit plane onto the open unit disk.
"""

import numpy as np


def mobius(x):
    """u(x) = (i - x)/(i + x); upper half-plane -> unit disk interior."""
    return (1j - x) / (1j + x)


def mobius_inv(lam):
    """Inverse of ``mobius``: x = i (1 - lam)/(1 + lam)."""
    return 1j * (1.0 - lam) / (1.0 + lam)


def mobius_d1(x):
    return -2j / (1j + x) ** 2


def mobius_d2(x):
    return 4j / (1j + x) ** 3


def joukowsky(w):
    """J(w) = (w + 1/w)/2."""
    return 0.5 * (w + 1.0 / w)


def _slit_sqrt(z):
    # sqrt(z - 1) sqrt(z + 1) with principal branches; cut on [-1, 1]
    z = np.asarray(z, dtype=complex)
    return np.sqrt(z - 1.0) * np.sqrt(z + 1.0)


def joukowsky_inv(z):
    """Inverse Joukowsky branch with |J+^-1(z)| < 1 off [-1, 1].

    Computed as 1/(z + sqrt(z-1) sqrt(z+1)): the principal slit square root
    aligns in sign with z, so the sum never cancels, unlike the textbook
    difference form which loses all precision for |z| >~ 1e8.
    """
    z = np.asarray(z, dtype=complex)
    return 1.0 / (z + _slit_sqrt(z))


def joukowsky_inv_d1(z):
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -1.0 / ((z + _slit_sqrt(z)) * _slit_sqrt(z))


def joukowsky_inv_d2(z):
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 / _slit_sqrt(z) ** 3


def to_interval(a, b, t):
    """Affine map M_(a,b): [-1, 1] -> [a, b]."""
    return 0.5 * (a + b) + 0.5 * (b - a) * t


def from_interval(a, b, z):
    """Inverse of the affine map M_(a,b)."""
    return (2.0 * z - (a + b)) / (b - a)


def to_halfline(a, t):
    """M_(a,inf): maps (-1, 1) onto (a, inf); t = 1 goes to infinity."""
    return a + (1.0 + t) / (1.0 - t)


def from_halfline(a, z):
    """Inverse of ``to_halfline``."""
    return (z - a - 1.0) / (z - a + 1.0)


def from_halfline_d1(a, z):
    return 2.0 / (z - a + 1.0) ** 2


def from_halfline_d2(a, z):
    return -4.0 / (z - a + 1.0) ** 3


def unit_circle_nodes(m):
    """m evenly spaced unit-circle points starting at -1."""
    return -np.exp(2j * np.pi * np.arange(m) / m)


def chebyshev_second_kind_nodes(n):
    """n Chebyshev points of the second kind, ascending on [-1, 1]."""
    if n == 1:
        return np.zeros(1)
    return -np.cos(np.pi * np.arange(n) / (n - 1))
