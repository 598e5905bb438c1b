"""Gamma function by the Lanczos approximation (g=7, nine coefficients).

Relative accuracy is better than 1e-13 on [0.5, 30], the range used by the
chi-squared and gamma weighting functions. Arguments below 0.5 go through the
reflection formula.
"""

import numpy as np

LANCZOS_G = 7.0
LANCZOS_COEFFICIENTS = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_TWO_PI = 0.5 * np.log(2.0 * np.pi)


def _lanczos_series(z: np.ndarray) -> np.ndarray:
    # z has already been shifted by -1
    total = np.full_like(z, LANCZOS_COEFFICIENTS[0])
    for i in range(1, LANCZOS_COEFFICIENTS.size):
        total = total + LANCZOS_COEFFICIENTS[i] / (z + i)
    return total


def gammaln(x):
    """Natural log of the gamma function for x > 0.

    >>> round(float(gammaln(5.0)), 12) == round(float(np.log(24.0)), 12)
    True
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("gammaln is only defined here for positive arguments")
    small = x < 0.5
    # Reflection: log G(x) = log(pi / sin(pi x)) - log G(1 - x)
    z = np.where(small, 1.0 - x, x) - 1.0
    t = z + LANCZOS_G + 0.5
    large = _HALF_LOG_TWO_PI + (z + 0.5) * np.log(t) - t + np.log(_lanczos_series(z))
    with np.errstate(divide="ignore", invalid="ignore"):
        reflected = np.log(np.pi / np.sin(np.pi * x)) - large
    out = np.where(small, reflected, large)
    return out[()] if out.ndim == 0 else out


def gamma(x):
    """Gamma function for x > 0.

    >>> abs(float(gamma(0.5)) - np.sqrt(np.pi)) < 1e-12
    True
    """
    return np.exp(gammaln(x))
