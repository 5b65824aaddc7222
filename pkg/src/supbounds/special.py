"""Standard normal and gamma helpers shared by the rest of the package.

Everything here is a thin, scalar-or-array wrapper around ``scipy.special``.
Products of many normal CDF factors must always be formed as sums of
:func:`log_normal_cdf` values; the linear-domain functions are for single
factors only.
"""
import numpy as np
from scipy import special as _sp

SQRT_2PI = float(np.sqrt(2.0 * np.pi))
LOG_SQRT_2PI = float(0.5 * np.log(2.0 * np.pi))


def _scalar_or_array(x, out):
    if np.ndim(x) == 0:
        return float(out)
    return out


def normal_cdf(x):
    """Standard normal distribution function Phi(x).

    Computed from the complementary error function, so both tails keep full
    relative accuracy; saturates to exactly 0 or 1 far in the tails.
    """
    return _scalar_or_array(x, _sp.ndtr(np.asarray(x, dtype=float)))


def normal_sf(x):
    """Upper tail 1 - Phi(x), accurate for large positive x."""
    return _scalar_or_array(x, _sp.ndtr(-np.asarray(x, dtype=float)))


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(x, np.exp(-0.5 * x * x) / SQRT_2PI)


def log_normal_cdf(x):
    """log Phi(x) without underflow in the lower tail (finite down to x ~ -1e150)."""
    return _scalar_or_array(x, _sp.log_ndtr(np.asarray(x, dtype=float)))


def log_gamma(x):
    """log Gamma(x) for x > 0.

    Raises
    ------
    ValueError
        If any argument is not strictly positive.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"log_gamma requires x > 0, got {x!r}")
    return _scalar_or_array(x, _sp.gammaln(arr))


def log_diff_exp(la, lb):
    """log(exp(la) - exp(lb)) for la >= lb; returns -inf when they are equal."""
    if lb > la:
        raise ValueError("log_diff_exp needs la >= lb")
    if la == -np.inf or lb == la:
        return -np.inf
    return la + np.log(-np.expm1(lb - la))
