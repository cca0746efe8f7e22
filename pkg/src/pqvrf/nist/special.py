"""Special functions used by the test statistics."""

from __future__ import annotations

import math

from scipy import special as _sp


class ConvergenceError(ArithmeticError):
    pass


def erfc(x: float) -> float:
    return math.erfc(x)


def igamc(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x)."""
    if not a > 0:
        raise ValueError("igamc needs a > 0")
    if x < 0:
        raise ValueError("igamc needs x >= 0")
    if x == 0:
        return 1.0
    value = float(_sp.gammaincc(a, x))
    if not math.isfinite(value):
        raise ConvergenceError(f"igamc({a}, {x}) did not converge")
    return min(1.0, max(0.0, value))


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))
