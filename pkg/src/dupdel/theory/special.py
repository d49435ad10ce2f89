"""The two special functions the exact solutions need: ln Gamma and a 2F1 series."""

import math

from ..errors import SeriesDivergenceError, ValidationError

SERIES_RTOL = 1e-16
SERIES_MAX_TERMS = 2_000_000


def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0.

    Delegates to the C library ``lgamma`` (``math.lgamma``), which is
    accurate to a few ulps on the positive axis, well inside 1e-12.
    """
    if not x > 0:
        raise ValidationError(f"log_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


def hypergeometric_2f1(a: float, b: float, c: float, z: float, max_terms: int = SERIES_MAX_TERMS) -> float:
    """Gauss series sum (a)_n (b)_n / ((c)_n n!) z^n for 0 <= z < 1.

    Only the cone with positive parameters is needed here, so all terms
    are positive and the sum stops once the terms are decreasing and below
    ``SERIES_RTOL`` times the running sum. No analytic continuation.
    """
    if c <= 0 and float(c).is_integer():
        raise ValidationError("c must not be a non-positive integer")
    if not (0.0 <= z < 1.0):
        raise ValidationError(f"series needs 0 <= z < 1, got z={z!r}")
    total = 1.0
    term = 1.0
    for n in range(max_terms):
        ratio = (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        term *= ratio
        total += term
        if abs(term) <= SERIES_RTOL * abs(total) and abs(ratio) < 1.0:
            return total
        if term == 0.0:
            return total
    raise SeriesDivergenceError(
        f"2F1({a}, {b}; {c}; {z}) did not converge in {max_terms} terms"
    )
