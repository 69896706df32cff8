"""Statistical primitives: normal CDF, Pearson correlation, Student-t tails.

Everything here is a pure function of its arguments.  The normal CDF backs
the 0-100 rescaling of z-scores; Pearson + the t-transform back the
view-count/score-delta analytics.
"""

from __future__ import annotations

import math
from typing import Sequence

_SQRT2 = math.sqrt(2.0)


class ZeroVarianceError(ValueError):
    """Raised when a correlation is requested over a constant series."""


def normal_cdf(z: float) -> float:
    """Standard normal cumulative distribution function.

    Backed by the C library's erf (sub-ulp accurate, far inside the 1e-7
    absolute tolerance required of the score rescaling).
    """
    if not math.isfinite(z):
        raise ValueError(f"z must be finite, got {z!r}")
    return 0.5 * (1.0 + math.erf(z / _SQRT2))


def _beta_continued_fraction(a: float, b: float, x: float,
                             eps: float = 1e-12, max_iter: int = 300) -> float:
    # Modified Lentz evaluation of the incomplete-beta continued fraction.
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b), continued-fraction evaluation."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    # Use the symmetry that converges fastest.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_two_tailed(t: float, df: int) -> float:
    """Two-tailed tail probability P(|T| >= |t|) for Student's t with df dof."""
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if not math.isfinite(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Product-moment correlation and its two-tailed p-value.

    The p-value uses the exact t-transform t = r * sqrt((n-2) / (1-r^2))
    against Student's t with n-2 degrees of freedom.
    """
    n = len(x)
    if len(y) != n:
        raise ValueError(f"series lengths differ: {n} vs {len(y)}")
    if n < 3:
        raise ValueError("need at least 3 paired observations")
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVarianceError("correlation undefined for a constant series")
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    df = n - 2
    t = r * math.sqrt(df / (1.0 - r * r))
    return r, student_t_two_tailed(t, df)
