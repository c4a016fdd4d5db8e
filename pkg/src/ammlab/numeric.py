"""Shared numeric helpers: square roots with exactness control and a
derivative-free maximizer.

Amounts in this package are either ``fractions.Fraction`` (the exact
reference arithmetic) or ``float`` (the fast path).  Square roots are the
one place where exact arithmetic leaks: a rational has an exact rational
square root only when numerator and denominator are perfect squares.
``sqrt_bounds`` returns a rigorous enclosure so callers can keep strict
comparisons sound even when the root is irrational.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Tuple, Union

Num = Union[int, float, Fraction]

#: Golden ratio minus one; step factor of the section search.
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def is_exact(value: Num) -> bool:
    """True for the exact (int/Fraction) arithmetic path."""
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def sqrt_bounds(value, bits: int = 128) -> Tuple[Fraction, Fraction]:
    """Rational enclosure ``lo <= sqrt(value) <= hi`` with ``hi - lo <= lo * 2**-bits``-ish.

    ``lo == hi`` exactly when ``value`` is the square of a rational, so the
    enclosure doubles as a perfect-square test.
    """
    q = Fraction(value)
    if q < 0:
        raise ValueError("square root of a negative quantity")
    if q == 0:
        return Fraction(0), Fraction(0)
    num, den = q.numerator, q.denominator
    # sqrt(num/den) = sqrt(num*den)/den; scale by 4**bits before isqrt.
    scaled = num * den << (2 * bits)
    root = math.isqrt(scaled)
    denom = den << bits
    if root * root == scaled:
        exact = Fraction(root, denom)
        return exact, exact
    return Fraction(root, denom), Fraction(root + 1, denom)


def sqrt_any(value: Num, bits: int = 96):
    """Square root preserving the caller's arithmetic flavor.

    Floats go through ``math.sqrt``; exact inputs get a Fraction that is
    exact for perfect squares and within ``2**-bits`` relative otherwise.
    """
    if isinstance(value, float):
        return math.sqrt(value)
    lo, hi = sqrt_bounds(value, bits=bits)
    if lo == hi:
        return lo
    return (lo + hi) / 2


def rel_close(a: Num, b: Num, rel: float = 1e-12) -> bool:
    """Relative closeness that degrades to exact equality for exact inputs."""
    if is_exact(a) and is_exact(b):
        return a == b
    fa, fb = float(a), float(b)
    return abs(fa - fb) <= rel * max(abs(fa), abs(fb), 1e-300)


def golden_section_max(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    rel_tol: float = 1e-12,
    coarse: int = 33,
) -> Tuple[float, float]:
    """Maximize ``fn`` over ``[lo, hi]``; returns ``(argmax, max)``.

    A coarse scan brackets the best region first, which keeps the search
    robust when the objective is only piecewise smooth (branch switches in
    the pricing rules); golden-section then refines the bracket down to
    ``rel_tol`` relative interval width.
    """
    if not hi > lo:
        raise ValueError("empty search interval")
    xs = [lo + (hi - lo) * k / (coarse - 1) for k in range(coarse)]
    vals = [fn(x) for x in xs]
    best = max(range(coarse), key=lambda k: vals[k])
    a = xs[max(best - 1, 0)]
    b = xs[min(best + 1, coarse - 1)]

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    scale = max(abs(a), abs(b), 1.0)
    while (b - a) > rel_tol * scale:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
    x_star = (a + b) / 2.0
    f_star = fn(x_star)
    # never do worse than the coarse scan
    if vals[best] > f_star:
        return xs[best], vals[best]
    return x_star, f_star
