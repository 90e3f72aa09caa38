"""Exact rational numerics: pi bracketing, integer roots, radical-sum comparison.

Everything here is exact over ``fractions.Fraction``.  Irrational quantities
(square roots, b-th roots) are never evaluated; they are either replaced by
certified rational upper bounds or compared via integer-power cross checks.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Iterable, Sequence, Tuple

# Rational bracketing of pi.  Every threshold involving pi picks the side
# that makes the check conservative (valid even for the true value).
PI_LOW = Fraction(333, 106)
PI_HIGH = Fraction(355, 113)

ZERO = Fraction(0)
ONE = Fraction(1)


def iroot_floor(n: int, k: int) -> int:
    """Largest integer m with m**k <= n, for n >= 0, k >= 1."""
    if n < 0:
        raise ValueError("iroot_floor needs n >= 0")
    if k == 1 or n in (0, 1):
        return n
    if k == 2:
        return isqrt(n)
    # Newton iteration on integers, seeded above the root.
    m = 1 << (n.bit_length() // k + 1)
    while True:
        t = ((k - 1) * m + n // m ** (k - 1)) // k
        if t >= m:
            break
        m = t
    while m ** k > n:
        m -= 1
    while (m + 1) ** k <= n:
        m += 1
    return m


def root_upper(x: Fraction, k: int, bits: int = 32) -> Fraction:
    """Smallest multiple of 2**-bits that is >= x**(1/k)  (x >= 0).

    The result q satisfies q**k >= x and q - x**(1/k) <= 2**-bits.
    """
    if x < 0:
        raise ValueError("root_upper needs x >= 0")
    if x == 0:
        return ZERO
    scale = 1 << bits
    target = x.numerator * scale ** k
    m = iroot_floor(target // x.denominator, k)
    while m ** k * x.denominator < target:
        m += 1
    return Fraction(m, scale)


def root_lower(x: Fraction, k: int, bits: int = 32) -> Fraction:
    """Largest multiple of 2**-bits that is <= x**(1/k)  (x >= 0)."""
    if x < 0:
        raise ValueError("root_lower needs x >= 0")
    if x == 0:
        return ZERO
    scale = 1 << bits
    m = iroot_floor(x.numerator * scale ** k // x.denominator, k)
    while m ** k * x.denominator > x.numerator * scale ** k:
        m -= 1
    return Fraction(m, scale)


def sqrt_upper(x: Fraction, bits: int = 32) -> Fraction:
    """Smallest dyadic (step 2**-bits) rational q with q*q >= x."""
    return root_upper(x, 2, bits)


def sqrt_lower(x: Fraction, bits: int = 32) -> Fraction:
    return root_lower(x, 2, bits)


def exact_root(v: Fraction, b: int) -> Fraction | None:
    """v**(1/b) if it is rational, else None (v >= 0)."""
    if v < 0:
        return None
    rn = iroot_floor(v.numerator, b)
    if rn ** b != v.numerator:
        return None
    rd = iroot_floor(v.denominator, b)
    if rd ** b != v.denominator:
        return None
    return Fraction(rn, rd)


def _root_bounds(v: Fraction, b: int, bits: int) -> Tuple[Fraction, Fraction]:
    """Dyadic enclosure of v**(1/b) of width 2**-bits."""
    scale = 1 << bits
    lo = iroot_floor(v.numerator * scale ** b // v.denominator, b)
    return Fraction(lo, scale), Fraction(lo + 1, scale)


def cmp_radical_sum(
    terms: Iterable[Tuple[Fraction, Fraction]], b: int, target: Fraction
) -> int:
    """Exact sign of  sum(c * v**(1/b) for (c, v) in terms) - target.

    Radicands v must be >= 0.  Terms whose radicands differ by a perfect
    b-th-power ratio are merged first, so any surviving radical part is
    linearly independent from the rationals and a nonzero value separates
    from `target` after finitely many interval refinements.
    """
    if b < 1:
        raise ValueError("b must be >= 1")
    rational = -target
    classes: list[list[Fraction]] = []  # [representative radicand, net coefficient]
    for coef, v in terms:
        if coef == 0 or v == 0:
            continue
        if v < 0:
            raise ValueError("radicand must be >= 0")
        if b == 1:
            rational += coef * v
            continue
        r = exact_root(v, b)
        if r is not None:
            rational += coef * r
            continue
        for cls in classes:
            q = exact_root(v / cls[0], b)
            if q is not None:
                cls[1] += coef * q
                break
        else:
            classes.append([v, coef])
    classes = [c for c in classes if c[1] != 0]
    if not classes:
        return (rational > 0) - (rational < 0)

    bits = 32
    while bits <= 16384:
        lo = rational
        hi = rational
        for v, coef in classes:
            blo, bhi = _root_bounds(v, b, bits)
            if coef > 0:
                lo += coef * blo
                hi += coef * bhi
            else:
                lo += coef * bhi
                hi += coef * blo
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        bits *= 2
    raise ArithmeticError("radical comparison did not separate (unexpected)")


def cmp_fraction(a: Fraction, c: Fraction) -> int:
    return (a > c) - (a < c)


def dyadic_snap(value: float, step: Fraction) -> Fraction:
    """Nearest multiple of `step` to a float, as an exact Fraction."""
    k = round(value / float(step))
    return k * step


def dyadic_step_leq(x: Fraction) -> Fraction:
    """Largest power of two that is <= x (x > 0)."""
    if x <= 0:
        raise ValueError("need x > 0")
    e = 0
    p = Fraction(1)
    if p <= x:
        while p * 2 <= x:
            p *= 2
            e += 1
    else:
        while p > x:
            p /= 2
            e -= 1
    return p


def ceil_div_fraction(a: Fraction, d: Fraction) -> int:
    """ceil(a / d) for rationals, d > 0."""
    q = a / d
    return -((-q.numerator) // q.denominator)


def floor_div_fraction(a: Fraction, d: Fraction) -> int:
    q = a / d
    return q.numerator // q.denominator


def frange_indices(lo: Fraction, hi: Fraction, step: Fraction) -> Sequence[int]:
    """Integers k with lo <= k*step <= hi."""
    if hi < lo:
        return range(0, 0)
    k0 = ceil_div_fraction(lo, step)
    k1 = floor_div_fraction(hi, step)
    return range(k0, k1 + 1)
