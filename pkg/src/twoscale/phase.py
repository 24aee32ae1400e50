"""Compensated phase arithmetic for fast-oscillation bookkeeping.

The diagonal phase t/eps can reach ~1e6 radians while the quantities that
actually matter are phases modulo a period.  Plain double products like
(t/eps) * b(xi) lose every significant digit of the reduced phase, so the
helpers here carry values as unevaluated double-double pairs (hi + lo with
|lo| <= ulp(hi)/2) and reduce modulo the period before any exponential is
formed.

No external dependencies beyond numpy; all routines accept scalars or
arrays and are branch-free so they vectorize.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1, Dekker splitting constant

# 2*pi to double-double precision (hi is the float64 nearest to 2*pi)
TWO_PI_HI = 6.283185307179586
TWO_PI_LO = 2.4492935982947064e-16


def two_sum(a, b):
    """Error-free sum: returns (s, e) with s = fl(a+b) and a+b = s+e exactly."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def two_prod(a, b):
    """Error-free product via Dekker splitting: a*b = p + e exactly."""
    p = a * b
    ca = _SPLITTER * a
    ahi = ca - (ca - a)
    alo = a - ahi
    cb = _SPLITTER * b
    bhi = cb - (cb - b)
    blo = b - bhi
    e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, e


def dd_add(ahi, alo, bhi, blo):
    """Double-double addition (Knuth/Dekker, ~1e-32 relative)."""
    s, e = two_sum(ahi, bhi)
    e = e + (alo + blo)
    return two_sum(s, e)


def dd_div(a, b):
    """Double-double quotient of two doubles: a/b = hi + lo almost exactly."""
    hi = a / b
    p, e = two_prod(hi, b)
    lo = ((a - p) - e) / b
    return hi, lo


def dd_mul_scalar(ahi, alo, b):
    """(ahi + alo) * b as a double-double pair; b is a plain double (array ok)."""
    p, e = two_prod(ahi, b)
    e = e + alo * b
    return two_sum(p, e)


def reduce_two_pi(hi, lo=0.0):
    """Reduce hi+lo modulo 2*pi into [0, 2*pi) with double-double accuracy."""
    n = np.floor((hi + lo) / TWO_PI_HI)
    p1, e1 = two_prod(n, TWO_PI_HI)
    rhi, rlo = dd_add(hi, lo, -p1, -(e1 + n * TWO_PI_LO))
    r = rhi + rlo
    # one corrective pass in case of boundary rounding
    r = np.where(r < 0.0, r + TWO_PI_HI, r)
    r = np.where(r >= TWO_PI_HI, r - TWO_PI_HI, r)
    return r


def oscillation_phases(t, eps, b):
    """Per-mode phases (t/eps)*b reduced mod 2*pi, fit for exponentiation.

    t, eps are scalars, b an array of multiplier frequencies.  The quotient
    t/eps is expanded to double-double before the per-mode product so the
    reduced phases stay accurate even when t/eps ~ 1e6.
    """
    qhi, qlo = dd_div(t, eps)
    phi, plo = dd_mul_scalar(qhi, qlo, np.asarray(b, dtype=float))
    return reduce_two_pi(phi, plo)


def exact_mod(value_num, value_den, period):
    """(value_num/value_den) mod period, evaluated in exact rational arithmetic.

    All three arguments are binary floats, hence exact rationals; the result
    is the correctly rounded float of the mathematically exact remainder.
    Used for one-shot diagonal phases tau* = (t/eps) mod P.
    """
    q = Fraction(value_num) / (Fraction(value_den) * Fraction(period))
    frac = q - (q.numerator // q.denominator)
    return float(frac * Fraction(period))


class PhaseAccumulator:
    """Tracks a phase advanced by a fixed increment modulo a period.

    Keeps the running value as a double-double pair and re-reduces after
    every step, so the drift after 1e5 steps stays below ~1e-12 even when
    the raw increment is thousands of periods.
    """

    def __init__(self, increment_num: float, increment_den: float, period: float):
        self.period = float(period)
        # increment = increment_num/increment_den, pre-reduced mod period
        self._inc_hi, self._inc_lo = self._reduced_increment(
            increment_num, increment_den, period
        )
        self._hi = 0.0
        self._lo = 0.0

    @staticmethod
    def _reduced_increment(num, den, period):
        q = Fraction(num) / (Fraction(den) * Fraction(period))
        frac = q - (q.numerator // q.denominator)
        r = frac * Fraction(period)
        hi = float(r)
        lo = float(r - Fraction(hi))
        return hi, lo

    @property
    def value(self) -> float:
        """Current phase in [0, period)."""
        v = self._hi + self._lo
        if v < 0.0:
            v += self.period
        if v >= self.period:
            v -= self.period
        return v

    def step(self) -> float:
        """Advance by one increment; returns the new phase."""
        hi, lo = dd_add(self._hi, self._lo, self._inc_hi, self._inc_lo)
        if hi >= self.period:
            hi, e = two_sum(hi, -self.period)
            lo = lo + e
        self._hi, self._lo = two_sum(hi, lo)
        return self.value
