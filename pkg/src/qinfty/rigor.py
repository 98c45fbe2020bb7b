"""Directed-rounding numeric layer.

Two value kinds circulate in this package: exact rationals
(``fractions.Fraction``) wherever closed forms exist, and rigorous
enclosures (``mpmath.iv`` intervals) everywhere else.  This module owns the
conversions between the two, certified comparisons, and the Euler-Maclaurin
brackets for power sums over integer ranges.  Every enclosure produced here
contains its true value regardless of working precision; precision only
controls width.

mpmath's interval context is process-global, so all precision-sensitive
regions are serialized behind one lock.  Callers get thread safety at the
cost of parallel speedup.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from fractions import Fraction
from math import factorial, floor
from typing import Optional, Union

from mpmath import iv, mp

from .errors import CapacityError

Num = Union[Fraction, "iv.mpf"]

DEFAULT_PREC = 96

_LOCK = threading.RLock()

# Direct summation extends to this index before the asymptotic bracket
# takes over; below it the order-4 remainder would be too wide.
_EM_START = 2048
_DIRECT_RANGE = 600

_B2K = [Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30)]
_B10 = Fraction(5, 66)


@contextmanager
def workprec(bits: int = DEFAULT_PREC):
    """Run a block at the given iv working precision, serialized."""
    with _LOCK:
        old = iv.prec
        iv.prec = bits
        try:
            yield
        finally:
            iv.prec = old


def to_iv(x) -> "iv.mpf":
    """Enclose an int, Fraction, or iv value; ivs pass through."""
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return iv.mpf(x.numerator)
        return iv.mpf(x.numerator) / iv.mpf(x.denominator)
    if isinstance(x, int):
        return iv.mpf(x)
    return iv.mpf(x)


def frac_of_mpf(m) -> Fraction:
    """Exact rational value of an mpf (binary float, so always exact)."""
    sign, man, exp, _ = m._mpf_
    if man == 0:
        return Fraction(0)
    val = Fraction(int(man)) * Fraction(2) ** exp
    return -val if sign else val


def endpoints(x: Num) -> tuple[Fraction, Fraction]:
    """Exact rational endpoints of a value's enclosure."""
    if isinstance(x, Fraction):
        return x, x
    at, bt = x._mpi_
    return frac_of_mpf(mp.make_mpf(at)), frac_of_mpf(mp.make_mpf(bt))


def lower(x: Num) -> Fraction:
    return endpoints(x)[0]


def upper(x: Num) -> Fraction:
    return endpoints(x)[1]


def enclosure_width(x: Num) -> Fraction:
    a, b = endpoints(x)
    return b - a


def hull(lo: Num, hi: Num) -> "iv.mpf":
    """Interval spanning from lower(lo) to upper(hi)."""
    a = to_iv(lo)
    b = to_iv(hi)
    return iv.mpf([mp.make_mpf(a._mpi_[0]), mp.make_mpf(b._mpi_[1])])


def plus_minus(x: Num, err: Num) -> "iv.mpf":
    """Widen x by +-upper(|err|) on both sides."""
    e = upper(err)
    if e < 0:
        e = -e
    return to_iv(x) + hull(-e, e)


def decide_le(x: Num, y: Num) -> Optional[bool]:
    """True if x <= y certified, False if x > y certified, None otherwise."""
    xl, xu = endpoints(x)
    yl, yu = endpoints(y)
    if xu <= yl:
        return True
    if xl > yu:
        return False
    return None


def decide_lt(x: Num, y: Num) -> Optional[bool]:
    """True if x < y certified, False if x >= y certified, None otherwise."""
    xl, xu = endpoints(x)
    yl, yu = endpoints(y)
    if xu < yl:
        return True
    if xl >= yu:
        return False
    return None


def le_certain(x: Num, y: Num) -> bool:
    return decide_le(x, y) is True


def lt_certain(x: Num, y: Num) -> bool:
    return decide_lt(x, y) is True


def contains_value(x: Num, v: Fraction) -> bool:
    a, b = endpoints(x)
    return a <= v <= b


def ipow(base: Num, expo: Num) -> "iv.mpf":
    """Rigorous base**expo for nonnegative base."""
    b = to_iv(base)
    if isinstance(expo, Fraction) and expo.denominator == 1:
        return b ** int(expo)
    return b ** to_iv(expo)


def approx_str(x: Num, digits: int = 12) -> str:
    """Human-readable decimal rendering; display only, not a bound."""
    if isinstance(x, Fraction):
        return mp.nstr(mp.mpf(x.numerator) / x.denominator, digits)
    a, b = x._mpi_
    sa = mp.nstr(mp.make_mpf(a), digits)
    sb = mp.nstr(mp.make_mpf(b), digits)
    if sa == sb:
        return sa
    return f"[{sa}, {sb}]"


def frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_frac(text: str) -> Fraction:
    """Parse 'p/q' or a plain decimal/integer literal into a Fraction."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(text)


def num_to_json(x: Num):
    """Fraction -> 'p/q'; enclosure -> {'lo','hi','approx'} with exact ends."""
    if isinstance(x, Fraction):
        return frac_str(x)
    a, b = endpoints(x)
    return {"lo": frac_str(a), "hi": frac_str(b), "approx": approx_str(x)}


# ---------------------------------------------------------------------------
# Power sums  sum_{j=a}^{b} (j+o)^(-p)  with rigorous brackets.
#
# Small ranges are summed term by term.  Long and infinite ranges use
# Euler-Maclaurin through the B_8 term; since every even derivative of
# x^(-p) keeps one sign, the remainder is bounded by the magnitude of the
# first omitted term, which we widen symmetrically.
# ---------------------------------------------------------------------------

_cum_cache: dict[tuple, list] = {}


def _rising(p_iv, m: int):
    acc = to_iv(1)
    for i in range(m):
        acc = acc * (p_iv + i)
    return acc


def _direct_sum(p: Fraction, o: Fraction, a: int, b: int) -> "iv.mpf":
    p_iv = to_iv(p)
    total = to_iv(0)
    for j in range(a, b + 1):
        total = total + to_iv(j + o) ** (-p_iv)
    return total


def _cache_start(offset: Fraction) -> int:
    # Smallest integer j with j + offset > 0.
    return floor(-offset) + 1


def _cum(p: Fraction, o: Fraction, j: int) -> "iv.mpf":
    """Cached cumulative sum_{t=start}^{j} (t+o)^(-p) from the canonical start."""
    start = _cache_start(o)
    key = (p, o, iv.prec)
    with _LOCK:
        arr = _cum_cache.setdefault(key, [])
        p_iv = to_iv(p)
        while len(arr) <= j - start:
            t = start + len(arr)
            term = to_iv(t + o) ** (-p_iv)
            arr.append(term if not arr else arr[-1] + term)
        return arr[j - start]


def _cached_range(p: Fraction, o: Fraction, a: int, b: int) -> "iv.mpf":
    start = _cache_start(o)
    if a < start:
        raise ValueError("range extends below the positivity threshold")
    hi = _cum(p, o, b)
    if a == start:
        return hi
    return hi - _cum(p, o, a - 1)


def _em_core(p: Fraction, o: Fraction, a: int, b: Optional[int]) -> "iv.mpf":
    p_iv = to_iv(p)
    xa = to_iv(a + o)
    if b is None:
        integral = xa ** (1 - p_iv) / (p_iv - 1)
        s = integral + xa ** (-p_iv) / 2
        for k, b2k in enumerate(_B2K, start=1):
            coeff = Fraction(b2k, factorial(2 * k))
            s = s + to_iv(coeff) * _rising(p_iv, 2 * k - 1) * xa ** (-p_iv - (2 * k - 1))
        rem = to_iv(abs(Fraction(_B10, factorial(10)))) * _rising(p_iv, 9) * xa ** (-p_iv - 9)
        return plus_minus(s, rem)
    xb = to_iv(b + o)
    if p == 1:
        integral = iv.log(xb / xa)
    else:
        integral = (xa ** (1 - p_iv) - xb ** (1 - p_iv)) / (p_iv - 1)
    s = integral + (xa ** (-p_iv) + xb ** (-p_iv)) / 2
    for k, b2k in enumerate(_B2K, start=1):
        coeff = Fraction(b2k, factorial(2 * k))
        s = s + to_iv(coeff) * _rising(p_iv, 2 * k - 1) * (
            xa ** (-p_iv - (2 * k - 1)) - xb ** (-p_iv - (2 * k - 1))
        )
    rem = (
        to_iv(abs(Fraction(_B10, factorial(10))))
        * _rising(p_iv, 9)
        * (xa ** (-p_iv - 9) + xb ** (-p_iv - 9))
    )
    return plus_minus(s, rem)


def powsum(p: Fraction, offset: Fraction, a: int, b: Optional[int] = None) -> "iv.mpf":
    """Rigorous enclosure of sum_{j=a}^{b} (j+offset)^(-p).

    b=None means the infinite tail, which requires p > 1.  p and offset are
    exact so the p=1 and convergence branches are decided exactly.
    """
    if a + offset <= 0:
        raise ValueError("powsum requires a + offset > 0")
    if p <= 0:
        raise ValueError("powsum requires p > 0")
    if b is None:
        if p <= 1:
            raise CapacityError(f"divergent power sum: exponent {p} <= 1")
        if a >= _EM_START:
            return _em_core(p, offset, a, None)
        return _cached_range(p, offset, a, _EM_START - 1) + _em_core(p, offset, _EM_START, None)
    if b < a:
        return to_iv(0)
    if b - a + 1 <= _DIRECT_RANGE:
        return _direct_sum(p, offset, a, b)
    if a >= _EM_START:
        return _em_core(p, offset, a, b)
    if b < _EM_START + _DIRECT_RANGE:
        return _cached_range(p, offset, a, b)
    return _cached_range(p, offset, a, _EM_START - 1) + _em_core(p, offset, _EM_START, b)
