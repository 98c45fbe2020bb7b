"""Weight sequences: positive q_0, q_1, ... summing to one.

Four families are built in.  Geometric and Luroth have exact rational
closed forms for every partial and tail sum, so they run in exact mode.
The power-law family is normalized by a zeta value and therefore always
runs on enclosures.  Custom finite lists are padded with a geometric tail
(mass carved out of the last user entry) so the alphabet stays infinite.

Numeric results are either ``Fraction`` (exact mode) or ``mpmath.iv``
intervals; see ``rigor`` for the conventions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from mpmath import iv

from . import rigor
from .errors import CapacityError, ParameterRangeError
from .rigor import Num, ipow, powsum, to_iv

_MAX_SCAN = 10**6
_LUR_DIRECT = 600

_ZERO = Fraction(0)
_ONE = Fraction(1)


@lru_cache(maxsize=None)
def _zeta_enclosure(m0: Fraction, prec: int):
    return powsum(m0, Fraction(0), 1, None)


def _max_num(x: Num, y: Num) -> Num:
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return max(x, y)
    xl, xu = rigor.endpoints(x)
    yl, yu = rigor.endpoints(y)
    return rigor.hull(max(xl, yl), max(xu, yu))


@dataclass(frozen=True)
class QVectorSpec:
    """One weight sequence, immutable; all queries are pure.

    Use the factory constructors: :meth:`geometric`, :meth:`luroth`,
    :meth:`powerlaw`, :meth:`custom`.
    """

    family: str
    ratio: Optional[Fraction] = None
    m0: Optional[Fraction] = None
    weights: Optional[tuple[Fraction, ...]] = None
    pad_mass: Optional[Fraction] = None

    # -- construction -------------------------------------------------

    @classmethod
    def geometric(cls, ratio: Fraction) -> "QVectorSpec":
        ratio = Fraction(ratio)
        if not (0 < ratio < 1):
            raise ParameterRangeError(f"geometric ratio must be in (0,1), got {ratio}")
        return cls(family="geometric", ratio=ratio)

    @classmethod
    def luroth(cls) -> "QVectorSpec":
        return cls(family="luroth")

    @classmethod
    def powerlaw(cls, m0) -> "QVectorSpec":
        m0 = Fraction(m0) if not isinstance(m0, float) else Fraction(str(m0))
        if m0 <= 1:
            raise ParameterRangeError(f"power-law exponent must exceed 1, got {m0}")
        return cls(family="powerlaw", m0=m0)

    @classmethod
    def custom(cls, weights, pad_mass=Fraction(1, 2**20)) -> "QVectorSpec":
        ws = tuple(Fraction(w) for w in weights)
        pad = Fraction(pad_mass)
        if not ws:
            raise ParameterRangeError("custom weights must be nonempty")
        if any(w <= 0 for w in ws):
            raise ParameterRangeError("custom weights must be positive")
        if sum(ws) != 1:
            raise ParameterRangeError(f"custom weights must sum to 1, got {sum(ws)}")
        if not (0 < pad < ws[-1]):
            raise ParameterRangeError("pad mass must be positive and below the last weight")
        return cls(family="custom", weights=ws, pad_mass=pad)

    # -- basics --------------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self.family != "powerlaw"

    @property
    def numeric_mode(self) -> str:
        return "exact" if self.is_exact else "interval"

    def _norm_const(self):
        """Power-law normalizer 1/zeta(m0) as an enclosure."""
        return 1 / _zeta_enclosure(self.m0, iv.prec)

    def _effective_weights(self) -> tuple[Fraction, ...]:
        ws = list(self.weights)
        ws[-1] -= self.pad_mass
        return tuple(ws)

    # -- the four point queries ---------------------------------------

    def q(self, i: int) -> Num:
        """Weight q_i.  Every index i >= 0 is valid."""
        if i < 0:
            raise ParameterRangeError("weight index must be nonnegative")
        if self.family == "geometric":
            return self.ratio * (1 - self.ratio) ** i
        if self.family == "luroth":
            return Fraction(1, (i + 1) * (i + 2))
        if self.family == "powerlaw":
            return self._norm_const() * ipow(i + 1, -self.m0)
        eff = self._effective_weights()
        k = len(eff)
        if i < k:
            return eff[i]
        return self.pad_mass * Fraction(1, 2 ** (i - k + 1))

    def head_sum(self, n: int) -> Num:
        """sum_{i<n} q_i; zero at n=0, monotone in n."""
        if n < 0:
            raise ParameterRangeError("head_sum index must be nonnegative")
        if n == 0:
            return _ZERO
        if self.family == "geometric":
            return 1 - (1 - self.ratio) ** n
        if self.family == "luroth":
            return Fraction(n, n + 1)
        if self.family == "powerlaw":
            return self._norm_const() * powsum(self.m0, Fraction(0), 1, n)
        return 1 - self.tail_sum(n)

    def tail_sum(self, n: int) -> Num:
        """sum_{i>=n} q_i, strictly decreasing to zero."""
        if n < 0:
            raise ParameterRangeError("tail_sum index must be nonnegative")
        if self.family == "geometric":
            return (1 - self.ratio) ** n
        if self.family == "luroth":
            return Fraction(1, n + 1)
        if self.family == "powerlaw":
            return self._norm_const() * powsum(self.m0, Fraction(0), n + 1, None)
        eff = self._effective_weights()
        k = len(eff)
        if n >= k:
            return self.pad_mass * Fraction(1, 2 ** (n - k))
        return sum(eff[n:], _ZERO) + self.pad_mass

    def range_sum(self, a: int, b: int) -> Num:
        """sum_{i=a}^{b} q_i (empty when b < a)."""
        if b < a:
            return _ZERO
        if self.is_exact:
            return self.head_sum(b + 1) - self.head_sum(a)
        return self._norm_const() * powsum(self.m0, Fraction(0), a + 1, b + 1)

    def max_weight(self) -> Num:
        """The largest weight; found by the tail-cutoff scan."""
        return self._max_weight_scan()[0]

    def _max_weight_scan(self) -> tuple[Num, int]:
        best = self.q(0)
        i = 1
        while i <= _MAX_SCAN:
            t = self.tail_sum(i)
            if rigor.lt_certain(t, best):
                return best, i
            best = _max_num(best, self.q(i))
            i += 1
        raise CapacityError("max_weight scan exceeded its iteration cap")

    # -- power sums ----------------------------------------------------

    def power_tail_converges(self, s: Fraction) -> bool:
        """Whether sum_i q_i^s is finite (decided exactly per family)."""
        if s <= 0:
            raise ParameterRangeError("power exponent must be positive")
        if self.family == "luroth":
            return 2 * s > 1
        if self.family == "powerlaw":
            return self.m0 * s > 1
        return True

    def power_sum(self, s: Fraction, a: int, b: Optional[int] = None) -> Num:
        """Enclosure of sum_{i=a}^{b} q_i^s (b=None for the infinite tail).

        Raises CapacityError on a certified-divergent infinite tail; call
        :meth:`power_tail_converges` first when divergence is expected.
        """
        s = Fraction(s)
        if s <= 0:
            raise ParameterRangeError("power exponent must be positive")
        if b is not None and b < a:
            return to_iv(0)
        if s == 1:
            if b is None:
                return self.tail_sum(a)
            return self.range_sum(a, b)
        if b is None and not self.power_tail_converges(s):
            raise CapacityError(f"divergent power sum at exponent {s} for {self.family}")
        if self.family == "geometric":
            u = ipow(1 - self.ratio, s)
            first = ipow(1 - self.ratio, s * a)
            if b is None:
                series = first / (1 - u)
            else:
                series = (first - ipow(1 - self.ratio, s * (b + 1))) / (1 - u)
            return ipow(self.ratio, s) * series
        if self.family == "luroth":
            if b is not None and b - a + 1 <= _LUR_DIRECT:
                total = to_iv(0)
                for i in range(a, b + 1):
                    total = total + ipow(Fraction(1, (i + 1) * (i + 2)), s)
                return total
            # exact head, then squeeze (i+1)(i+2) between (i+3/2)^2 (1 - z)
            # and (i+3/2)^2; pushing the squeeze start out keeps it sharp
            head = self.power_sum(s, a, a + _LUR_DIRECT - 1)
            start = a + _LUR_DIRECT
            base = powsum(2 * s, Fraction(3, 2), start, b)
            z = Fraction(1, (2 * start + 3) ** 2)
            return head + rigor.hull(base, base * ipow(1 - z, -s))
        if self.family == "powerlaw":
            c = self._norm_const()
            bb = None if b is None else b + 1
            return ipow(c, s) * powsum(self.m0 * s, Fraction(0), a + 1, bb)
        eff = self._effective_weights()
        k = len(eff)
        total = to_iv(0)
        for i in range(a, min(k, b + 1 if b is not None else k)):
            total = total + ipow(eff[i], s)
        pad_from = max(a, k)
        if b is None or b >= k:
            u = ipow(Fraction(1, 2), s)
            first = ipow(self.pad_mass * Fraction(1, 2 ** (pad_from - k + 1)), s)
            if b is None:
                total = total + first / (1 - u)
            else:
                tail_len = b - pad_from + 1
                total = total + first * (1 - ipow(u, tail_len)) / (1 - u)
        return total

    # -- serialization -------------------------------------------------

    def to_json(self) -> dict:
        if self.family == "geometric":
            return {"family": "geometric", "ratio": rigor.frac_str(self.ratio)}
        if self.family == "luroth":
            return {"family": "luroth"}
        if self.family == "powerlaw":
            return {"family": "powerlaw", "m0": rigor.frac_str(self.m0)}
        return {
            "family": "custom",
            "weights": [rigor.frac_str(w) for w in self.weights],
            "pad_mass": rigor.frac_str(self.pad_mass),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "QVectorSpec":
        fam = doc.get("family")
        if fam == "geometric":
            return cls.geometric(rigor.parse_frac(str(doc["ratio"])))
        if fam == "luroth":
            return cls.luroth()
        if fam == "powerlaw":
            return cls.powerlaw(rigor.parse_frac(str(doc["m0"])))
        if fam == "custom":
            pad = doc.get("pad_mass", Fraction(1, 2**20))
            return cls.custom(
                [rigor.parse_frac(str(w)) for w in doc["weights"]],
                rigor.parse_frac(str(pad)) if isinstance(pad, str) else pad,
            )
        raise ParameterRangeError(f"unknown q-vector family: {fam!r}")
