"""Digit codec and cylinder geometry.

Points of [0,1) are expanded over the infinite alphabet {0,1,2,...}: digit
k is chosen so the point falls between head_sum(k) and head_sum(k+1), the
remainder is rescaled by q_k, and the process repeats.  Cylinders are laid
out left to right, so the left endpoint of a cylinder is a strictly
increasing function of any digit.  That gives the one fact this module
leans on everywhere: comparing two finite expansions is plain position-wise
integer comparison after padding with zeros, independent of the weight
family.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

from . import rigor
from .errors import (
    BoundaryAmbiguityError,
    InvalidIntervalError,
    ParameterRangeError,
)
from .qvector import QVectorSpec
from .rigor import Num, to_iv, workprec

_ENCODE_PREC_CAP = 1024


def _check_digits(digits: Iterable[int]) -> tuple[int, ...]:
    ds = tuple(int(d) for d in digits)
    if any(d < 0 for d in ds):
        raise ParameterRangeError(f"digits must be nonnegative, got {ds}")
    return ds


@dataclass(frozen=True)
class CylinderAddress:
    """A finite digit word; the empty word addresses [0,1)."""

    digits: tuple[int, ...]

    @classmethod
    def of(cls, digits: Iterable[int]) -> "CylinderAddress":
        return cls(_check_digits(digits))

    @property
    def rank(self) -> int:
        return len(self.digits)

    def child(self, digit: int) -> "CylinderAddress":
        return CylinderAddress(self.digits + (int(digit),))

    def to_json(self) -> list:
        return list(self.digits)


@dataclass(frozen=True)
class QRational:
    """A point with finitely many nonzero digits (a cylinder left endpoint).

    Stored normalized: no trailing zero digits, so equality of values is
    equality of tuples.  Ordering is the value order, which coincides with
    lexicographic order on zero-padded digit strings.
    """

    digits: tuple[int, ...]

    @classmethod
    def of(cls, digits: Iterable[int]) -> "QRational":
        ds = _check_digits(digits)
        while ds and ds[-1] == 0:
            ds = ds[:-1]
        return cls(ds)

    @classmethod
    def zero(cls) -> "QRational":
        return cls(())

    def digit_at(self, pos: int) -> int:
        """Digit at 0-based position, implicit zeros beyond the stored word."""
        return self.digits[pos] if pos < len(self.digits) else 0

    def value(self, spec: QVectorSpec) -> Num:
        return decode(spec, CylinderAddress(self.digits)).left

    def _cmp(self, other: "QRational") -> int:
        n = max(len(self.digits), len(other.digits))
        for i in range(n):
            a, b = self.digit_at(i), other.digit_at(i)
            if a != b:
                return -1 if a < b else 1
        return 0

    def __lt__(self, other):
        if other is UNIT_END:
            return True
        return self._cmp(other) < 0

    def __le__(self, other):
        if other is UNIT_END:
            return True
        return self._cmp(other) <= 0

    def __gt__(self, other):
        if other is UNIT_END:
            return False
        return self._cmp(other) > 0

    def __ge__(self, other):
        if other is UNIT_END:
            return False
        return self._cmp(other) >= 0

    def to_json(self) -> dict:
        return {"digits": list(self.digits)}


class _UnitEnd:
    """The closed right endpoint 1, which has no expansion of its own."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "end"


UNIT_END = _UnitEnd()

RightEndpoint = Union[QRational, _UnitEnd]


@dataclass(frozen=True)
class Cylinder:
    """A half-open interval [left, left+length) named by its address."""

    address: CylinderAddress
    left: Num
    length: Num

    @property
    def right(self) -> Num:
        return self.left + self.length

    def to_json(self) -> dict:
        doc = {"digits": list(self.address.digits)}
        doc["left"] = rigor.num_to_json(self.left)
        doc["length"] = rigor.num_to_json(self.length)
        return doc


def right_end(addr: CylinderAddress) -> RightEndpoint:
    """Right endpoint of a cylinder, as a point: bump the final digit.

    The empty address gives the unit's right end, which is not a QRational.
    """
    if not addr.digits:
        return UNIT_END
    return QRational.of(addr.digits[:-1] + (addr.digits[-1] + 1,))


def qr_lt(a: RightEndpoint, b: RightEndpoint) -> bool:
    if a is UNIT_END:
        return False
    return a < b


def qr_le(a: RightEndpoint, b: RightEndpoint) -> bool:
    if a is UNIT_END:
        return b is UNIT_END
    return a <= b


def decode(spec: QVectorSpec, addr: CylinderAddress) -> Cylinder:
    """Cylinder of an address: exact in exact mode, enclosures otherwise.

    left = sum over positions of (product of earlier weights) * head_sum(digit);
    length = product of all the digit weights.
    """
    if spec.is_exact:
        left: Num = Fraction(0)
        scale: Num = Fraction(1)
        for d in addr.digits:
            left = left + scale * spec.head_sum(d)
            scale = scale * spec.q(d)
        return Cylinder(address=addr, left=left, length=scale)
    left_iv = to_iv(0)
    scale_iv = to_iv(1)
    for d in addr.digits:
        left_iv = left_iv + scale_iv * to_iv(spec.head_sum(d))
        scale_iv = scale_iv * to_iv(spec.q(d))
    return Cylinder(address=addr, left=left_iv, length=scale_iv)


def cylinder_length(spec: QVectorSpec, addr: CylinderAddress) -> Num:
    """Product of the digit weights; equals decode(...).length."""
    if spec.is_exact:
        scale: Num = Fraction(1)
        for d in addr.digits:
            scale = scale * spec.q(d)
        return scale
    scale_iv = to_iv(1)
    for d in addr.digits:
        scale_iv = scale_iv * to_iv(spec.q(d))
    return scale_iv


def _encode_exact(spec: QVectorSpec, x: Fraction, depth: int) -> tuple[int, ...]:
    digits = []
    cur = x
    for _ in range(depth):
        if cur == 0:
            digits.append(0)
            continue
        hi = 1
        while spec.head_sum(hi) <= cur:
            hi *= 2
        lo = hi // 2
        # invariant: head_sum(lo) <= cur < head_sum(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if spec.head_sum(mid) <= cur:
                lo = mid
            else:
                hi = mid
        k = lo
        digits.append(k)
        cur = (cur - spec.head_sum(k)) / spec.q(k)
    return tuple(digits)


def _encode_enclosed(spec: QVectorSpec, x: Fraction, depth: int, prec: int) -> tuple[int, ...]:
    def le_head(k: int, cur) -> Optional[bool]:
        # head_sum(k) <= cur, certified or None
        return rigor.decide_le(spec.head_sum(k), cur)

    digits = []
    cur: Num = x
    for pos in range(depth):
        hi = 1
        while True:
            d = le_head(hi, cur)
            if d is None:
                raise BoundaryAmbiguityError(pos + 1, (hi - 1, hi))
            if not d:
                break
            hi *= 2
        lo = hi // 2
        if hi == 1:
            k = 0
        else:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                d = le_head(mid, cur)
                if d is None:
                    raise BoundaryAmbiguityError(pos + 1, (mid - 1, mid))
                if d:
                    lo = mid
                else:
                    hi = mid
            k = lo
        digits.append(k)
        cur = (to_iv(cur) - to_iv(spec.head_sum(k))) / to_iv(spec.q(k))
    return tuple(digits)


def encode(spec: QVectorSpec, x: Fraction, depth: int, prec: int = rigor.DEFAULT_PREC) -> CylinderAddress:
    """First `depth` digits of the expansion of x.

    x must be an exact rational in [0,1).  In interval mode the digit
    comparisons are certified against enclosures; if a digit stays
    undecidable after escalating precision, a BoundaryAmbiguityError names
    the two candidates.
    """
    x = Fraction(x)
    if not (0 <= x < 1):
        raise ParameterRangeError(f"encode expects 0 <= x < 1, got {x}")
    if depth <= 0:
        raise ParameterRangeError("encode depth must be positive")
    if spec.is_exact:
        return CylinderAddress(_encode_exact(spec, x, depth))
    bits = prec
    while True:
        try:
            with workprec(bits):
                return CylinderAddress(_encode_enclosed(spec, x, depth, bits))
        except BoundaryAmbiguityError:
            if bits >= _ENCODE_PREC_CAP:
                raise
            bits = min(2 * bits, _ENCODE_PREC_CAP)


def locate_max_cylinder(
    spec: QVectorSpec, a: QRational, b: RightEndpoint
) -> tuple[CylinderAddress, int]:
    """Deepest cylinder containing [a, b), plus a's next digit below it.

    The result depends only on digit order, not on the particular weights:
    [a,b) fits in a child cylinder exactly when b does not pass the child's
    right end, and right ends are themselves finite expansions.  Returns
    (prefix, beta1) where beta1 is a's digit at the prefix's rank; the
    guarantee is that the beta1-child no longer contains [a, b).
    """
    if not qr_lt(a, b):
        raise InvalidIntervalError(f"need a < b, got a={a!r}, b={b!r}")
    prefix: list[int] = []
    pos = 0
    while True:
        d = a.digit_at(pos)
        bump = QRational.of(tuple(prefix) + (d + 1,))
        if qr_le(b, bump):
            prefix.append(d)
            pos += 1
        else:
            break
    return CylinderAddress(tuple(prefix)), a.digit_at(len(prefix))
