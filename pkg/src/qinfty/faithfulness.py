"""Region checks for the tail inequality (sum q_i)^(alpha-delta) >= sum q_i^alpha.

The check scans digit windows [n, n+M] with n in (N, n_max] and
M in (N, M_max], plus the M -> infinity cell via tail brackets.  Outcomes
are deliberately three-valued: a certified counterexample is decisive, a
certified hold only covers the scanned region, and anything the enclosures
cannot separate at the top of the precision ladder stays inconclusive.

A window with a divergent power tail is never an error: partial sums of
the right side certifiably overtake the bounded left side, which is a
violation witness in the limit cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from . import rigor
from .errors import CapacityError, ParameterRangeError
from .qvector import QVectorSpec
from .rigor import Num, ipow, lower, to_iv, upper, workprec

HOLDS = "holds_on_region"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"

_LADDER = (64, 96, 192)
_DIVERGENT_DOUBLING_CAP = 2**40


@dataclass(frozen=True)
class ConditionQuery:
    alpha: Fraction
    delta: Fraction
    N: int
    n_max: int
    M_max: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "delta", Fraction(self.delta))
        if not 0 < self.delta < self.alpha < 1:
            raise ParameterRangeError("need 0 < delta < alpha < 1")
        if self.N < 0:
            raise ParameterRangeError("threshold N must be nonnegative")
        if self.n_max < self.N or self.M_max < self.N:
            raise ParameterRangeError("search bounds must be at least N")


@dataclass(frozen=True)
class ConditionVerdict:
    """Outcome of a region check.

    For HOLDS, ``margins`` lists one conservative lower bound per scanned n:
    the least certified gap lower(LHS) - upper(RHS) over that row's cells.
    For VIOLATED, ``witness`` is (n, M) with M = None meaning the limit
    cell, and lhs_upper < rhs_lower is the certified strict comparison.
    """

    outcome: str
    margins: tuple[tuple[int, Fraction], ...] = ()
    witness: Optional[tuple[int, Optional[int]]] = None
    lhs_upper: Optional[Fraction] = None
    rhs_lower: Optional[Fraction] = None
    reason: Optional[str] = None
    precision_bits: int = 0
    reverified_bits: Optional[int] = None

    def min_margin(self) -> Optional[Fraction]:
        if not self.margins:
            return None
        return min(m for _, m in self.margins)

    def to_json(self) -> dict:
        doc: dict = {"outcome": self.outcome, "precision_bits": self.precision_bits}
        if self.outcome == HOLDS:
            doc["margins"] = [
                {"n": n, "margin_lower": rigor.frac_str(m), "margin_approx": float(m)}
                for n, m in self.margins
            ]
            mm = self.min_margin()
            doc["min_margin"] = None if mm is None else float(mm)
        elif self.outcome == VIOLATED:
            n, m = self.witness
            doc["witness"] = {"n": n, "M": "inf" if m is None else m}
            doc["lhs_upper"] = rigor.frac_str(self.lhs_upper)
            doc["rhs_lower"] = rigor.frac_str(self.rhs_lower)
            doc["lhs_approx"] = float(self.lhs_upper)
            doc["rhs_approx"] = float(self.rhs_lower)
            doc["reverified_bits"] = self.reverified_bits
        else:
            doc["reason"] = self.reason
        return doc


@dataclass(frozen=True)
class _Violation(Exception):
    n: int
    M: Optional[int]
    lhs_upper: Fraction
    rhs_lower: Fraction


def _lhs(spec: QVectorSpec, n: int, M: Optional[int], expo: Fraction) -> Num:
    mass = spec.tail_sum(n) if M is None else spec.range_sum(n, n + M)
    return ipow(mass, expo)


def _rhs(spec: QVectorSpec, n: int, M: Optional[int], alpha: Fraction) -> Num:
    if M is None:
        return spec.power_sum(alpha, n)
    return spec.power_sum(alpha, n, n + M)


def _certify_divergent_limit(
    spec: QVectorSpec, n: int, alpha: Fraction, lhs_up: Fraction, start: int
) -> Fraction:
    """Partial right sums overtake a bounded left side; return the witness sum."""
    m = max(start, 1)
    while m <= _DIVERGENT_DOUBLING_CAP:
        partial = spec.power_sum(alpha, n, n + m)
        if lower(partial) > lhs_up:
            return lower(partial)
        m *= 2
    raise CapacityError("divergent power tail failed to overtake the left side")


def _check_row(spec: QVectorSpec, query: ConditionQuery, n: int) -> Optional[Fraction]:
    """Certified min margin for row n, None if some cell stays undecided.

    Raises _Violation on the first certified counterexample cell, scanning
    M upward and ending with the limit cell.
    """
    alpha, expo = query.alpha, query.alpha - query.delta
    m_min = query.N + 1
    converges = spec.power_tail_converges(alpha)

    if converges:
        lhs_min = _lhs(spec, n, m_min, expo)
        rhs_inf = _rhs(spec, n, None, alpha)
        fast_margin = lower(lhs_min) - upper(rhs_inf)
        if fast_margin >= 0:
            return fast_margin

    margin: Optional[Fraction] = None
    undecided = False
    mass = spec.range_sum(n, n + m_min)
    rhs = spec.power_sum(alpha, n, n + m_min)
    mass = mass if isinstance(mass, Fraction) else to_iv(mass)
    rhs = to_iv(rhs)
    for M in range(m_min, query.M_max + 1):
        if M > m_min:
            q = spec.q(n + M)
            mass = mass + q
            rhs = rhs + ipow(q, alpha)
        lhs = ipow(mass, expo)
        if upper(lhs) < lower(rhs):
            raise _Violation(n, M, upper(lhs), lower(rhs))
        cell = lower(lhs) - upper(rhs)
        if cell < 0:
            undecided = True
        elif margin is None or cell < margin:
            margin = cell

    lhs_inf = _lhs(spec, n, None, expo)
    if converges:
        rhs_inf = _rhs(spec, n, None, alpha)
        if upper(lhs_inf) < lower(rhs_inf):
            raise _Violation(n, None, upper(lhs_inf), lower(rhs_inf))
        cell = lower(lhs_inf) - upper(rhs_inf)
        if cell < 0:
            undecided = True
        elif margin is None or cell < margin:
            margin = cell
    else:
        partial = _certify_divergent_limit(spec, n, alpha, upper(lhs_inf), query.M_max)
        raise _Violation(n, None, upper(lhs_inf), partial)

    if undecided:
        return None
    return margin


def _reverify(spec: QVectorSpec, query: ConditionQuery, vio: _Violation, bits: int) -> bool:
    with workprec(bits):
        expo = query.alpha - query.delta
        lhs = _lhs(spec, vio.n, vio.M, expo)
        if vio.M is None and not spec.power_tail_converges(query.alpha):
            try:
                _certify_divergent_limit(spec, vio.n, query.alpha, upper(lhs), query.M_max)
                return True
            except CapacityError:
                return False
        rhs = _rhs(spec, vio.n, vio.M, query.alpha)
        return upper(lhs) < lower(rhs)


def check_condition(
    spec: QVectorSpec, query: ConditionQuery, ladder: Iterable[int] = _LADDER
) -> ConditionVerdict:
    """Scan the query region and return the first certified outcome.

    Violations re-verify at doubled working precision before being
    reported.  When some cell stays unseparated at the top of the ladder
    the verdict is inconclusive rather than a guess.
    """
    last_reason = "empty precision ladder"
    for bits in ladder:
        with workprec(bits):
            margins: list[tuple[int, Fraction]] = []
            complete = True
            try:
                for n in range(query.N + 1, query.n_max + 1):
                    row = _check_row(spec, query, n)
                    if row is None:
                        complete = False
                        break
                    margins.append((n, row))
            except _Violation as vio:
                if _reverify(spec, query, vio, 2 * bits):
                    return ConditionVerdict(
                        outcome=VIOLATED,
                        witness=(vio.n, vio.M),
                        lhs_upper=vio.lhs_upper,
                        rhs_lower=vio.rhs_lower,
                        precision_bits=bits,
                        reverified_bits=2 * bits,
                    )
                last_reason = (
                    f"violation candidate at {(vio.n, vio.M)} failed re-verification"
                )
                continue
        if complete:
            return ConditionVerdict(
                outcome=HOLDS, margins=tuple(margins), precision_bits=bits
            )
        last_reason = f"cells unseparated at {bits} bits"
    return ConditionVerdict(outcome=INCONCLUSIVE, reason=last_reason, precision_bits=0)


@dataclass(frozen=True)
class MarginRow:
    n: int
    M: Optional[int]
    lhs_lower: Fraction
    rhs_upper: Fraction

    @property
    def margin(self) -> Fraction:
        return self.lhs_lower - self.rhs_upper

    def csv_row(self) -> list:
        return [
            self.n,
            "inf" if self.M is None else self.M,
            rigor.frac_str(self.lhs_lower),
            rigor.frac_str(self.rhs_upper),
            float(self.margin),
        ]


CSV_HEADER = ["n", "M", "lhs_lower", "rhs_upper", "margin"]


def scan_condition_region(
    spec: QVectorSpec,
    alpha: Fraction,
    delta: Fraction,
    n_grid: Iterable[int],
    m_grid: Iterable[Optional[int]],
    prec: int = rigor.DEFAULT_PREC,
) -> list[MarginRow]:
    """Margin table over a grid; positive margins certify holds cell-wise.

    An M entry of None asks for the limit cell.  Rows keep grid order.
    Within each n the lower/upper bounds are checked to be nondecreasing
    in M, which they must be for sums of positive terms.

    A limit cell over a divergent power tail has no finite right bound;
    its row stores a certified partial-sum lower bound in the rhs column
    instead, so the margin there over-reports a deficit that is truly
    unbounded.  Such margins are always negative.
    """
    alpha, delta = Fraction(alpha), Fraction(delta)
    if not 0 < delta < alpha < 1:
        raise ParameterRangeError("need 0 < delta < alpha < 1")
    n_grid = list(n_grid)
    m_grid = list(m_grid)
    if not n_grid or not m_grid:
        raise ParameterRangeError("grids must be nonempty")
    expo = alpha - delta
    rows: list[MarginRow] = []
    finite = [m for m in m_grid if m is not None]
    with workprec(prec):
        for n in n_grid:
            row_cells: list[MarginRow] = []
            for M in m_grid:
                if M is None and not spec.power_tail_converges(alpha):
                    lhs_inf = _lhs(spec, n, None, expo)
                    partial = _certify_divergent_limit(
                        spec, n, alpha, upper(lhs_inf), max(finite, default=1)
                    )
                    row_cells.append(MarginRow(n, None, lower(lhs_inf), partial))
                    continue
                lhs_l = lower(_lhs(spec, n, M, expo))
                rhs_u = upper(_rhs(spec, n, M, alpha))
                row_cells.append(MarginRow(n, M, lhs_l, rhs_u))
            by_m = sorted((c for c in row_cells if c.M is not None), key=lambda c: c.M)
            for prev, cur in zip(by_m, by_m[1:]):
                assert cur.lhs_lower >= prev.lhs_lower and cur.rhs_upper >= prev.rhs_upper
            rows.extend(row_cells)
    return rows
