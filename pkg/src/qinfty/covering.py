"""Coverings of half-open intervals by finite unions of sibling cylinders.

A Block is a run of consecutive same-rank cylinders under one prefix.  The
main entry point, :func:`cover_interval`, covers a half-open interval
``[a, b)`` with finitely many blocks plus explicitly reported residual
intervals, and certifies an alpha-volume bound of the form
``K(alpha, delta) * |E|^(alpha - delta)``.

The tail partition used on the left part is a greedy tail-halving scheme:
cut the stream where the tail mass first drops below half the previous
target, so the group masses are dominated by a geometric sequence and the
alpha-power series telescopes against the head group.  The defining
inequality is re-verified numerically on every construction instead of
being trusted.

All bound checks compare an upper bound of the left-hand side against a
lower bound of the right-hand side; a check that cannot be certified at
the working precision escalates the precision ladder and finally raises
CapacityError rather than report an unverified certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Optional

from mpmath import iv

from . import rigor
from .errors import CapacityError, InvalidIntervalError, ParameterRangeError
from .expansion import (
    UNIT_END,
    CylinderAddress,
    QRational,
    RightEndpoint,
    cylinder_length,
    locate_max_cylinder,
    right_end,
)
from .qvector import QVectorSpec
from .rigor import Num, ipow, lower, to_iv, upper, workprec

_SEARCH_CAP = 2**64
_LADDER = (rigor.DEFAULT_PREC, 2 * rigor.DEFAULT_PREC, 4 * rigor.DEFAULT_PREC)

MODE_CERTIFIED_RESIDUAL = "certified_residual"
MODE_LAZY_STREAM = "lazy_stream"


@dataclass(frozen=True)
class Block:
    """Union of the consecutive cylinders prefix.i for first <= i <= last."""

    prefix: CylinderAddress
    first: int
    last: int

    def __post_init__(self):
        if self.first < 0 or self.last < self.first:
            raise ParameterRangeError(
                f"block digit range [{self.first}, {self.last}] is empty or negative"
            )

    @property
    def rank(self) -> int:
        return self.prefix.rank + 1

    def count(self) -> int:
        return self.last - self.first + 1

    def to_json(self) -> dict:
        return {"prefix": self.prefix.to_json(), "first": self.first, "last": self.last}

    @classmethod
    def from_json(cls, doc: dict) -> "Block":
        return cls(CylinderAddress.of(doc["prefix"]), int(doc["first"]), int(doc["last"]))


def block_length(spec: QVectorSpec, block: Block) -> Num:
    """Exact or enclosed length of the underlying interval."""
    return cylinder_length(spec, block.prefix) * spec.range_sum(block.first, block.last)


def block_bounds(spec: QVectorSpec, block: Block) -> tuple[Num, Num]:
    """(left endpoint, right endpoint) of the block's interval."""
    from .expansion import decode

    base = decode(spec, block.prefix)
    head_lo = spec.head_sum(block.first)
    head_hi = spec.head_sum(block.last + 1)
    if isinstance(base.left, Fraction) and isinstance(head_lo, Fraction):
        return base.left + base.length * head_lo, base.left + base.length * head_hi
    left = to_iv(base.left) + to_iv(base.length) * to_iv(head_lo)
    right = to_iv(base.left) + to_iv(base.length) * to_iv(head_hi)
    return left, right


def alpha_volume(spec: QVectorSpec, blocks, alpha: Fraction) -> Num:
    """Enclosure of sum |block|^alpha; the upper endpoint is the certified bound.

    With alpha = 1 on an exact-mode spec the result is an exact Fraction.
    """
    alpha = Fraction(alpha)
    if not 0 < alpha <= 1:
        raise ParameterRangeError("alpha must lie in (0, 1]")
    blocks = list(blocks)
    if not blocks:
        return Fraction(0) if spec.is_exact else to_iv(0)
    if alpha == 1 and spec.is_exact:
        return sum(block_length(spec, blk) for blk in blocks)
    total = to_iv(0)
    for blk in blocks:
        total = total + ipow(block_length(spec, blk), alpha)
    return total


# --- tail streams and the greedy partition ----------------------------------

@dataclass(frozen=True)
class TailStream:
    """Positive summable stream described by its rigorous tail sums.

    ``tail_fn(n)`` must return (an enclosure of) sum_{j > n} a_j for
    n >= -1, so tail_fn(-1) is the total mass.  ``range_fn(i, j)``, when
    provided, returns sum_{i <= k <= j} a_k more tightly than a difference
    of tails.
    """

    tail_fn: Callable[[int], Num]
    range_fn: Optional[Callable[[int, int], Num]] = None

    @classmethod
    def from_qvector(cls, spec: QVectorSpec, offset: int = 0) -> "TailStream":
        if offset < 0:
            raise ParameterRangeError("stream offset must be nonnegative")

        def tail(n: int) -> Num:
            return spec.tail_sum(offset + n + 1)

        def rng(i: int, j: int) -> Num:
            return spec.range_sum(offset + i, offset + j)

        return cls(tail, rng)

    def tail(self, n: int) -> Num:
        return self.tail_fn(n)

    def total(self) -> Num:
        return self.tail_fn(-1)

    def range_mass(self, i: int, j: int) -> Num:
        if j < i:
            raise ParameterRangeError("empty stream range")
        if self.range_fn is not None:
            return self.range_fn(i, j)
        return self.tail_fn(i - 1) - self.tail_fn(j)

    def head(self, n: int) -> Num:
        return self.range_mass(0, n)


class Lemma1Partition:
    """Greedy boundaries n_1 < n_2 < ... with a verified alpha-power certificate.

    Group 0 is indices [0, n_1]; group m >= 1 is (n_m, n_{m+1}].  The head
    boundary is chosen so that

        upper(tail(n_1))^alpha / (1 - 2^-alpha)  <=  (mass of group 0)^alpha

    holds with directed rounding, and later boundaries halve the tail
    target, so sum_{m>=1} (group m mass)^alpha is certified to stay below
    the head group's alpha-power.  Boundaries extend lazily on demand.
    """

    def __init__(self, stream: TailStream, alpha: Fraction, cap: int = _SEARCH_CAP):
        self.stream = stream
        self.alpha = Fraction(alpha)
        self.cap = cap
        if not 0 < self.alpha <= 1:
            raise ParameterRangeError("alpha must lie in (0, 1]")
        self._half_alpha_factor = 1 - ipow(Fraction(1, 2), self.alpha)
        n1 = self._find_head_boundary()
        self._bounds: list[int] = [n1]
        # the halving targets are anchored at a fixed rational upper bound
        self.tail_at_head: Fraction = upper(stream.tail(n1))

    # -- searches ------------------------------------------------------

    def _head_condition(self, n: int) -> bool:
        t = self.stream.tail(n)
        head = self.stream.head(n)
        if not lower(head) > 0:
            return False
        lhs = ipow(t, self.alpha) / self._half_alpha_factor
        rhs = ipow(head, self.alpha)
        return upper(lhs) <= lower(rhs)

    def _find_head_boundary(self) -> int:
        if self._head_condition(0):
            return 0
        hi = 1
        while not self._head_condition(hi):
            hi *= 2
            if hi > self.cap:
                raise CapacityError("no head boundary found below the iteration cap")
        lo = hi // 2  # condition false at lo
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._head_condition(mid):
                hi = mid
            else:
                lo = mid
        return hi

    def _find_next(self, prev: int, target: Fraction) -> int:
        if upper(self.stream.tail(prev + 1)) <= target:
            return prev + 1
        step, hi = 1, prev + 1
        while upper(self.stream.tail(hi)) > target:
            step *= 2
            hi = prev + step
            if hi > self.cap:
                raise CapacityError("no halving boundary found below the iteration cap")
        lo = max(prev + 1, hi - step // 2)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if upper(self.stream.tail(mid)) <= target:
                hi = mid
            else:
                lo = mid
        return hi

    def boundary(self, k: int) -> int:
        """n_k for k >= 1."""
        if k < 1:
            raise ParameterRangeError("boundaries are indexed from 1")
        while len(self._bounds) < k:
            m = len(self._bounds)  # computing n_{m+1}
            target = self.tail_at_head * Fraction(1, 2**m)
            self._bounds.append(self._find_next(self._bounds[-1], target))
        return self._bounds[k - 1]

    # -- groups ----------------------------------------------------------

    def group_range(self, m: int) -> tuple[int, int]:
        if m == 0:
            return (0, self.boundary(1))
        return (self.boundary(m) + 1, self.boundary(m + 1))

    def group_mass(self, m: int) -> Num:
        i, j = self.group_range(m)
        return self.stream.range_mass(i, j)

    def series_alpha_tail(self, emitted: int) -> Fraction:
        """Upper bound on sum_{m > emitted} (group m mass)^alpha."""
        geom = ipow(self.tail_at_head * Fraction(1, 2**emitted), self.alpha)
        return upper(geom / self._half_alpha_factor)

    def verify(self, groups: int = 8) -> bool:
        """Directed re-check of the defining inequality over `groups` groups."""
        acc = to_iv(0)
        for m in range(1, groups + 1):
            acc = acc + ipow(self.group_mass(m), self.alpha)
        total_up = upper(acc) + self.series_alpha_tail(groups)
        head_low = lower(ipow(self.group_mass(0), self.alpha))
        return total_up <= head_low


def lemma1_partition(stream: TailStream, alpha: Fraction, cap: int = _SEARCH_CAP) -> Lemma1Partition:
    return Lemma1Partition(stream, alpha, cap)


# --- the covering constant ----------------------------------------------------

@lru_cache(maxsize=256)
def _kappa_cached(spec: QVectorSpec, alpha: Fraction, delta: Fraction, prec: int):
    qmax = spec.max_weight()
    c = ipow(qmax, delta / 2)
    if not upper(c) < 1:
        raise CapacityError("max weight enclosure too wide to certify q^(delta/2) < 1")
    # s * c^s peaks near -1/ln c and decreases beyond it, so a scan up to
    # just past the peak sees every candidate for the supremum
    peak = -1 / iv.log(to_iv(upper(c)))
    limit = int(upper(peak)) + 2
    best = to_iv(0)
    for s in range(1, limit + 1):
        term = s * ipow(qmax, delta * s / 2)
        blo, bhi = rigor.endpoints(best)
        tlo, thi = rigor.endpoints(term)
        best = rigor.hull(max(blo, tlo), max(bhi, thi))
    w = best
    k = 1 + ipow(spec.q(0), -alpha) + 2 * w / ((1 - c) * c)
    return w, k


def kappa(spec: QVectorSpec, alpha: Fraction, delta: Fraction) -> tuple[Num, Num]:
    """Enclosures of W(delta) and K(alpha, delta); upper endpoints are the bounds.

    W(delta) = sup over integer s >= 1 of s * qmax^(delta*s/2), and
    K = 1 + q0^(-alpha) + 2 W / ((1 - qmax^(delta/2)) * qmax^(delta/2)).
    """
    alpha, delta = Fraction(alpha), Fraction(delta)
    if not 0 < delta < alpha < 1:
        raise ParameterRangeError("need 0 < delta < alpha < 1")
    return _kappa_cached(spec, alpha, delta, iv.prec)


# --- certificates --------------------------------------------------------------

@dataclass(frozen=True)
class CoverParams:
    alpha: Fraction
    delta: Fraction
    eps_res: Fraction = Fraction(1, 10**6)
    mode: str = MODE_CERTIFIED_RESIDUAL

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "delta", Fraction(self.delta))
        object.__setattr__(self, "eps_res", Fraction(self.eps_res))
        if not 0 < self.delta < self.alpha < 1:
            raise ParameterRangeError("need 0 < delta < alpha < 1")
        if self.eps_res <= 0:
            raise ParameterRangeError("residual budget must be positive")
        if self.mode not in (MODE_CERTIFIED_RESIDUAL, MODE_LAZY_STREAM):
            raise ParameterRangeError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class CoverCertificate:
    """Finite covering with a certified alpha-volume bound.

    ``alpha_volume_upper`` is a rational upper bound on
    sum |block|^alpha + sum |residual|^alpha and ``bound_rhs`` is a rational
    lower bound on K(alpha, delta) * |E|^(alpha - delta), so the recorded
    inequality alpha_volume_upper <= bound_rhs is certified as stated.

    ``residuals`` are outer rational bounds of the uncovered-by-blocks
    leftovers (empty in lazy mode, where ``stream`` yields blocks forever
    and alpha_volume_upper accounts for the whole infinite covering).
    ``rank_heads`` records, per partitioned tail, the rank offset and the
    head block of its partition, before any merging.
    """

    input_interval: tuple[QRational, RightEndpoint]
    params: CoverParams
    blocks: tuple[Block, ...]
    residuals: tuple[tuple[Fraction, Fraction], ...]
    alpha_volume_upper: Fraction
    bound_rhs: Fraction
    kappa_upper: Fraction
    interval_length: tuple[Fraction, Fraction]
    right_part_volume_upper: Optional[Fraction] = None
    j1_length_upper: Optional[Fraction] = None
    rank_heads: tuple[tuple[int, Block], ...] = ()
    stream: Optional[Iterator[Block]] = field(default=None, compare=False)

    def residual_total_upper(self) -> Fraction:
        return sum((hi - lo for lo, hi in self.residuals), Fraction(0))

    def to_json(self) -> dict:
        a, b = self.input_interval
        return {
            "interval": {
                "a": a.to_json(),
                "b": "end" if b is UNIT_END else b.to_json(),
            },
            "params": {
                "alpha": rigor.frac_str(self.params.alpha),
                "delta": rigor.frac_str(self.params.delta),
                "eps_res": rigor.frac_str(self.params.eps_res),
                "mode": self.params.mode,
            },
            "blocks": [blk.to_json() for blk in self.blocks],
            "residuals": [
                {"lo": rigor.frac_str(lo), "hi": rigor.frac_str(hi)}
                for lo, hi in self.residuals
            ],
            "alpha_volume_upper": rigor.frac_str(self.alpha_volume_upper),
            "alpha_volume_upper_approx": float(self.alpha_volume_upper),
            "bound_rhs": rigor.frac_str(self.bound_rhs),
            "bound_rhs_approx": float(self.bound_rhs),
            "kappa_upper_approx": float(self.kappa_upper),
            "interval_length": [rigor.frac_str(x) for x in self.interval_length],
        }


class _RetryPrecision(Exception):
    pass


def _point_value(spec: QVectorSpec, x: RightEndpoint) -> Num:
    if x is UNIT_END:
        return Fraction(1)
    return x.value(spec)


def _left_point(addr: CylinderAddress) -> QRational:
    return QRational.of(addr.digits)


@dataclass
class _TailJob:
    rank_offset: int  # k in the construction; 0 marks the right-part tail
    prefix: CylinderAddress
    start_digit: int


def _tail_bounds(spec: QVectorSpec, job: _TailJob, from_digit: int) -> tuple[Fraction, Fraction]:
    """Outer rational bounds of [left(prefix.from_digit), right(prefix))."""
    left_val = _left_point(job.prefix.child(from_digit)).value(spec)
    right_val = _point_value(spec, right_end(job.prefix))
    return lower(left_val), upper(right_val)


def _emit_tail_blocks(
    spec: QVectorSpec,
    job: _TailJob,
    part: Lemma1Partition,
    budget: Fraction,
) -> tuple[list[Block], Optional[tuple[Fraction, Fraction]]]:
    """Blocks for one partitioned tail until the leftover fits the budget."""
    blocks: list[Block] = []
    m = 0
    while True:
        if m == 0:
            next_start = job.start_digit
        else:
            next_start = job.start_digit + part.boundary(m) + 1
        res_lo, res_hi = _tail_bounds(spec, job, next_start)
        if res_hi - res_lo <= budget:
            if res_hi > res_lo:
                return blocks, (res_lo, res_hi)
            return blocks, None
        i, j = part.group_range(m)
        blocks.append(Block(job.prefix, job.start_digit + i, job.start_digit + j))
        m += 1


def _merge_adjacent(blocks: list[Block]) -> list[Block]:
    """Merge geometrically ordered neighbors with one prefix into one block."""
    merged: list[Block] = []
    for blk in blocks:
        if merged and merged[-1].prefix == blk.prefix and merged[-1].last + 1 == blk.first:
            merged[-1] = Block(blk.prefix, merged[-1].first, blk.last)
        else:
            merged.append(blk)
    return merged


def _cover_once(
    spec: QVectorSpec, a: QRational, b: RightEndpoint, params: CoverParams
) -> CoverCertificate:
    prefix, beta1 = locate_max_cylinder(spec, a, b)
    n = prefix.rank

    e_val = _point_value(spec, b) - _point_value(spec, a)
    _, k_enc = kappa(spec, params.alpha, params.delta)
    rhs = k_enc * ipow(e_val, params.alpha - params.delta)

    # E equal to one cylinder collapses to a single block of its parent
    if n >= 1 and _left_point(prefix) == a and right_end(prefix) == b:
        blk = Block(CylinderAddress(prefix.digits[:-1]), prefix.digits[-1], prefix.digits[-1])
        vol = alpha_volume(spec, [blk], params.alpha)
        return _finish(a, b, params, [blk], [], [], vol, rhs, k_enc, e_val, None)

    beta = a.digits[n:] if len(a.digits) > n else (0,)
    ell = len(beta)

    right_blocks: list[Block] = []
    jobs: list[_TailJob] = []
    j1_block: Optional[Block] = None

    if right_end(prefix) == b:
        # b closes the located cylinder, so the right part is a full tail
        jobs.append(_TailJob(0, prefix, beta1 + 1))
    else:
        assert isinstance(b, QRational)
        e_digit = b.digit_at(n)
        below = b.digits[n + 1 :]
        if not below:
            # b is the left endpoint of prefix.e_digit
            if e_digit - 1 >= beta1 + 1:
                right_blocks.append(Block(prefix, beta1 + 1, e_digit - 1))
        else:
            if e_digit - 1 >= beta1 + 1:
                right_blocks.append(Block(prefix, beta1 + 1, e_digit - 1))
            zeros = 0
            while below[zeros] == 0:
                zeros += 1
            addr = prefix.digits + (e_digit,) + (0,) * zeros
            j1_block = Block(CylinderAddress(addr[:-1]), addr[-1], addr[-1])
            right_blocks.append(j1_block)

    left_blocks: list[Block] = []
    if ell == 1:
        left_blocks.append(Block(prefix, beta1, beta1))
    else:
        for k in range(2, ell + 1):
            sub = CylinderAddress(prefix.digits + beta[: k - 1])
            start = beta[k - 1] if k == ell else beta[k - 1] + 1
            jobs.append(_TailJob(k, sub, start))

    lazy = params.mode == MODE_LAZY_STREAM
    budget = params.eps_res / ell
    partitions: list[tuple[_TailJob, Lemma1Partition]] = []
    for job in jobs:
        stream = TailStream.from_qvector(spec, job.start_digit)
        partitions.append((job, lemma1_partition(stream, params.alpha)))

    residuals: list[tuple[Fraction, Fraction]] = []
    rank_heads: list[tuple[int, Block]] = []
    tail_blocks_per_job: list[list[Block]] = []
    vol = to_iv(0)
    right_vol = to_iv(0)
    for blk in right_blocks:
        right_vol = right_vol + ipow(block_length(spec, blk), params.alpha)

    for job, part in partitions:
        i0, j0 = part.group_range(0)
        head_block = Block(job.prefix, job.start_digit + i0, job.start_digit + j0)
        rank_heads.append((job.rank_offset, head_block))
        if lazy:
            # whole-partition bound: head alpha-power plus the certified series
            head_pow = ipow(block_length(spec, head_block), params.alpha)
            series_bound = ipow(cylinder_length(spec, job.prefix), params.alpha) * to_iv(
                part.series_alpha_tail(0)
            )
            vol = vol + head_pow + series_bound
            tail_blocks_per_job.append([])
            if job.rank_offset == 0:
                right_vol = right_vol + head_pow + series_bound
        else:
            emitted, residual = _emit_tail_blocks(spec, job, part, budget)
            tail_blocks_per_job.append(emitted)
            if residual is not None:
                residuals.append(residual)
            if job.rank_offset == 0:
                for blk in emitted:
                    right_vol = right_vol + ipow(block_length(spec, blk), params.alpha)
                if residual is not None:
                    right_vol = right_vol + ipow(residual[1] - residual[0], params.alpha)

    # geometric order: deepest left tail first, then up the ranks, then right
    ordered: list[Block] = []
    left_jobs = [(job, blks) for (job, _), blks in zip(partitions, tail_blocks_per_job) if job.rank_offset != 0]
    for job, blks in sorted(left_jobs, key=lambda t: -t[0].rank_offset):
        ordered.extend(blks)
    ordered.extend(left_blocks)
    ordered.extend(right_blocks)
    for (job, part), blks in zip(partitions, tail_blocks_per_job):
        if job.rank_offset == 0:
            ordered.extend(blks)
    finite_blocks = _merge_adjacent(ordered)

    vol = vol + alpha_volume(spec, finite_blocks, params.alpha)
    for res_lo, res_hi in residuals:
        vol = vol + ipow(res_hi - res_lo, params.alpha)

    stream_iter = None
    if lazy:
        stream_iter = _lazy_blocks(finite_blocks, partitions)

    return _finish(
        a,
        b,
        params,
        finite_blocks,
        residuals,
        rank_heads,
        vol,
        rhs,
        k_enc,
        e_val,
        stream_iter,
        right_part_volume_upper=upper(right_vol),
        j1_length_upper=None if j1_block is None else upper(block_length(spec, j1_block)),
    )


def _lazy_blocks(prelude: list[Block], partitions) -> Iterator[Block]:
    for blk in prelude:
        yield blk
    live = [(job, part, 0) for job, part in partitions]
    while live:
        nxt = []
        for job, part, m in live:
            i, j = part.group_range(m)
            yield Block(job.prefix, job.start_digit + i, job.start_digit + j)
            nxt.append((job, part, m + 1))
        live = nxt


def _finish(
    a,
    b,
    params,
    blocks,
    residuals,
    rank_heads,
    vol,
    rhs,
    k_enc,
    e_val,
    stream_iter,
    right_part_volume_upper=None,
    j1_length_upper=None,
) -> CoverCertificate:
    vol_up = upper(vol)
    rhs_low = lower(rhs)
    if vol_up > rhs_low:
        raise _RetryPrecision
    return CoverCertificate(
        input_interval=(a, b),
        params=params,
        blocks=tuple(blocks),
        residuals=tuple(residuals),
        alpha_volume_upper=vol_up,
        bound_rhs=rhs_low,
        kappa_upper=upper(k_enc),
        interval_length=(lower(e_val), upper(e_val)),
        right_part_volume_upper=right_part_volume_upper,
        j1_length_upper=j1_length_upper,
        rank_heads=tuple(rank_heads),
        stream=stream_iter,
    )


def cover_interval(
    spec: QVectorSpec,
    a: QRational,
    b: RightEndpoint,
    params: CoverParams,
    prec: int = rigor.DEFAULT_PREC,
) -> CoverCertificate:
    """Cover [a, b) by blocks (plus residuals) with a certified volume bound.

    The construction follows the located maximal cylinder: the part of E
    right of the first full sibling is covered by at most one run of
    siblings and one deeper cylinder (or a partitioned tail when b closes
    the located cylinder), and the left part peels one rank per nonzero
    digit of a, partitioning each rank's tail greedily.
    """
    if not isinstance(a, QRational):
        raise InvalidIntervalError("left endpoint must be a digit-string rational")
    if b is not UNIT_END and not isinstance(b, QRational):
        raise InvalidIntervalError("right endpoint must be a digit-string rational or the unit end")
    ladder = [max(prec, rigor.DEFAULT_PREC)]
    ladder += [2 * ladder[0], 4 * ladder[0]]
    for attempt in ladder:
        with workprec(attempt):
            try:
                return _cover_once(spec, a, b, params)
            except _RetryPrecision:
                continue
    raise CapacityError("could not certify the covering volume bound on the precision ladder")
