from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from qinfty.covering import (
    Block,
    CoverParams,
    TailStream,
    alpha_volume,
    block_bounds,
    block_length,
    cover_interval,
    kappa,
    lemma1_partition,
)
from qinfty.errors import ParameterRangeError
from qinfty.expansion import UNIT_END, CylinderAddress, QRational, right_end
from qinfty.qvector import QVectorSpec
from qinfty.rigor import ipow, lower, to_iv, upper, workprec


LUR = QVectorSpec.luroth()
GEO = QVectorSpec.geometric(Fraction(1, 2))
PL2 = QVectorSpec.powerlaw(2)

HALF_PARAMS = CoverParams(Fraction(1, 2), Fraction(1, 5), Fraction(1, 10**6))


def _blocks_as_tuples(cert):
    return [(blk.prefix.digits, blk.first, blk.last) for blk in cert.blocks]


def _coverage_exact(spec, cert, a, b) -> bool:
    """Chain check: sorted pieces must run from a to b with no gap."""
    pieces = [block_bounds(spec, blk) for blk in cert.blocks]
    pieces += [(lo, hi) for lo, hi in cert.residuals]
    pieces.sort()
    cur = a.value(spec)
    target = Fraction(1) if b is UNIT_END else b.value(spec)
    for left, right in pieces:
        if left > cur:
            return False
        cur = max(cur, right)
    return cur >= target


# --- Block and alpha_volume ---------------------------------------------------

def test_block_validation():
    with pytest.raises(ParameterRangeError):
        Block(CylinderAddress(()), 3, 2)
    with pytest.raises(ParameterRangeError):
        Block(CylinderAddress(()), -1, 2)


def test_block_length_luroth():
    blk = Block(CylinderAddress((0,)), 2, 4)
    # (1/2) * (q2 + q3 + q4) = (1/2) * (1/12 + 1/20 + 1/30)
    assert block_length(LUR, blk) == Fraction(1, 12)


def test_alpha_volume_length_at_one():
    blk = Block(CylinderAddress(()), 0, 0)
    assert alpha_volume(LUR, [blk], Fraction(1)) == Fraction(1, 2)


def test_alpha_volume_empty():
    assert alpha_volume(LUR, [], Fraction(1, 2)) == 0


def test_alpha_volume_sqrt_oracle():
    blk = Block(CylinderAddress(()), 0, 1)
    with workprec(96):
        vol = alpha_volume(LUR, [blk], Fraction(1, 2))
        oracle = Fraction("0.81649658092772603273242802490196")  # sqrt(2/3)
        assert upper(vol) >= oracle - Fraction(1, 10**25)
        assert upper(vol) - oracle < Fraction(1, 10**10)


# --- tail streams and the greedy partition --------------------------------------

def test_tail_stream_from_qvector():
    st = TailStream.from_qvector(LUR, 2)
    assert st.total() == LUR.tail_sum(2)
    assert st.tail(0) == LUR.tail_sum(3)
    assert st.range_mass(0, 4) == LUR.range_sum(2, 6)
    assert st.head(3) == LUR.range_sum(2, 5)


def test_lemma1_pinned_dyadic():
    # dyadic weights a_i = 2^-(i+1) at alpha = 1/2 pin the head boundary at 3
    part = lemma1_partition(TailStream.from_qvector(GEO, 0), Fraction(1, 2))
    assert part.boundary(1) == 3
    assert part.verify(10)


def test_lemma1_pinned_dyadic_oracle_inequality():
    # direct evaluation of the defining inequality for n in {1, 2, 3}
    with workprec(96):
        for n, expected in ((1, False), (2, False), (3, True)):
            head = sum(Fraction(1, 2 ** (i + 1)) for i in range(n + 1))
            tail = 1 - head
            lhs = ipow(tail, Fraction(1, 2)) / (1 - ipow(Fraction(1, 2), Fraction(1, 2)))
            rhs = ipow(head, Fraction(1, 2))
            assert (upper(lhs) <= lower(rhs)) is expected


def test_lemma1_head_dominant_stream():
    spec = QVectorSpec.geometric(Fraction(999999, 1000000))
    part = lemma1_partition(TailStream.from_qvector(spec, 0), Fraction(1, 2))
    assert part.boundary(1) == 0


def test_lemma1_luroth_offsets_certificates():
    for offset in (0, 10, 100):
        for alpha in (Fraction(1, 5), Fraction(1, 2), Fraction(4, 5)):
            part = lemma1_partition(TailStream.from_qvector(LUR, offset), alpha)
            assert part.verify(8), (offset, alpha)


def test_lemma1_boundaries_strictly_increase():
    part = lemma1_partition(TailStream.from_qvector(LUR, 0), Fraction(3, 10))
    bounds = [part.boundary(k) for k in range(1, 12)]
    assert all(b2 > b1 for b1, b2 in zip(bounds, bounds[1:]))


def test_lemma1_group_masses_halve():
    part = lemma1_partition(TailStream.from_qvector(LUR, 0), Fraction(1, 2))
    target = part.tail_at_head
    for m in range(1, 10):
        assert upper(part.group_mass(m)) <= target / 2 ** (m - 1)


# --- kappa ------------------------------------------------------------------------

def test_kappa_brute_force_oracle():
    w_star = Fraction("5.305007982786393288215409")  # max at s = 14
    k_star = Fraction("172.2222102154935772979958")
    with workprec(96):
        w, k = kappa(GEO, Fraction(1, 2), Fraction(1, 5))
        assert abs(upper(w) - w_star) < Fraction(1, 10**20)
        assert abs(upper(k) - k_star) < Fraction(1, 10**18)


def test_kappa_same_for_equal_max_weight():
    with workprec(96):
        w1, k1 = kappa(GEO, Fraction(1, 2), Fraction(1, 5))
        w2, k2 = kappa(LUR, Fraction(1, 2), Fraction(1, 5))
        assert upper(w1) == upper(w2)
        assert upper(k1) == upper(k2)


def test_kappa_finite_near_alpha():
    with workprec(96):
        _, k = kappa(GEO, Fraction(1, 2), Fraction(49, 100))
        assert upper(k) < 10**6


def test_kappa_rejects_bad_parameters():
    with pytest.raises(ParameterRangeError):
        kappa(GEO, Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(ParameterRangeError):
        kappa(GEO, Fraction(1, 2), Fraction(0))


# --- cover_interval: pinned examples ----------------------------------------------

def test_cover_rank2_endpoints_single_block():
    cert = cover_interval(LUR, QRational.of((0, 2)), QRational.of((0, 5)), HALF_PARAMS)
    assert _blocks_as_tuples(cert) == [((0,), 2, 4)]
    assert cert.residuals == ()
    # alpha-volume is exactly sqrt((1/2)(q2+q3+q4)) = sqrt(1/12)
    with workprec(96):
        oracle = ipow(Fraction(1, 12), Fraction(1, 2))
        assert cert.alpha_volume_upper >= lower(oracle)
        assert cert.alpha_volume_upper - upper(oracle) <= 0
    assert cert.alpha_volume_upper <= cert.bound_rhs


def test_cover_single_cylinder_all_families():
    custom = QVectorSpec.custom([Fraction(1, 6), Fraction(1, 3), Fraction(1, 2)])
    for spec in (LUR, GEO, PL2, custom):
        cert = cover_interval(
            spec, QRational.zero(), right_end(CylinderAddress((0,))), HALF_PARAMS
        )
        assert _blocks_as_tuples(cert) == [((), 0, 0)]
        assert cert.residuals == ()


def test_cover_geometric_mixed_interval():
    a, b = QRational.of((1, 1, 1)), QRational.of((1, 3))
    cert = cover_interval(GEO, a, b, HALF_PARAMS)
    shapes = _blocks_as_tuples(cert)
    assert ((1,), 2, 2) in shapes
    assert any(blk.prefix.digits == (1, 1) for blk in cert.blocks)
    assert cert.residual_total_upper() < Fraction(1, 10**6)
    assert cert.alpha_volume_upper <= cert.bound_rhs
    assert _coverage_exact(GEO, cert, a, b)
    # the rank-2 tail partition's head block is recorded before merging
    assert any(k == 2 for k, _ in cert.rank_heads)


def test_cover_interior_b_emits_deep_cylinder():
    a, b = QRational.of((0, 2)), QRational.of((0, 3, 0, 0, 5))
    cert = cover_interval(LUR, a, b, HALF_PARAMS)
    shapes = _blocks_as_tuples(cert)
    assert ((0, 3, 0), 0, 0) in shapes  # the deep cylinder past b's zeros
    assert cert.j1_length_upper is not None
    # |J1| <= |E| / q0
    e_hi = cert.interval_length[1]
    assert cert.j1_length_upper <= e_hi / LUR.q(0)
    assert _coverage_exact(LUR, cert, a, b)


def test_cover_until_cylinder_right_end():
    a, b = QRational.of((0, 2)), QRational.of((1,))
    cert = cover_interval(LUR, a, b, HALF_PARAMS)
    assert _coverage_exact(LUR, cert, a, b)
    assert cert.residual_total_upper() <= Fraction(1, 10**6)
    assert cert.blocks[0].prefix.digits == (0,)
    assert cert.blocks[0].first == 2


def test_cover_rejects_reversed_interval():
    from qinfty.errors import InvalidIntervalError

    with pytest.raises(InvalidIntervalError):
        cover_interval(LUR, QRational.of((2,)), QRational.of((1,)), HALF_PARAMS)


def test_cover_params_validation():
    with pytest.raises(ParameterRangeError):
        CoverParams(Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(ParameterRangeError):
        CoverParams(Fraction(1, 2), Fraction(1, 5), Fraction(0))
    with pytest.raises(ParameterRangeError):
        CoverParams(Fraction(1, 2), Fraction(1, 5), mode="eager")


# --- randomized invariants ----------------------------------------------------------

def _random_qr(rng, max_rank=5, max_digit=6):
    k = rng.randint(0, max_rank)
    return QRational.of(tuple(rng.randint(0, max_digit) for _ in range(k)))


def test_cover_random_suite_exact_families():
    rng = random.Random(987)
    checked = 0
    while checked < 60:
        spec = LUR if rng.random() < 0.5 else GEO
        a, b = _random_qr(rng), _random_qr(rng)
        if rng.random() < 0.1:
            b = UNIT_END
        if b is not UNIT_END and not a < b:
            continue
        checked += 1
        cert = cover_interval(spec, a, b, HALF_PARAMS)
        assert _coverage_exact(spec, cert, a, b)
        assert cert.alpha_volume_upper <= cert.bound_rhs
        assert cert.residual_total_upper() <= HALF_PARAMS.eps_res
        with workprec(96):
            e_hi = cert.interval_length[1]
            rp_bound = (1 + ipow(spec.q(0), -HALF_PARAMS.alpha)) * ipow(
                e_hi, HALF_PARAMS.alpha
            )
            if cert.right_part_volume_upper is not None:
                assert cert.right_part_volume_upper <= upper(rp_bound)
            if cert.j1_length_upper is not None:
                assert cert.j1_length_upper <= upper(to_iv(e_hi) / to_iv(spec.q(0)))
            qmax = spec.max_weight()
            for k_off, head in cert.rank_heads:
                if k_off == 0:
                    continue
                lhs = upper(ipow(block_length(spec, head), HALF_PARAMS.alpha))
                rhs = lower(
                    ipow(e_hi, HALF_PARAMS.alpha - HALF_PARAMS.delta)
                    * ipow(qmax, (k_off - 1) * HALF_PARAMS.delta)
                )
                assert lhs <= rhs


def test_cover_blocks_are_consecutive_siblings():
    rng = random.Random(31)
    for _ in range(20):
        a, b = _random_qr(rng), _random_qr(rng)
        if not a < b:
            continue
        cert = cover_interval(LUR, a, b, HALF_PARAMS)
        for blk in cert.blocks:
            assert 0 <= blk.first <= blk.last


def test_cover_powerlaw_interval_mode():
    a, b = QRational.of((1, 2)), QRational.of((2, 1))
    cert = cover_interval(PL2, a, b, HALF_PARAMS)
    assert cert.alpha_volume_upper <= cert.bound_rhs
    assert cert.residual_total_upper() <= HALF_PARAMS.eps_res
    # outer coverage check with rational endpoint bounds
    pieces = []
    with workprec(96):
        for blk in cert.blocks:
            blo, bhi = block_bounds(PL2, blk)
            pieces.append((upper(blo), lower(bhi)))
        pieces += list(cert.residuals)
        pieces.sort()
        cur = upper(a.value(PL2))
        target = lower(b.value(PL2))
    for left, right in pieces:
        if left > cur:
            break
        cur = max(cur, right)
    assert cur >= target


def test_cover_lazy_stream_mode():
    params = CoverParams(Fraction(1, 2), Fraction(1, 5), mode="lazy_stream")
    cert = cover_interval(LUR, QRational.zero(), UNIT_END, params)
    assert cert.residuals == ()
    blocks = list(itertools.islice(cert.stream, 40))
    assert blocks[0] == Block(CylinderAddress(()), 0, 0)
    pieces = sorted(block_bounds(LUR, blk) for blk in blocks)
    cur = Fraction(0)
    for left, right in pieces:
        if left <= cur:
            cur = max(cur, right)
    assert cur > Fraction(99, 100)
    assert cert.alpha_volume_upper <= cert.bound_rhs


def test_cover_certificate_json_roundtrip_shape():
    cert = cover_interval(LUR, QRational.of((0, 2)), QRational.of((0, 5)), HALF_PARAMS)
    doc = cert.to_json()
    assert doc["blocks"] == [{"prefix": [0], "first": 2, "last": 4}]
    assert doc["residuals"] == []
    assert doc["params"]["mode"] == "certified_residual"
    assert Block.from_json(doc["blocks"][0]) == cert.blocks[0]


def test_cover_deterministic():
    a, b = QRational.of((1, 1, 1)), QRational.of((1, 3))
    c1 = cover_interval(GEO, a, b, HALF_PARAMS)
    c2 = cover_interval(GEO, a, b, HALF_PARAMS)
    assert c1.blocks == c2.blocks
    assert c1.alpha_volume_upper == c2.alpha_volume_upper
