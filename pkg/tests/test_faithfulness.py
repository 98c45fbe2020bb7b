"""Region checks for the tail inequality: verdicts, witnesses, margin scans.

Expected values were derived with independent high-precision summation
using exact rational bases (see the closed forms inline).  Margins
reported by the checker are conservative, so tests assert both closeness
to the oracle and the safe direction.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath as mp
import pytest

from qinfty.errors import ParameterRangeError
from qinfty.faithfulness import (
    CSV_HEADER,
    HOLDS,
    INCONCLUSIVE,
    VIOLATED,
    ConditionQuery,
    ConditionVerdict,
    check_condition,
    scan_condition_region,
)
from qinfty.qvector import QVectorSpec
from qinfty.rigor import ipow, lower, upper, workprec

GEO = QVectorSpec.geometric(Fraction(1, 2))
LUR = QVectorSpec.luroth()
PL2 = QVectorSpec.powerlaw(2)
CUSTOM = QVectorSpec.custom([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)])

ALPHA_HALF = Fraction(1, 2)
DELTA_TENTH = Fraction(1, 10)


def test_query_validation():
    with pytest.raises(ParameterRangeError):
        ConditionQuery(Fraction(1, 10), Fraction(1, 2), 5, 10, 10)
    with pytest.raises(ParameterRangeError):
        ConditionQuery(Fraction(1, 2), Fraction(1, 2), 5, 10, 10)
    with pytest.raises(ParameterRangeError):
        ConditionQuery(Fraction(1, 2), DELTA_TENTH, -1, 10, 10)
    with pytest.raises(ParameterRangeError):
        ConditionQuery(Fraction(1, 2), DELTA_TENTH, 5, 4, 10)
    with pytest.raises(ParameterRangeError):
        ConditionQuery(Fraction(1, 2), DELTA_TENTH, 5, 10, 4)


def test_geometric_holds_on_region():
    query = ConditionQuery(ALPHA_HALF, DELTA_TENTH, 20, 200, 1000)
    verdict = check_condition(GEO, query)
    assert verdict.outcome == HOLDS
    assert [n for n, _ in verdict.margins] == list(range(21, 201))
    assert all(m > 0 for _, m in verdict.margins)
    assert verdict.min_margin() > 0


def test_geometric_margin_oracle_at_n18():
    # worst cell for n=18 with N=17: mass of [18, 36] raised to 2/5,
    # against the full power tail 2^{-19/2} / (1 - 2^{-1/2})
    query = ConditionQuery(ALPHA_HALF, DELTA_TENTH, 17, 200, 1000)
    verdict = check_condition(GEO, query)
    assert verdict.outcome == HOLDS
    n, margin = verdict.margins[0]
    assert n == 18
    oracle = Fraction("0.00208591022285234103440331511177")
    assert margin <= oracle + Fraction(1, 10**30)
    assert abs(margin - oracle) < Fraction(1, 10**15)


def test_geometric_violated_at_small_n():
    # window [1, 2]: (3/8)^{2/5} = 0.67548... < 1/2 + 8^{-1/2} = 0.85355...
    query = ConditionQuery(ALPHA_HALF, DELTA_TENTH, 0, 17, 50)
    verdict = check_condition(GEO, query)
    assert verdict.outcome == VIOLATED
    assert verdict.witness == (1, 1)
    assert abs(verdict.lhs_upper - Fraction("0.675480019260306706717137")) < Fraction(1, 10**15)
    assert abs(verdict.rhs_lower - Fraction("0.853553390593273762200422")) < Fraction(1, 10**15)
    assert verdict.lhs_upper < verdict.rhs_lower


def test_powerlaw_violated_minimal_scan():
    # scan order is n ascending then M ascending, so the witness is the
    # very first cell past the threshold; direct summation confirms it
    query = ConditionQuery(Fraction(2, 5), DELTA_TENTH, 50, 200, 10**4)
    verdict = check_condition(PL2, query)
    assert verdict.outcome == VIOLATED
    assert verdict.witness == (51, 51)
    assert abs(verdict.lhs_upper - Fraction("0.214745977521006860062126")) < Fraction(1, 10**12)
    assert abs(verdict.rhs_lower - Fraction("1.350242611896160232532928")) < Fraction(1, 10**12)
    assert verdict.reverified_bits == 2 * verdict.precision_bits


def test_powerlaw_witness_at_higher_threshold():
    query = ConditionQuery(Fraction(2, 5), DELTA_TENTH, 99, 200, 10**4)
    verdict = check_condition(PL2, query)
    assert verdict.outcome == VIOLATED
    assert verdict.witness == (100, 100)
    assert abs(verdict.lhs_upper - Fraction("0.175597226265958046032774")) < Fraction(1, 10**12)
    assert abs(verdict.rhs_lower - Fraction("1.537846123314995562242508")) < Fraction(1, 10**12)


def test_powerlaw_witness_cell_direct_oracle():
    # independent check of the (100, 100) cell by plain summation
    with mp.workprec(120):
        z2 = mp.zeta(2)
        mass = sum(mp.mpf(1) / ((i + 1) ** 2) for i in range(100, 201)) / z2
        lhs = mp.power(mass, mp.mpf(3) / 10)
        rhs = sum(
            mp.power(mp.mpf(1) / ((i + 1) ** 2) / z2, mp.mpf(2) / 5)
            for i in range(100, 201)
        )
        assert lhs < rhs


def test_divergent_power_tail_reported_as_limit_witness():
    # alpha = 9/20 makes sum q_i^alpha diverge for the powerlaw with
    # m0 = 2, while alpha - delta = 1/100 keeps every short finite
    # window holding; the violation lands on the limit cell
    query = ConditionQuery(Fraction(9, 20), Fraction(11, 25), 2, 3, 5)
    verdict = check_condition(PL2, query)
    assert verdict.outcome == VIOLATED
    assert verdict.witness == (3, None)
    assert abs(verdict.lhs_upper - Fraction("0.98258242136250930046")) < Fraction(1, 10**12)
    assert verdict.rhs_lower > verdict.lhs_upper


def test_one_term_window_excluded_and_trivially_fine():
    # M = 0 never enters the scan domain M > N >= 0; the one-term
    # inequality q^{alpha-delta} >= q^alpha holds since q < 1
    with pytest.raises(ParameterRangeError):
        ConditionQuery(ALPHA_HALF, DELTA_TENTH, -1, 5, 5)
    with workprec(96):
        for spec in (GEO, LUR, PL2, CUSTOM):
            q = spec.q(4)
            assert lower(ipow(q, Fraction(2, 5))) >= upper(ipow(q, ALPHA_HALF))


def test_empty_region_holds_vacuously():
    query = ConditionQuery(ALPHA_HALF, DELTA_TENTH, 5, 5, 5)
    verdict = check_condition(GEO, query)
    assert verdict.outcome == HOLDS
    assert verdict.margins == ()
    assert verdict.min_margin() is None


def test_inconclusive_on_empty_ladder():
    query = ConditionQuery(ALPHA_HALF, DELTA_TENTH, 20, 25, 25)
    verdict = check_condition(GEO, query, ladder=())
    assert verdict.outcome == INCONCLUSIVE
    assert verdict.reason


def test_custom_family_holds_smoke():
    query = ConditionQuery(ALPHA_HALF, Fraction(1, 5), 1, 6, 8)
    verdict = check_condition(CUSTOM, query)
    assert verdict.outcome == HOLDS
    assert verdict.min_margin() > 0


def test_scan_luroth_negative_margins_at_large_M():
    rows = scan_condition_region(
        LUR, Fraction(2, 5), Fraction(1, 20), [10, 100, 1000], [10, 100, 1000, 10**4]
    )
    assert len(rows) == 12
    by_cell = {(r.n, r.M): r for r in rows}
    for n in (10, 100, 1000):
        assert by_cell[(n, 10**4)].margin < 0
    assert all(r.margin < 0 for r in rows if r.n == 10)


def test_scan_geometric_positive_margins_for_large_n():
    rows = scan_condition_region(
        GEO, Fraction(2, 5), Fraction(1, 20), [10, 100, 1000], [10, 100, 1000, 10**4]
    )
    for r in rows:
        if r.n >= 100:
            assert r.margin > 0
        else:
            assert r.margin < 0


def test_scan_includes_limit_cell_and_divergent_rows():
    rows = scan_condition_region(GEO, ALPHA_HALF, DELTA_TENTH, [18], [18, 50, None])
    assert [r.M for r in rows] == [18, 50, None]
    assert all(r.margin > 0 for r in rows)
    # divergent tail: the limit row records a certified partial lower
    # bound on the right side, so its margin is negative
    rows = scan_condition_region(LUR, Fraction(2, 5), Fraction(1, 20), [50], [10, None])
    limit = [r for r in rows if r.M is None][0]
    assert limit.margin < 0
    assert limit.rhs_upper > limit.lhs_lower


def test_scan_custom_tiny_grid_no_errors():
    rows = scan_condition_region(CUSTOM, ALPHA_HALF, Fraction(1, 5), [2, 3], [2, 4, None])
    assert len(rows) == 6
    assert all(isinstance(r.margin, Fraction) for r in rows)


def test_scan_unsorted_m_grid_allowed():
    rows = scan_condition_region(GEO, ALPHA_HALF, DELTA_TENTH, [20], [50, 18])
    assert [r.M for r in rows] == [50, 18]


def test_scan_rejects_empty_grids():
    with pytest.raises(ParameterRangeError):
        scan_condition_region(GEO, ALPHA_HALF, DELTA_TENTH, [], [10])
    with pytest.raises(ParameterRangeError):
        scan_condition_region(GEO, ALPHA_HALF, DELTA_TENTH, [10], [])


def test_csv_rows_shape():
    rows = scan_condition_region(GEO, ALPHA_HALF, DELTA_TENTH, [18], [18, None])
    assert CSV_HEADER == ["n", "M", "lhs_lower", "rhs_upper", "margin"]
    first = rows[0].csv_row()
    assert first[0] == 18 and first[1] == 18
    assert isinstance(first[2], str) and isinstance(first[4], float)
    assert rows[1].csv_row()[1] == "inf"


def test_verdict_json_shapes():
    holds = check_condition(GEO, ConditionQuery(ALPHA_HALF, DELTA_TENTH, 20, 22, 25))
    doc = holds.to_json()
    assert doc["outcome"] == HOLDS
    assert len(doc["margins"]) == 2 and doc["min_margin"] > 0

    vio = check_condition(PL2, ConditionQuery(Fraction(2, 5), DELTA_TENTH, 99, 200, 10**4))
    doc = vio.to_json()
    assert doc["outcome"] == VIOLATED
    assert doc["witness"] == {"n": 100, "M": 100}
    assert doc["reverified_bits"] == 2 * vio.precision_bits

    inc = ConditionVerdict(outcome=INCONCLUSIVE, reason="because")
    assert inc.to_json()["reason"] == "because"


def test_margins_monotone_diagnostics():
    # fixed n: both bound columns nondecreasing in M across a fine grid
    rows = scan_condition_region(PL2, ALPHA_HALF, DELTA_TENTH, [30], list(range(31, 60)))
    for prev, cur in zip(rows, rows[1:]):
        assert cur.lhs_lower >= prev.lhs_lower
        assert cur.rhs_upper >= prev.rhs_upper
