"""Tail-inequality verdicts on two weight families.

The geometric family satisfies the window inequality on every region
past a small threshold; the power-law family breaks it immediately, and
the checker hands back a certified witness cell.
"""

from fractions import Fraction

from qinfty import QVectorSpec, ConditionQuery, check_condition, scan_condition_region

GEO = QVectorSpec.geometric(Fraction(1, 2))
PL2 = QVectorSpec.powerlaw(2)


def main():
    q = ConditionQuery(alpha=Fraction(1, 2), delta=Fraction(1, 10),
                       N=17, n_max=60, M_max=1000)
    verdict = check_condition(GEO, q)
    print(f"geometric: {verdict.outcome}, min margin {float(verdict.min_margin()):.3e}")

    q = ConditionQuery(alpha=Fraction(2, 5), delta=Fraction(1, 10),
                       N=99, n_max=200, M_max=10**4)
    verdict = check_condition(PL2, q)
    n, m = verdict.witness
    print(f"powerlaw:  {verdict.outcome}, witness n={n} M={m},"
          f" re-verified at {verdict.reverified_bits} bits")

    print("\nmargin grid (powerlaw, alpha=2/5, delta=1/10):")
    rows = scan_condition_region(PL2, Fraction(2, 5), Fraction(1, 10),
                                 [50, 100, 200], [100, 1000, None])
    for row in rows:
        label = "inf" if row.M is None else row.M
        print(f"  n={row.n:4} M={label!s:>5} margin={float(row.margin):+.4e}")


if __name__ == "__main__":
    main()
