"""Walk a few points through the digit codec, then cover an interval.

Run:  python3 demos/expand_and_cover.py
"""

from fractions import Fraction

from qinfty import QVectorSpec, QRational, encode, decode
from qinfty.covering import CoverParams, cover_interval
from qinfty.rigor import approx_str

LUR = QVectorSpec.luroth()
GEO = QVectorSpec.geometric(Fraction(1, 2))


def show_digits():
    print("== digit codec ==")
    for spec, name in ((LUR, "luroth"), (GEO, "geometric 1/2")):
        for x in (Fraction(2, 3), Fraction(1, 7), Fraction(355, 1131)):
            addr = encode(spec, x, 8)
            cyl = decode(spec, addr)
            inside = cyl.left <= x < cyl.left + cyl.length
            print(f"{name:14} x={str(x):9} digits={list(addr.digits)}"
                  f" len={approx_str(cyl.length, 6)} contains={inside}")
    print()


def show_cover():
    print("== certified covering ==")
    params = CoverParams(Fraction(1, 2), Fraction(1, 5), Fraction(1, 10**6))
    a = QRational.of((1, 1, 1))
    b = QRational.of((1, 3))
    cert = cover_interval(GEO, a, b, params)
    print(f"interval  [{approx_str(a.value(GEO), 8)}, {approx_str(b.value(GEO), 8)})")
    print(f"blocks    {len(cert.blocks)}")
    for blk in cert.blocks:
        print(f"  prefix={list(blk.prefix.digits)} digits {blk.first}..{blk.last}")
    print(f"residual  <= {approx_str(cert.residual_total_upper(), 4)}")
    print(f"alpha-volume <= {approx_str(cert.alpha_volume_upper, 8)}")
    print(f"certified bound {approx_str(cert.bound_rhs, 8)}")
    assert cert.alpha_volume_upper <= cert.bound_rhs


if __name__ == "__main__":
    show_digits()
    show_cover()
