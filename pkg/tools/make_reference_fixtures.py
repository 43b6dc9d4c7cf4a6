"""Regenerate the arbitrary-precision reference tables under tests/fixtures/.

Values come from mpmath at 40 significant digits and are stored as decimal
strings; the tests parse them to float64 (correctly rounded, sub-ulp).
Run from the repository root:  python3 tools/make_reference_fixtures.py
"""

import json
import os

import mpmath as mp

mp.mp.dps = 40

HERE = os.path.dirname(os.path.abspath(__file__))
FIXDIR = os.path.join(HERE, "..", "tests", "fixtures")


def bessel_table():
    xs = [mp.mpf(10) ** e for e in mp.linspace(-3, 3, 41)]
    xs += [mp.mpf(s) for s in ("0.5", "1", "10", "100")]
    rows = []
    for x in xs:
        rows.append({
            "x": mp.nstr(x, 25),
            "j0": mp.nstr(mp.besselj(0, x), 25),
            "j1": mp.nstr(mp.besselj(1, x), 25),
            "y0": mp.nstr(mp.bessely(0, x), 25),
            "y1": mp.nstr(mp.bessely(1, x), 25),
            "k0": mp.nstr(mp.besselk(0, x), 25),
            "k1": mp.nstr(mp.besselk(1, x), 25),
        })
    return rows


def phi_value(r, k):
    z = k * r
    val = mp.mpc(0, 1) / (8 * k ** 2) * (
        mp.hankel1(0, z) + 2j / mp.pi * mp.besselk(0, z)
    )
    return val


def phi_table():
    cases = [("1", "1"), ("0.5", str(mp.nstr(2 * mp.pi, 30))), ("2.0", "3.0"),
             ("0.25", "1.0")]
    rows = []
    for rs, ks in cases:
        r, k = mp.mpf(rs), mp.mpf(ks)
        val = phi_value(r, k)
        dval = mp.diff(lambda rr: phi_value(rr, k), r)
        rows.append({
            "r": mp.nstr(r, 25), "k": mp.nstr(k, 25),
            "phi_re": mp.nstr(val.real, 25), "phi_im": mp.nstr(val.imag, 25),
            "dphi_re": mp.nstr(dval.real, 25), "dphi_im": mp.nstr(dval.imag, 25),
        })
    return rows


def main():
    os.makedirs(FIXDIR, exist_ok=True)
    with open(os.path.join(FIXDIR, "bessel_reference.json"), "w") as fh:
        json.dump(bessel_table(), fh, indent=1)
        fh.write("\n")
    with open(os.path.join(FIXDIR, "phi_reference.json"), "w") as fh:
        json.dump(phi_table(), fh, indent=1)
        fh.write("\n")
    print("wrote fixtures to", os.path.normpath(FIXDIR))
    print("K0(1) =", mp.nstr(mp.besselk(0, mp.mpf(1)), 20))


if __name__ == "__main__":
    main()
