"""Independent high-precision oracle for the critical-periapsis ratio.

Evaluates 2.8 * ((1+q)(1+e)/sqrt(1-e))**(2/5) * (1 - 0.3*i/pi) with
40-digit arithmetic, printed for freezing into the test suite.
"""

import mpmath as mp

mp.mp.dps = 40


def crit(q, e, i):
    q, e, i = mp.mpf(q), mp.mpf(e), mp.mpf(i)
    return (
        mp.mpf("2.8")
        * ((1 + q) * (1 + e) / mp.sqrt(1 - e)) ** (mp.mpf(2) / 5)
        * (1 - mp.mpf("0.3") * i / mp.pi)
    )


CASES = [
    ("1.0", "0.0", "0.0"),
    ("0.5", "0.3", "0.0"),
    ("1.0", "0.0", str(mp.pi)),
    ("0.25", "0.6", str(mp.pi / 2)),
    ("1e-12", "0.0", "0.0"),
    ("0.3333333333333333", "0.95", "2.0"),
]

for q, e, i in CASES:
    print(f"({q}, {e}, {i!s:.22s}...) -> {mp.nstr(crit(q, e, i), 22)}")
