"""Freeze reference eccentric anomalies by 200-step interval bisection.

E - e sin E is strictly increasing in E for e < 1, so bisection on
[M - e, M + e] brackets the root without any smoothness assumptions.
Run: python3 tools/gen_kepler_oracle.py
"""

from mpmath import mp, mpf, sin

mp.dps = 40

CASES = [
    (mpf(1), mpf("0.3")),
    (mpf("0.1"), mpf("0.9")),
    (mpf(3), mpf("0.95")),
    (mpf("6.2"), mpf("0.5")),
]

for M, e in CASES:
    lo, hi = M - e, M + e
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid - e * sin(mid) - M < 0:
            lo = mid
        else:
            hi = mid
    E = (lo + hi) / 2
    print(f"M={float(M)!r:6} e={float(e)!r:5} E={mp.nstr(E, 20)}  resid={mp.nstr(E - e*sin(E) - M, 3)}")
