"""Generate the Gauss-Radau node constants frozen in quadstab.radau.

The 8 nodes are the abscissae of the 8-point Gauss-Radau quadrature rule on
[0, 1] with a fixed node at 0: h0 = 0 plus the roots of the Jacobi polynomial
P_7^(0,1) mapped from (-1, 1) to (0, 1). Printed to 17 significant digits
(enough to round-trip float64). Run:

    python tools/gen_radau_constants.py
"""

import mpmath as mp

mp.mp.dps = 40


def radau_nodes(n_free=7):
    # roots of P_{n}^{(0,1)}(2x-1) via mpmath's jacobi + bisection refinement
    poly = lambda x: mp.jacobi(n_free, 0, 1, 2 * x - 1)
    # crude scan for sign changes, then refine
    roots = []
    prev_x, prev_f = mp.mpf(0), poly(0)
    steps = 20000
    for k in range(1, steps + 1):
        x = mp.mpf(k) / steps
        f = poly(x)
        if mp.sign(f) != mp.sign(prev_f) and prev_f != 0:
            roots.append(mp.findroot(poly, (prev_x + x) / 2))
        prev_x, prev_f = x, f
    assert len(roots) == n_free, len(roots)
    return [mp.mpf(0)] + roots


if __name__ == "__main__":
    nodes = radau_nodes()
    print("H = np.array([")
    for h in nodes:
        print(f"    {mp.nstr(h, 17)},")
    print("])")
