"""15th-order Gauss-Radau predictor-corrector kernel (Everhart scheme).

Acceleration over one step of size dt is modeled on the scaled time
s = (t - t0)/dt in [0, 1] as

    a(s) = a0 + b0 s + b1 s^2 + ... + b6 s^7,

with the b coefficients determined by collocation at the 8 Gauss-Radau
nodes (s = 0 plus the 7 roots of a Jacobi polynomial). The corrector
iterates divided-difference coefficients g at the nodes and maps them
to b through a Newton-to-monomial triangular transform; integrating the
polynomial analytically to s = 1 advances positions and velocities.
Step size follows the highest-order term: dt_new = dt (eps / err)^(1/7)
with err = max|b6| / max|a|.

Everything below numba's @njit boundary works on plain float64 arrays;
the chunked drivers in nbody.py own the Python-side bookkeeping.
"""

import math

import numpy as np
from numba import njit

from .orbits import G

# Spacings of the 8 Gauss-Radau collocation nodes on [0, 1]: zero plus
# the roots of the degree-7 Jacobi polynomial P(0,1) mapped from [-1, 1]
# (frozen output of tools/gen_radau_constants.py, 17 significant digits).
H = np.array(
    [
        0.0,
        0.056262560536922146,
        0.18024069173689236,
        0.35262471711316964,
        0.54715362633055538,
        0.73421017721541053,
        0.88532094683909577,
        0.9775206135612875,
    ]
)


def _build_tables():
    """Derive the collocation transform tables from the nodes H.

    CMAT[j, k] is the s^k coefficient of prod_{m=1..j} (s - H[m]), so a
    change dg in the Newton coefficient g_j moves b_k by dg * CMAT[j, k].
    GT = inv(CMAT)^T recovers g from b (g_j = sum_k GT[j, k] b_k).
    """
    cmat = np.zeros((7, 7))
    for j in range(7):
        poly = np.array([1.0])
        for m in range(1, j + 1):
            poly = np.convolve(poly, np.array([1.0, -H[m]]))
        cmat[j, : j + 1] = poly[::-1]
    gt = np.linalg.inv(cmat).T.copy()

    # divided-difference denominators as reciprocals, rinv[n, m] = 1/(H[n]-H[m])
    rinv = np.zeros((8, 8))
    for n in range(1, 8):
        for m in range(n):
            rinv[n, m] = 1.0 / (H[n] - H[m])

    # position-prediction weights at each node: x(s) picks up
    # a0 s^2/2 + sum_k b_k s^(k+3)/((k+2)(k+3))
    xc = np.zeros((8, 7))
    for n in range(8):
        for k in range(7):
            xc[n, k] = H[n] ** (k + 3) / ((k + 2) * (k + 3))
    xa = 0.5 * H**2

    # next-step seed: b'_k = q^(k+1) sum_{j>=k} binom(j+1, k+1) b_j
    bino = np.zeros((7, 7))
    for k in range(7):
        for j in range(k, 7):
            bino[k, j] = math.comb(j + 1, k + 1)

    # exact integrals to s = 1 for the final update
    fx = np.array([1.0 / ((k + 2) * (k + 3)) for k in range(7)])
    fv = np.array([1.0 / (k + 2) for k in range(7)])
    return cmat, gt, rinv, xc, xa, bino, fx, fv


CMAT, GT, RINV, XC, XA, BINO, FX, FV = _build_tables()

# advance() status codes
OK = 0
NONFINITE = 1
STEP_LIMIT = 2
STALLED = 3

_SAFETY = 0.25  # reject when dt_new < SAFETY * dt; growth capped at 1/SAFETY
_MAX_SWEEPS = 12


@njit(cache=True)
def gravity(m, x, soft2, acc):
    """Pairwise Newtonian acceleration with optional Plummer softening."""
    n = m.shape[0]
    for i in range(n):
        for d in range(3):
            acc[i, d] = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[j, 0] - x[i, 0]
            dy = x[j, 1] - x[i, 1]
            dz = x[j, 2] - x[i, 2]
            r2 = dx * dx + dy * dy + dz * dz + soft2
            inv_r3 = G / (r2 * math.sqrt(r2))
            fi = m[j] * inv_r3
            fj = m[i] * inv_r3
            acc[i, 0] += fi * dx
            acc[i, 1] += fi * dy
            acc[i, 2] += fi * dz
            acc[j, 0] -= fj * dx
            acc[j, 1] -= fj * dy
            acc[j, 2] -= fj * dz


@njit(cache=True)
def _predict_seed(q, b, e):
    """Rescale the polynomial to a step ratio q and seed the next corrector.

    Writes the scaled-forward coefficients into e and adds back the
    correction the previous prediction missed (b - e_old) so systematic
    prediction error cancels. Operates in place on b and e.
    """
    n = b.shape[1]
    for i in range(n):
        for d in range(3):
            be0 = b[0, i, d] - e[0, i, d]
            be1 = b[1, i, d] - e[1, i, d]
            be2 = b[2, i, d] - e[2, i, d]
            be3 = b[3, i, d] - e[3, i, d]
            be4 = b[4, i, d] - e[4, i, d]
            be5 = b[5, i, d] - e[5, i, d]
            be6 = b[6, i, d] - e[6, i, d]
            qk = q
            for k in range(7):
                s = 0.0
                for j in range(k, 7):
                    s += BINO[k, j] * b[j, i, d]
                e[k, i, d] = qk * s
                qk *= q
            b[0, i, d] = e[0, i, d] + be0
            b[1, i, d] = e[1, i, d] + be1
            b[2, i, d] = e[2, i, d] + be2
            b[3, i, d] = e[3, i, d] + be3
            b[4, i, d] = e[4, i, d] + be4
            b[5, i, d] = e[5, i, d] + be5
            b[6, i, d] = e[6, i, d] + be6


@njit(cache=True)
def advance(m, x, v, dt_init, t_span, eps, soft2, b, e, max_steps):
    """Advance the system in place by exactly t_span.

    b and e (shape (7, N, 3)) carry the acceleration polynomial and its
    last prediction across calls; pass zeros on the first call. Returns
    (dt_next, steps_done, status, t_done) where dt_next is the natural
    step to resume with, status is OK / NONFINITE / STEP_LIMIT /
    STALLED, and t_done is the time actually covered; a STEP_LIMIT
    return can be resumed seamlessly over the remaining span.
    """
    n = m.shape[0]
    a0 = np.empty((n, 3))
    at = np.empty((n, 3))
    xt = np.empty((n, 3))
    g = np.empty((7, n, 3))

    t = 0.0
    dt = dt_init
    steps = 0
    while t < t_span:
        if steps >= max_steps:
            return dt, steps, STEP_LIMIT, t
        rem = t_span - t
        dt_try = dt
        clipped = False
        # stretch near-misses (roundoff in grid spans) onto the target
        if dt_try >= rem * (1.0 - 1e-12):
            dt_try = rem
            clipped = True
        if dt_try <= 1e-14 * t_span or t + dt_try == t:
            # unreachable accuracy target (e.g. near-collision periapsis
            # where coordinate roundoff exceeds the tolerance): fail fast
            return dt, steps, STALLED, t

        gravity(m, x, soft2, a0)

        # start the corrector from g consistent with the predicted b
        for j in range(7):
            for i in range(n):
                for d in range(3):
                    s = 0.0
                    for k in range(7):
                        s += GT[j, k] * b[k, i, d]
                    g[j, i, d] = s

        maxa = 0.0
        last_ratio = 1e300
        for sweep in range(_MAX_SWEEPS):
            maxdb6 = 0.0
            for node in range(1, 8):
                s = H[node]
                sd = s * dt_try
                sd2 = dt_try * dt_try
                for i in range(n):
                    for d in range(3):
                        acc = XA[node] * a0[i, d]
                        for k in range(7):
                            acc += XC[node, k] * b[k, i, d]
                        xt[i, d] = x[i, d] + sd * v[i, d] + sd2 * acc
                gravity(m, xt, soft2, at)
                if node == 7:
                    maxa = 0.0
                    for i in range(n):
                        for d in range(3):
                            aa = abs(at[i, d])
                            if aa > maxa:
                                maxa = aa
                for i in range(n):
                    for d in range(3):
                        tmp = (at[i, d] - a0[i, d]) / s
                        for mm in range(1, node):
                            tmp = (tmp - g[mm - 1, i, d]) * RINV[node, mm]
                        dg = tmp - g[node - 1, i, d]
                        g[node - 1, i, d] = tmp
                        for k in range(node - 1):
                            b[k, i, d] += dg * CMAT[node - 1, k]
                        b[node - 1, i, d] += dg
                        if node == 7:
                            ad = abs(dg)
                            if ad > maxdb6:
                                maxdb6 = ad
            if maxa > 0.0:
                ratio = maxdb6 / maxa
                # converged, or stalled at the roundoff floor of the
                # divided differences: either way more sweeps add nothing
                if ratio < 1e-16 or (sweep >= 2 and ratio >= last_ratio):
                    break
                last_ratio = ratio

        if not math.isfinite(maxa):
            return dt, steps, NONFINITE, t

        # step-size control on the size of the highest-order term
        maxb6 = 0.0
        for i in range(n):
            for d in range(3):
                ab = abs(b[6, i, d])
                if ab > maxb6:
                    maxb6 = ab
        if maxb6 > 0.0 and maxa > 0.0:
            dt_req = dt_try * (eps / (maxb6 / maxa)) ** (1.0 / 7.0)
        else:
            dt_req = dt_try / _SAFETY

        if dt_req < _SAFETY * dt_try:
            # reject: rescale the polynomial onto the shorter step and redo
            _predict_seed(dt_req / dt_try, b, e)
            dt = dt_req
            steps += 1
            continue

        # accept: integrate the polynomial to s = 1
        for i in range(n):
            for d in range(3):
                px = 0.5 * a0[i, d]
                pv = a0[i, d]
                for k in range(7):
                    px += FX[k] * b[k, i, d]
                    pv += FV[k] * b[k, i, d]
                x[i, d] += dt_try * v[i, d] + dt_try * dt_try * px
                v[i, d] += dt_try * pv
        steps += 1
        t = t_span if clipped else t + dt_try

        ok = True
        for i in range(n):
            for d in range(3):
                if not math.isfinite(x[i, d]):
                    ok = False
        if not ok:
            return dt, steps, NONFINITE, t

        if clipped:
            # resume with the natural step, not the clipped one; a large
            # forward ratio would amplify b by q^7, so restart the
            # polynomial cold instead of extrapolating that far
            dt_next = dt
            q = dt_next / dt_try
            if q <= 4.0:
                _predict_seed(q, b, e)
            else:
                b[:] = 0.0
                e[:] = 0.0
        else:
            dt_next = dt_req if dt_req < dt_try / _SAFETY else dt_try / _SAFETY
            _predict_seed(dt_next / dt_try, b, e)
        dt = dt_next
    return dt, steps, OK, t


@njit(cache=True)
def initial_step_guess(m, x, soft2):
    """Conservative starting dt: 1% of the shortest pairwise orbital time."""
    n = m.shape[0]
    tmin = 1e300
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[j, 0] - x[i, 0]
            dy = x[j, 1] - x[i, 1]
            dz = x[j, 2] - x[i, 2]
            r2 = dx * dx + dy * dy + dz * dz + soft2
            tdyn = 2.0 * math.pi * math.sqrt(r2 * math.sqrt(r2) / (G * (m[i] + m[j])))
            if tdyn < tmin:
                tmin = tdyn
    return 0.01 * tmin
