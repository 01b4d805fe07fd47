"""Keplerian orbit handling and realization of hierarchical systems.

Conventions used throughout the package:

    Units   AU, solar masses, years; G = 4 pi^2 AU^3 Msun^-1 yr^-2.
    Angles  radians. i in [0, pi]; Omega, omega, M in [0, 2 pi).
    Frames  orbits are rotated by Rz(Omega) Rx(i) Rz(omega) from the
            perifocal frame; hierarchical systems are realized in a
            barycentric inertial frame.

A hierarchical system is a tree of two-body orbits ("mobile diagram"):
each orbit connects two mass groups, and every group moves on the
Keplerian orbit of its barycenter.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

# Gravitational constant in AU^3 Msun^-1 yr^-2 (Kepler's third law with
# P in years and a in AU gives exactly 4 pi^2 for 1 Msun).
G = 4.0 * math.pi**2

TWO_PI = 2.0 * math.pi


class Topology(enum.Enum):
    """Supported hierarchy shapes."""

    TRIPLE = "triple"
    QUAD_2P2 = "2p2"
    QUAD_3P1 = "3p1"


# Orbit tree per topology: (group_a, group_b) body indices for each orbit,
# innermost first. The orbit connects the barycenters of the two groups.
ORBIT_TREES = {
    Topology.TRIPLE: (((0,), (1,)), ((0, 1), (2,))),
    Topology.QUAD_2P2: (((0,), (1,)), ((2,), (3,)), ((0, 1), (2, 3))),
    Topology.QUAD_3P1: (((0,), (1,)), ((0, 1), (2,)), ((0, 1, 2), (3,))),
}

ORBIT_NAMES = {
    Topology.TRIPLE: ("in", "out"),
    Topology.QUAD_2P2: ("in1", "in2", "out"),
    Topology.QUAD_3P1: ("in", "mid", "out"),
}


def wrap_angle(x):
    """Reduce an angle to [0, 2 pi)."""
    return np.mod(x, TWO_PI)


@dataclass(frozen=True)
class OrbitElements:
    """Osculating Keplerian elements of one two-body orbit.

    Attributes
    ----------
    a : float
        Semi-major axis [AU]. Negative for hyperbolic states extracted
        from unbound frames (see `bound`).
    e : float
        Eccentricity.
    i : float
        Inclination [rad], in [0, pi].
    Omega, omega, M : float
        Longitude of ascending node, argument of periapsis and mean
        anomaly [rad], in [0, 2 pi).
    """

    a: float
    e: float = 0.0
    i: float = 0.0
    Omega: float = 0.0
    omega: float = 0.0
    M: float = 0.0

    @property
    def bound(self) -> bool:
        return self.e < 1.0 and self.a > 0.0

    def validate(self):
        """Raise ValueError unless this is a well-formed bound orbit."""
        if not np.isfinite([self.a, self.e, self.i, self.Omega, self.omega, self.M]).all():
            raise ValueError("non-finite orbital element")
        if self.a <= 0.0:
            raise ValueError(f"semi-major axis must be positive, got {self.a}")
        if not 0.0 <= self.e < 1.0:
            raise ValueError(f"bound orbit needs 0 <= e < 1, got {self.e}")
        if not 0.0 <= self.i <= math.pi:
            raise ValueError(f"inclination outside [0, pi]: {self.i}")
        return self

    def normalized(self) -> "OrbitElements":
        """Copy with Omega, omega, M wrapped into [0, 2 pi)."""
        return replace(
            self,
            Omega=float(wrap_angle(self.Omega)),
            omega=float(wrap_angle(self.omega)),
            M=float(wrap_angle(self.M)),
        )


@dataclass(frozen=True)
class HierarchySpec:
    """Masses plus one OrbitElements per binary node of the mobile diagram.

    Orbit order follows ORBIT_TREES: (in, out) for triples,
    (in1, in2, out) for 2+2 quadruples, (in, mid, out) for 3+1.
    """

    topology: Topology
    masses: tuple
    orbits: tuple

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        object.__setattr__(self, "orbits", tuple(self.orbits))

    @property
    def n_bodies(self) -> int:
        return 3 if self.topology is Topology.TRIPLE else 4

    def orbit(self, name: str) -> OrbitElements:
        return self.orbits[ORBIT_NAMES[self.topology].index(name)]

    def group_mass(self, bodies) -> float:
        return sum(self.masses[k] for k in bodies)

    def orbit_total_mass(self, idx: int) -> float:
        ga, gb = ORBIT_TREES[self.topology][idx]
        return self.group_mass(ga) + self.group_mass(gb)

    def validate(self):
        tree = ORBIT_TREES[self.topology]
        if len(self.masses) != self.n_bodies:
            raise ValueError(
                f"{self.topology.value} needs {self.n_bodies} masses, got {len(self.masses)}"
            )
        if any(m <= 0 for m in self.masses):
            raise ValueError("masses must be positive")
        if len(self.orbits) != len(tree):
            raise ValueError(
                f"{self.topology.value} needs {len(tree)} orbits, got {len(self.orbits)}"
            )
        for el in self.orbits:
            el.validate()
        # nesting must be ordered: every inner orbit tighter than its parent
        names = ORBIT_NAMES[self.topology]
        outer_a = self.orbit("out").a
        for name, el in zip(names, self.orbits):
            if name != "out" and el.a >= outer_a:
                raise ValueError(f"orbit {name} has a >= outer a")
        if self.topology is Topology.QUAD_3P1 and self.orbit("in").a >= self.orbit("mid").a:
            raise ValueError("orbit in has a >= mid a")
        return self

    def outer_period(self) -> float:
        """Keplerian period of the outermost orbit [yr]."""
        return orbital_period(self.orbit("out").a, sum(self.masses))


@dataclass
class CartesianSystem:
    """Point masses with barycentric positions and velocities.

    masses: (N,), positions/velocities: (N, 3) float64 arrays.
    """

    masses: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        self.masses = np.ascontiguousarray(self.masses, dtype=np.float64)
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64)
        self.velocities = np.ascontiguousarray(self.velocities, dtype=np.float64)

    @property
    def n(self) -> int:
        return len(self.masses)

    def copy(self) -> "CartesianSystem":
        return CartesianSystem(
            self.masses.copy(), self.positions.copy(), self.velocities.copy()
        )

    def to_barycentric(self) -> "CartesianSystem":
        """Shift to the zero-momentum frame with barycenter at the origin."""
        mtot = self.masses.sum()
        self.positions -= self.masses @ self.positions / mtot
        self.velocities -= self.masses @ self.velocities / mtot
        return self


def orbital_period(a: float, m_total: float) -> float:
    """Keplerian period [yr] of an orbit with semi-major axis a [AU]."""
    return TWO_PI * math.sqrt(a**3 / (G * m_total))


def kepler_solve(M, e, tol: float = 1e-12):
    """Solve Kepler's equation E - e sin E = M for the eccentric anomaly.

    Newton iteration from Danby's starter E0 = M + 0.85 e sign(sin M),
    with bisection fallback for the rare non-converged cases. Accepts
    scalars or arrays; M is wrapped into [0, 2 pi) first.

    Parameters
    ----------
    M : float or ndarray
        Mean anomaly [rad].
    e : float
        Eccentricity, 0 <= e < 1.
    tol : float
        Residual bound |E - e sin E - M|.

    Returns
    -------
    E : float or ndarray
        Eccentric anomaly [rad] in [0, 2 pi).
    """
    if not 0.0 <= e < 1.0:
        raise ValueError(f"kepler_solve needs 0 <= e < 1, got e={e}")
    M_in = np.asarray(M, dtype=np.float64)
    scalar = M_in.ndim == 0
    Mw = np.atleast_1d(wrap_angle(M_in)).astype(np.float64)

    E = Mw + 0.85 * e * np.sign(np.sin(Mw))
    for _ in range(50):
        f = E - e * np.sin(E) - Mw
        E = E - f / (1.0 - e * np.cos(E))
        if np.all(np.abs(f) < 0.1 * tol):
            break
    bad = np.abs(E - e * np.sin(E) - Mw) >= tol
    for k in np.nonzero(bad)[0]:
        # E - e sin E is monotone increasing: bisect on [M - e, M + e]
        lo, hi = Mw[k] - e, Mw[k] + e
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid - e * math.sin(mid) - Mw[k] < 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 0.25 * tol:
                break
        E[k] = 0.5 * (lo + hi)
    E = wrap_angle(E)
    return float(E[0]) if scalar else E


def _rotation_matrix(i: float, Omega: float, omega: float) -> np.ndarray:
    """Perifocal -> inertial rotation Rz(Omega) Rx(i) Rz(omega)."""
    co, so = math.cos(Omega), math.sin(Omega)
    ci, si = math.cos(i), math.sin(i)
    cw, sw = math.cos(omega), math.sin(omega)
    return np.array(
        [
            [co * cw - so * sw * ci, -co * sw - so * cw * ci, so * si],
            [so * cw + co * sw * ci, -so * sw + co * cw * ci, -co * si],
            [sw * si, cw * si, ci],
        ]
    )


def elements_to_rel_state(el: OrbitElements, m_total: float):
    """Relative position and velocity of a two-body orbit at its mean anomaly.

    Parameters
    ----------
    el : OrbitElements
        Bound orbit (e < 1, a > 0).
    m_total : float
        Sum of the two point masses [Msun].

    Returns
    -------
    r, v : ndarray, shape (3,)
        Separation vector [AU] and relative velocity [AU/yr].
    """
    if not 0.0 <= el.e < 1.0:
        raise ValueError(f"bound orbit needs 0 <= e < 1, got e={el.e}")
    if el.a <= 0.0 or m_total <= 0.0:
        raise ValueError("a and m_total must be positive")
    mu = G * m_total
    E = kepler_solve(el.M, el.e)
    cE, sE = math.cos(E), math.sin(E)
    b_over_a = math.sqrt(1.0 - el.e**2)
    r_peri = np.array([el.a * (cE - el.e), el.a * b_over_a * sE, 0.0])
    r_mag = el.a * (1.0 - el.e * cE)
    v_scale = math.sqrt(mu * el.a) / r_mag
    v_peri = np.array([-v_scale * sE, v_scale * b_over_a * cE, 0.0])
    rot = _rotation_matrix(el.i, el.Omega, el.omega)
    return rot @ r_peri, rot @ v_peri


def rel_state_to_elements(r, v, m_total: float) -> OrbitElements:
    """Osculating elements of a relative two-body state.

    Inverse of elements_to_rel_state for bound states. Unbound states
    (specific energy >= 0) are returned with e >= 1 and a <= 0 so callers
    can detect them via ``elements.bound`` instead of catching errors;
    only (a, e) are meaningful in that case.
    """
    r = np.asarray(r, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    r_mag = float(np.linalg.norm(r))
    if r_mag == 0.0:
        raise ValueError("singular state: |r| = 0")
    mu = G * m_total
    v2 = float(v @ v)
    energy = 0.5 * v2 - mu / r_mag
    a = math.inf if energy == 0.0 else -mu / (2.0 * energy)

    h = np.cross(r, v)
    h_mag = float(np.linalg.norm(h))
    e_vec = np.cross(v, h) / mu - r / r_mag
    e = float(np.linalg.norm(e_vec))

    inc = math.atan2(math.hypot(h[0], h[1]), h[2])
    node = np.array([-h[1], h[0], 0.0])  # z_hat x h
    if np.linalg.norm(node) < 1e-12 * h_mag:
        node = np.array([1.0, 0.0, 0.0])  # equatorial: reference x axis
        Omega = 0.0
    else:
        Omega = math.atan2(node[1], node[0])

    # radial states (h = 0) only need (a, e); pick any plane normal
    h_hat = h / h_mag if h_mag > 0.0 else np.array([0.0, 0.0, 1.0])
    if e < 1e-12:
        omega = 0.0
        ref = node  # measure anomaly from the node / x axis
    else:
        omega = math.atan2(float(np.cross(node, e_vec) @ h_hat), float(node @ e_vec))
        ref = e_vec
    nu = math.atan2(float(np.cross(ref, r) @ h_hat), float(ref @ r))

    if e < 1.0 and energy < 0.0:
        E = 2.0 * math.atan2(
            math.sqrt(1.0 - e) * math.sin(0.5 * nu),
            math.sqrt(1.0 + e) * math.cos(0.5 * nu),
        )
        M = E - e * math.sin(E)
    else:
        M = 0.0  # meaningless for unbound frames
    return OrbitElements(
        a=a,
        e=e,
        i=inc,
        Omega=float(wrap_angle(Omega)),
        omega=float(wrap_angle(omega)),
        M=float(wrap_angle(M)),
    )


def mutual_inclination(i1, Omega1, i2, Omega2):
    """Angle between two orbit angular-momentum vectors, in [0, pi].

    cos i_mut = cos i1 cos i2 + sin i1 sin i2 cos(Omega1 - Omega2),
    with the cosine clamped to [-1, 1] to absorb roundoff.
    """
    c = np.cos(i1) * np.cos(i2) + np.sin(i1) * np.sin(i2) * np.cos(
        np.asarray(Omega1) - np.asarray(Omega2)
    )
    return np.arccos(np.clip(c, -1.0, 1.0))


def realize_system(spec: HierarchySpec) -> CartesianSystem:
    """Turn a hierarchy of orbital elements into barycentric Cartesian state.

    Each orbit of the mobile diagram contributes the Keplerian relative
    state of its two mass groups, split between the groups in inverse
    mass proportion, so the construction is barycentric by design; a
    final recentering absorbs roundoff.

    Raises
    ------
    ValueError
        If the spec fails validation (mass/orbit count, element ranges,
        nesting order).
    """
    spec.validate()
    tree = ORBIT_TREES[spec.topology]
    masses = np.array(spec.masses)
    n = spec.n_bodies
    pos = np.zeros((n, 3))
    vel = np.zeros((n, 3))
    for el, (ga, gb) in zip(spec.orbits, tree):
        ma, mb = masses[list(ga)].sum(), masses[list(gb)].sum()
        d, dv = elements_to_rel_state(el, ma + mb)
        fa, fb = -mb / (ma + mb), ma / (ma + mb)
        for k in ga:
            pos[k] += fa * d
            vel[k] += fa * dv
        for k in gb:
            pos[k] += fb * d
            vel[k] += fb * dv
    return CartesianSystem(masses, pos, vel).to_barycentric()


def nested_elements(sys: CartesianSystem, topology: Topology):
    """Osculating elements of every orbit node, innermost first.

    Inverse of realize_system: relative states are taken between the
    barycenters of each orbit's two mass groups (Jacobi-style).
    """
    out = []
    for ga, gb in ORBIT_TREES[topology]:
        ra, va, ma = _group_state(sys, ga)
        rb, vb, mb = _group_state(sys, gb)
        out.append(rel_state_to_elements(rb - ra, vb - va, ma + mb))
    return out


def _group_state(sys: CartesianSystem, group):
    idx = list(group)
    m = sys.masses[idx]
    mtot = m.sum()
    return (
        m @ sys.positions[idx] / mtot,
        m @ sys.velocities[idx] / mtot,
        mtot,
    )
