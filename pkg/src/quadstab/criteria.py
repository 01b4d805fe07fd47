"""Analytic stability baseline and secular-timescale diagnostics.

The algebraic triple-stability criterion compares the outer orbit's
periapsis distance with a critical multiple of the inner semi-major
axis,

    R_p,crit / a_in = 2.8 [ (1+q_out)(1+e_out) / sqrt(1-e_out) ]^(2/5)
                          (1 - 0.3 i_mut / pi),

a triple being stable when a_out (1-e_out) / a_in strictly exceeds it.
Quadruples are reduced to two overlapping "nested" triples by
collapsing one sub-binary to a point mass, and count as stable only if
both views pass.

Timescale note: the von Zeipel-Lidov-Kozai estimate below carries
(1-e_out)^(3/2). The more common literature form uses (1-e_out^2)^(3/2);
this module deliberately implements the former and offers no switch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .orbits import HierarchySpec, Topology, mutual_inclination, orbital_period


@dataclass(frozen=True)
class TripleView:
    """A (possibly collapsed) triple: inner binary plus point tertiary.

    q_in and e_in describe the view's inner orbit; the analytic
    criterion ignores them, but nested-model classifiers need them to
    assemble the 6 triple features from a quadruple view.
    """

    m_in_total: float
    m_out: float
    a_in: float
    a_out: float
    e_out: float
    i_mut: float
    q_in: float
    e_in: float

    @property
    def q_out(self) -> float:
        return self.m_out / self.m_in_total

    @property
    def alpha(self) -> float:
        return self.a_in / self.a_out

    def validate(self):
        if self.m_in_total <= 0 or self.m_out <= 0 or self.a_in <= 0 or self.a_out <= 0:
            raise ValueError("masses and semi-major axes must be positive")
        if not 0.0 <= self.e_out < 1.0:
            raise ValueError(f"e_out outside [0, 1): {self.e_out}")
        if not 0.0 <= self.i_mut <= math.pi:
            raise ValueError(f"i_mut outside [0, pi]: {self.i_mut}")
        return self


def triple_view(spec: HierarchySpec) -> TripleView:
    """The (single) view of a plain triple."""
    if spec.topology is not Topology.TRIPLE:
        raise ValueError("triple_view needs a Triple spec")
    m1, m2, m3 = spec.masses
    b_in, b_out = spec.orbits
    return TripleView(
        m_in_total=m1 + m2,
        m_out=m3,
        a_in=b_in.a,
        a_out=b_out.a,
        e_out=b_out.e,
        i_mut=float(mutual_inclination(b_in.i, b_in.Omega, b_out.i, b_out.Omega)),
        q_in=min(m1, m2) / max(m1, m2),
        e_in=b_in.e,
    ).validate()


def nested_triples(spec: HierarchySpec) -> tuple[TripleView, TripleView]:
    """Decompose a quadruple into its two overlapping triples.

    2+2: each inner binary paired with the other binary collapsed to a
    point tertiary on the outer orbit. 3+1: the inner binary with m3 on
    the middle orbit, and the middle orbit (inner pair collapsed) with
    m4 on the outer orbit. The view's q_in is always reported <= 1 so
    it matches the triple training marginal.
    """
    if spec.topology is Topology.TRIPLE:
        raise ValueError("a triple has no nested decomposition; use triple_view")
    if spec.topology is Topology.QUAD_2P2:
        m1, m2, m3, m4 = spec.masses
        b_in1, b_in2, b_out = spec.orbits
        t1 = TripleView(
            m_in_total=m1 + m2,
            m_out=m3 + m4,
            a_in=b_in1.a,
            a_out=b_out.a,
            e_out=b_out.e,
            i_mut=float(
                mutual_inclination(b_in1.i, b_in1.Omega, b_out.i, b_out.Omega)
            ),
            q_in=min(m1, m2) / max(m1, m2),
            e_in=b_in1.e,
        )
        t2 = TripleView(
            m_in_total=m3 + m4,
            m_out=m1 + m2,
            a_in=b_in2.a,
            a_out=b_out.a,
            e_out=b_out.e,
            i_mut=float(
                mutual_inclination(b_in2.i, b_in2.Omega, b_out.i, b_out.Omega)
            ),
            q_in=min(m3, m4) / max(m3, m4),
            e_in=b_in2.e,
        )
    else:
        m1, m2, m3, m4 = spec.masses
        b_in, b_mid, b_out = spec.orbits
        t1 = TripleView(
            m_in_total=m1 + m2,
            m_out=m3,
            a_in=b_in.a,
            a_out=b_mid.a,
            e_out=b_mid.e,
            i_mut=float(
                mutual_inclination(b_in.i, b_in.Omega, b_mid.i, b_mid.Omega)
            ),
            q_in=min(m1, m2) / max(m1, m2),
            e_in=b_in.e,
        )
        m12 = m1 + m2
        t2 = TripleView(
            m_in_total=m12 + m3,
            m_out=m4,
            a_in=b_mid.a,
            a_out=b_out.a,
            e_out=b_out.e,
            i_mut=float(
                mutual_inclination(b_mid.i, b_mid.Omega, b_out.i, b_out.Omega)
            ),
            q_in=min(m12, m3) / max(m12, m3),
            e_in=b_mid.e,
        )
    return t1.validate(), t2.validate()


def ma01_rp_crit_ratio(q_out: float, e_out: float, i_mut: float) -> float:
    """Critical periapsis-to-inner-axis ratio of the analytic criterion.

    i_mut is in radians; the linear inclination factor 1 - 0.3 i/pi
    spans 1 (coplanar prograde) to 0.7 (coplanar retrograde).
    """
    if q_out <= 0.0:
        raise ValueError(f"q_out must be positive, got {q_out}")
    if not 0.0 <= e_out < 1.0:
        raise ValueError(f"e_out outside [0, 1): {e_out}")
    if not 0.0 <= i_mut <= math.pi:
        raise ValueError(f"i_mut outside [0, pi]: {i_mut}")
    bracket = (1.0 + q_out) * (1.0 + e_out) / math.sqrt(1.0 - e_out)
    return 2.8 * bracket**0.4 * (1.0 - 0.3 * i_mut / math.pi)


def ma01_triple_stable(view: TripleView) -> bool:
    """Stable iff outer periapsis exceeds the critical ratio (strictly)."""
    view.validate()
    rp_over_ain = view.a_out * (1.0 - view.e_out) / view.a_in
    return rp_over_ain > ma01_rp_crit_ratio(view.q_out, view.e_out, view.i_mut)


def ma01_quad_stable(spec: HierarchySpec) -> bool:
    """A quadruple is analytically stable only if both nested views are."""
    t1, t2 = nested_triples(spec)
    return ma01_triple_stable(t1) and ma01_triple_stable(t2)


def ma01_stable(spec: HierarchySpec) -> bool:
    """Topology-dispatching analytic verdict (triples use their one view)."""
    if spec.topology is Topology.TRIPLE:
        return ma01_triple_stable(triple_view(spec))
    return ma01_quad_stable(spec)


def lk_timescale(
    P_in: float, P_out: float, m_in_total: float, m_out: float, e_out: float
) -> float:
    """Secular oscillation timescale estimate of a triple [yr].

    (P_out^2 / P_in) ((m_in_total + m_out) / m_out) (1 - e_out)^(3/2),
    with the eccentricity factor exactly in this form (see module note).
    """
    if P_in <= 0 or P_out <= 0 or m_in_total <= 0 or m_out <= 0:
        raise ValueError("periods and masses must be positive")
    if not 0.0 <= e_out < 1.0:
        raise ValueError(f"e_out outside [0, 1): {e_out}")
    return (
        (P_out**2 / P_in)
        * ((m_in_total + m_out) / m_out)
        * (1.0 - e_out) ** 1.5
    )


def _view_lk(view: TripleView) -> float:
    p_in = orbital_period(view.a_in, view.m_in_total)
    p_out = orbital_period(view.a_out, view.m_in_total + view.m_out)
    return lk_timescale(p_in, p_out, view.m_in_total, view.m_out, view.e_out)


def lk_period_ratio(spec: HierarchySpec) -> float:
    """Ratio of the two nested views' secular timescales, T1 over T2.

    Ratios near 1 mark the regime where the two secular oscillations
    interfere; very large or small ratios decouple them.
    """
    t1, t2 = nested_triples(spec)
    return _view_lk(t1) / _view_lk(t2)
