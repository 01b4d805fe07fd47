#!/usr/bin/env python3
"""The closed-form stability boundary for triples, and how it extends
to quadruples by decomposition.

The Mardling & Aarseth (2001) criterion gives a critical pericenter
ratio for a hierarchical triple; a quadruple is called analytically
stable when every one of its nested triple decompositions passes.
"""

import math

from quadstab.criteria import (
    TripleView,
    ma01_quad_stable,
    ma01_rp_crit_ratio,
    ma01_stable,
    nested_triples,
)
from quadstab.orbits import HierarchySpec, OrbitElements, Topology


def main():
    print("critical (a_out(1-e_out))/a_in ratio for an equal-mass triple:")
    base = ma01_rp_crit_ratio(1.0, 0.0, 0.0)
    print(f"  circular coplanar        {base:.4f}")
    print(f"  e_out = 0.5              {ma01_rp_crit_ratio(1.0, 0.5, 0.0):.4f}")
    print(f"  retrograde (i = pi)      {ma01_rp_crit_ratio(1.0, 0.0, math.pi):.4f}")
    print(f"  heavy companion q = 10   {ma01_rp_crit_ratio(10.0, 0.0, 0.0):.4f}")
    print(f"\ncircular coplanar equal-mass triples are stable out to "
          f"alpha = {1.0 / base:.4f}")

    # the same interface accepts whole systems
    triple = HierarchySpec(
        Topology.TRIPLE, (1.0, 1.0, 1.0),
        (OrbitElements(a=0.2), OrbitElements(a=1.0)),
    )
    print(f"\nequal-mass triple at alpha=0.2: stable = {ma01_stable(triple)}")

    # a 2+2 quadruple decomposes into two triple views, one per binary,
    # each treating the other binary as a point mass
    quad = HierarchySpec(
        Topology.QUAD_2P2, (1.0, 1.0, 1.0, 1.0),
        (OrbitElements(a=0.25), OrbitElements(a=0.25), OrbitElements(a=1.0)),
    )
    print("\n2+2 quadruple, both binaries at alpha=0.25:")
    for k, view in enumerate(nested_triples(quad)):
        ratio = view.a_out * (1.0 - view.e_out) / view.a_in
        crit = ma01_rp_crit_ratio(view.q_out, view.e_out, view.i_mut)
        print(f"  view {k}: rp/a_in = {ratio:.3f}  critical = {crit:.3f}  "
              f"{'ok' if ratio > crit else 'VIOLATED'}")
    print(f"  conjunction verdict: stable = {ma01_quad_stable(quad)}")

    # TripleView also stands alone for hand-built configurations
    view = TripleView(m_in_total=2.0, m_out=1.0, a_in=0.1, a_out=1.0,
                      e_out=0.0, i_mut=0.0, q_in=1.0, e_in=0.0)
    print(f"\nstandalone view (alpha=0.1, q_out=0.5): "
          f"margin = {1.0 / view.alpha / ma01_rp_crit_ratio(view.q_out, 0.0, 0.0):.2f}x")


if __name__ == "__main__":
    main()
