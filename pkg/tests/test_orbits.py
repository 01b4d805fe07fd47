"""Tests for Keplerian elements, Kepler's equation and system realization."""

import math

import numpy as np
import pytest

from quadstab.orbits import (
    G,
    HierarchySpec,
    OrbitElements,
    Topology,
    elements_to_rel_state,
    kepler_solve,
    mutual_inclination,
    nested_elements,
    orbital_period,
    realize_system,
    rel_state_to_elements,
)

# Frozen by 200-step bisection at 40 decimal digits (tools/gen_kepler_oracle.py).
KEPLER_ORACLE = [
    (1.0, 0.3, 1.2880913132118376974),
    (0.1, 0.9, 0.63084352756315343106),
    (3.0, 0.95, 3.0689499192220492346),
    (6.2, 0.5, 6.1175707397233890663),
]


def angle_dist(x, y):
    d = np.abs(np.mod(x - y + np.pi, 2.0 * np.pi) - np.pi)
    return d


class TestKeplerSolve:
    def test_frozen_oracle_values(self):
        for M, e, E_ref in KEPLER_ORACLE:
            E = kepler_solve(M, e)
            assert abs(E - E_ref) < 1e-12

    def test_residual_bound_over_grid(self):
        M = np.linspace(0.0, 4.0 * np.pi, 2001)
        for e in [0.0, 0.1, 0.5, 0.9, 0.95, 0.999]:
            E = kepler_solve(M, e)
            resid = E - e * np.sin(E) - np.mod(M, 2.0 * np.pi)
            # E is wrapped, so the residual may sit at a 2 pi offset
            resid = np.mod(resid + np.pi, 2.0 * np.pi) - np.pi
            assert np.max(np.abs(resid)) < 1e-12

    def test_scalar_matches_array(self):
        E_arr = kepler_solve(np.array([1.0, 2.0]), 0.7)
        assert kepler_solve(1.0, 0.7) == E_arr[0]
        assert kepler_solve(2.0, 0.7) == E_arr[1]
        assert isinstance(kepler_solve(1.0, 0.7), float)

    def test_circular_is_identity(self):
        M = np.linspace(0.0, 2.0 * np.pi, 100, endpoint=False)
        assert np.allclose(kepler_solve(M, 0.0), M, atol=1e-15)

    def test_rejects_unbound_eccentricity(self):
        with pytest.raises(ValueError):
            kepler_solve(1.0, 1.0)
        with pytest.raises(ValueError):
            kepler_solve(1.0, -0.1)


class TestElementsToState:
    def test_periapsis_state(self):
        # M=0 puts the body at periapsis: r = a(1-e) along x, v along +y
        # with speed sqrt(mu (1+e) / (a (1-e))).
        el = OrbitElements(a=1.0, e=0.5)
        r, v = elements_to_rel_state(el, 1.0)
        assert np.allclose(r, [0.5, 0.0, 0.0], atol=1e-14)
        assert np.allclose(v, [0.0, 2.0 * math.pi * math.sqrt(3.0), 0.0], rtol=1e-14)

    def test_apoapsis_state(self):
        el = OrbitElements(a=2.0, e=0.25, M=math.pi)
        r, v = elements_to_rel_state(el, 4.0)
        assert np.allclose(r, [-2.5, 0.0, 0.0], atol=1e-12)
        v_apo = math.sqrt(G * 4.0 * (1.0 - 0.25) / (2.0 * 1.25))
        assert np.allclose(v, [0.0, -v_apo, 0.0], atol=1e-12)

    def test_vis_viva_and_momentum_invariants(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            el = _random_orbit(rng)
            m = rng.uniform(0.5, 20.0)
            r, v = elements_to_rel_state(el, m)
            mu = G * m
            rmag = np.linalg.norm(r)
            assert math.isclose(v @ v, mu * (2.0 / rmag - 1.0 / el.a), rel_tol=1e-12)
            h = np.linalg.norm(np.cross(r, v))
            assert math.isclose(h, math.sqrt(mu * el.a * (1.0 - el.e**2)), rel_tol=1e-12)

    def test_rejects_invalid(self):
        with pytest.raises(ValueError):
            elements_to_rel_state(OrbitElements(a=1.0, e=1.2), 1.0)
        with pytest.raises(ValueError):
            elements_to_rel_state(OrbitElements(a=-1.0), 1.0)


def _random_orbit(rng, e_max=0.95):
    return OrbitElements(
        a=rng.uniform(0.05, 50.0),
        e=rng.uniform(0.0, e_max),
        i=math.acos(rng.uniform(-1.0, 1.0)),
        Omega=rng.uniform(0.0, 2.0 * math.pi),
        omega=rng.uniform(0.0, 2.0 * math.pi),
        M=rng.uniform(0.0, 2.0 * math.pi),
    )


class TestRoundTrip:
    def test_elements_survive_state_round_trip(self):
        rng = np.random.default_rng(42)
        for _ in range(10_000):
            el = _random_orbit(rng)
            m = rng.uniform(0.5, 20.0)
            r, v = elements_to_rel_state(el, m)
            back = rel_state_to_elements(r, v, m)
            assert math.isclose(back.a, el.a, rel_tol=1e-10)
            assert abs(back.e - el.e) < 1e-10
            assert abs(back.i - el.i) < 1e-10
            if el.e > 1e-8 and math.sin(el.i) > 1e-8:
                assert angle_dist(back.Omega, el.Omega) < 1e-9
                assert angle_dist(back.omega, el.omega) < 1e-9
                assert angle_dist(back.M, el.M) < 1e-9

    def test_state_survives_element_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(2_000):
            el = _random_orbit(rng)
            m = rng.uniform(0.5, 20.0)
            r, v = elements_to_rel_state(el, m)
            back = rel_state_to_elements(r, v, m)
            r2, v2 = elements_to_rel_state(back, m)
            assert np.allclose(r2, r, rtol=1e-10, atol=1e-10 * np.linalg.norm(r))
            assert np.allclose(v2, v, rtol=1e-10, atol=1e-10 * np.linalg.norm(v))

    def test_circular_orbit_round_trips_shape(self):
        el = OrbitElements(a=3.0, e=0.0, i=0.4, Omega=1.0, omega=0.0, M=2.0)
        r, v = elements_to_rel_state(el, 2.0)
        back = rel_state_to_elements(r, v, 2.0)
        assert math.isclose(back.a, 3.0, rel_tol=1e-12)
        assert back.e < 1e-12
        assert math.isclose(back.i, 0.4, rel_tol=1e-10)

    def test_unbound_state_flagged_not_raised(self):
        # radial speed well above escape
        v_esc = math.sqrt(2.0 * G * 1.0 / 1.0)
        el = rel_state_to_elements([1.0, 0.0, 0.0], [2.0 * v_esc, 0.0, 0.0], 1.0)
        assert not el.bound
        assert el.e >= 1.0
        assert el.a <= 0.0

    def test_zero_separation_raises(self):
        with pytest.raises(ValueError):
            rel_state_to_elements([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0)


class TestMutualInclination:
    def test_identical_planes_zero(self):
        assert mutual_inclination(0.3, 1.2, 0.3, 1.2) < 1e-15

    def test_perpendicular_polar_orbits(self):
        # two polar orbits with nodes 90 degrees apart are perpendicular
        im = mutual_inclination(math.pi / 2, 0.0, math.pi / 2, math.pi / 2)
        assert math.isclose(im, math.pi / 2, rel_tol=1e-12)

    def test_matches_angular_momentum_vectors(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            e1, e2 = _random_orbit(rng), _random_orbit(rng)
            r1, v1 = elements_to_rel_state(e1, 1.0)
            r2, v2 = elements_to_rel_state(e2, 1.0)
            h1, h2 = np.cross(r1, v1), np.cross(r2, v2)
            cosang = h1 @ h2 / (np.linalg.norm(h1) * np.linalg.norm(h2))
            direct = math.acos(min(1.0, max(-1.0, cosang)))
            im = mutual_inclination(e1.i, e1.Omega, e2.i, e2.Omega)
            assert abs(im - direct) < 1e-9

    def test_vectorized(self):
        i1 = np.array([0.1, math.pi / 2])
        out = mutual_inclination(i1, 0.0, 0.1, 0.0)
        assert out.shape == (2,)
        assert out[0] < 1e-15


class TestPeriod:
    def test_earth_like_year(self):
        assert math.isclose(orbital_period(1.0, 1.0), 1.0, rel_tol=1e-14)

    def test_kepler_third_law_scaling(self):
        assert math.isclose(
            orbital_period(4.0, 2.0), orbital_period(1.0, 2.0) * 8.0, rel_tol=1e-14
        )


def _random_spec(rng, topology):
    def orb(a, e_max=0.9):
        return OrbitElements(
            a=a,
            e=rng.uniform(0.0, e_max),
            i=math.acos(rng.uniform(-1.0, 1.0)),
            Omega=rng.uniform(0.0, 2.0 * math.pi),
            omega=rng.uniform(0.0, 2.0 * math.pi),
            M=rng.uniform(0.0, 2.0 * math.pi),
        )

    n = 3 if topology is Topology.TRIPLE else 4
    masses = rng.uniform(1.0, 10.0, n)
    if topology is Topology.TRIPLE:
        orbits = (orb(rng.uniform(0.01, 0.3)), orb(1.0))
    elif topology is Topology.QUAD_2P2:
        orbits = (orb(rng.uniform(0.01, 0.3)), orb(rng.uniform(0.01, 0.3)), orb(1.0))
    else:
        a_mid = rng.uniform(0.05, 0.3)
        orbits = (orb(rng.uniform(0.1, 0.5) * a_mid), orb(a_mid), orb(1.0))
    return HierarchySpec(topology, tuple(masses), orbits)


class TestRealization:
    @pytest.mark.parametrize(
        "topology", [Topology.TRIPLE, Topology.QUAD_2P2, Topology.QUAD_3P1]
    )
    def test_barycentric_frame(self, topology):
        rng = np.random.default_rng(5)
        for _ in range(200):
            spec = _random_spec(rng, topology)
            sys = realize_system(spec)
            scale = np.abs(sys.positions).max()
            assert np.allclose(sys.masses @ sys.positions, 0.0, atol=1e-12 * scale)
            vscale = np.abs(sys.velocities).max()
            assert np.allclose(sys.masses @ sys.velocities, 0.0, atol=1e-12 * vscale)

    def test_triple_coplanar_geometry(self):
        # equal-mass coplanar triple at periapsis: splits sit at known x offsets
        spec = HierarchySpec(
            Topology.TRIPLE,
            (1.0, 1.0, 2.0),
            (OrbitElements(a=0.1, e=0.5), OrbitElements(a=1.0)),
        )
        sys = realize_system(spec)
        # outer orbit: inner pair (mass 2) at -0.5, tertiary (mass 2) at +0.5
        # inner orbit: periapsis separation 0.05 split evenly
        assert np.allclose(sys.positions[2], [0.5, 0.0, 0.0], atol=1e-14)
        assert np.allclose(sys.positions[0], [-0.5 - 0.025, 0.0, 0.0], atol=1e-14)
        assert np.allclose(sys.positions[1], [-0.5 + 0.025, 0.0, 0.0], atol=1e-14)

    @pytest.mark.parametrize(
        "topology", [Topology.TRIPLE, Topology.QUAD_2P2, Topology.QUAD_3P1]
    )
    def test_nested_elements_inverts_realization(self, topology):
        rng = np.random.default_rng(13)
        for _ in range(1_000):
            spec = _random_spec(rng, topology)
            got = nested_elements(realize_system(spec), topology)
            for el_in, el_out in zip(spec.orbits, got):
                assert math.isclose(el_out.a, el_in.a, rel_tol=1e-10)
                assert abs(el_out.e - el_in.e) < 1e-10
                assert abs(el_out.i - el_in.i) < 1e-10

    def test_validation_rejects_bad_specs(self):
        ok_in, ok_out = OrbitElements(a=0.1), OrbitElements(a=1.0)
        with pytest.raises(ValueError):
            realize_system(
                HierarchySpec(Topology.TRIPLE, (1.0, 1.0), (ok_in, ok_out))
            )
        with pytest.raises(ValueError):
            realize_system(
                HierarchySpec(Topology.TRIPLE, (1.0, -1.0, 1.0), (ok_in, ok_out))
            )
        with pytest.raises(ValueError):  # inner wider than outer
            realize_system(
                HierarchySpec(
                    Topology.TRIPLE, (1.0, 1.0, 1.0), (OrbitElements(a=2.0), ok_out)
                )
            )
        with pytest.raises(ValueError):  # 3+1 in wider than mid
            realize_system(
                HierarchySpec(
                    Topology.QUAD_3P1,
                    (1.0, 1.0, 1.0, 1.0),
                    (OrbitElements(a=0.5), OrbitElements(a=0.2), ok_out),
                )
            )
        with pytest.raises(ValueError):  # unbound element
            realize_system(
                HierarchySpec(
                    Topology.TRIPLE,
                    (1.0, 1.0, 1.0),
                    (OrbitElements(a=0.1, e=1.5), ok_out),
                )
            )
