"""Tests for ghost construction, divergence labeling, and unbound detection."""

import math

import numpy as np
import pytest

from quadstab import stability
from quadstab.nbody import IntegratorConfig, StreamingIntegrator
from quadstab.orbits import (
    G,
    ORBIT_TREES,
    CartesianSystem,
    HierarchySpec,
    OrbitElements,
    Topology,
    realize_system,
)
from quadstab.sampling import process_candidate
from quadstab.stability import (
    DELTA_THRESHOLD,
    GHOST_DA,
    Boundedness,
    StabilityLabel,
    _inner_a_series,
    _split_unbound,
    boundedness_check,
    classify_stability,
    delta,
    ghost_orbit_index,
    is_unbound,
    make_ghost,
)


def _orbit(a, e=0.0, i=0.0, Omega=0.0, omega=0.0, M=0.0):
    return OrbitElements(a=a, e=e, i=i, Omega=Omega, omega=omega, M=M)


def _triple(a_in=0.05, e_in=0.0, e_out=0.0, masses=(1.0, 1.0, 1.0)):
    return HierarchySpec(
        Topology.TRIPLE, masses, (_orbit(a_in, e=e_in), _orbit(1.0, e=e_out, M=0.3))
    )


STABLE_2P2 = HierarchySpec(
    Topology.QUAD_2P2,
    (1.0, 1.0, 1.0, 1.0),
    (_orbit(0.01), _orbit(0.01, M=1.0), _orbit(1.0, M=2.0)),
)

PACKED_2P2 = HierarchySpec(
    Topology.QUAD_2P2,
    (1.0, 1.0, 1.0, 1.0),
    (_orbit(0.6), _orbit(0.05, M=1.0), _orbit(1.0, e=0.5, M=2.0)),
)


class TestMakeGhost:
    def test_triple_offsets_inner(self):
        spec = _triple(a_in=0.2)
        ghost = make_ghost(spec)
        assert ghost.orbits[0].a == 0.2 + GHOST_DA
        assert ghost.orbits[1] == spec.orbits[1]
        assert ghost.masses == spec.masses
        # untouched original
        assert spec.orbits[0].a == 0.2

    def test_3p1_offsets_innermost(self):
        spec = HierarchySpec(
            Topology.QUAD_3P1,
            (1.0, 1.0, 1.0, 1.0),
            (_orbit(0.02), _orbit(0.2), _orbit(1.0)),
        )
        ghost = make_ghost(spec)
        assert ghost.orbits[0].a == 0.02 + GHOST_DA
        assert ghost.orbits[1:] == spec.orbits[1:]

    def test_2p2_smaller_total_mass_pair(self):
        spec = HierarchySpec(
            Topology.QUAD_2P2,
            (2.0, 2.0, 1.0, 1.0),
            (_orbit(0.02), _orbit(0.02), _orbit(1.0)),
        )
        assert ghost_orbit_index(spec) == 1
        ghost = make_ghost(spec)
        assert ghost.orbits[1].a == 0.02 + GHOST_DA
        assert ghost.orbits[0] == spec.orbits[0]

    def test_2p2_tie_breaks_to_first(self):
        assert ghost_orbit_index(STABLE_2P2) == 0
        assert make_ghost(STABLE_2P2).orbits[0].a == 0.01 + GHOST_DA

    def test_binding_energy_rule_can_differ(self):
        # pair 1 is heavier but wider: smaller binding energy magnitude
        spec = HierarchySpec(
            Topology.QUAD_2P2,
            (2.0, 2.0, 1.0, 1.0),
            (_orbit(0.1), _orbit(0.01), _orbit(1.0)),
        )
        assert ghost_orbit_index(spec, "mass") == 1
        assert ghost_orbit_index(spec, "binding_energy") == 0

    def test_unknown_rule_rejected(self):
        with pytest.raises(ValueError):
            ghost_orbit_index(STABLE_2P2, "entropy")


class TestDelta:
    def test_arithmetic(self):
        assert delta(1.0, 1.0) == 0.0
        assert math.isclose(delta(1.0, 0.99), 0.01, rel_tol=1e-12)
        assert math.isclose(delta(0.2, 0.2 + GHOST_DA), -5e-6, rel_tol=1e-9)

    def test_vectorized(self):
        a = np.array([1.0, 2.0, 4.0])
        out = delta(a, a * 0.5)
        assert np.allclose(out, 0.5)

    def test_unbound_frame_rejected(self):
        with pytest.raises(ValueError):
            delta(-1.0, 1.0)
        with pytest.raises(ValueError):
            delta(np.array([1.0, 0.0]), np.array([1.0, 1.0]))


class TestInitialOffset:
    @pytest.mark.parametrize(
        "spec",
        [
            _triple(a_in=0.2),
            STABLE_2P2,
            HierarchySpec(
                Topology.QUAD_2P2,
                (2.0, 2.0, 1.0, 1.0),
                (_orbit(0.03), _orbit(0.02), _orbit(1.0)),
            ),
            HierarchySpec(
                Topology.QUAD_3P1,
                (2.0, 1.0, 1.0, 1.0),
                (_orbit(0.02), _orbit(0.2), _orbit(1.0)),
            ),
        ],
    )
    def test_t0_offset_is_exact(self, spec):
        idx = ghost_orbit_index(spec)
        node = ORBIT_TREES[spec.topology][idx]
        orig = realize_system(spec)
        ghost = realize_system(make_ghost(spec))
        masses = orig.masses
        a0 = _inner_a_series(masses, orig.positions[None], orig.velocities[None], node)[0]
        a0g = _inner_a_series(masses, ghost.positions[None], ghost.velocities[None], node)[0]
        a_in = spec.orbits[idx].a
        assert abs(abs(delta(a0, a0g)) - GHOST_DA / a_in) < 1e-9


class TestClassify:
    @pytest.mark.slow
    def test_wide_coplanar_2p2_is_stable(self):
        rec = classify_stability(STABLE_2P2)
        assert rec.label is StabilityLabel.STABLE
        assert rec.n_outer_completed == 100
        assert rec.t_trigger is None
        assert rec.max_abs_delta <= DELTA_THRESHOLD
        assert rec.energy_drift_final < 1e-8

    def test_packed_2p2_is_unstable(self):
        rec = classify_stability(PACKED_2P2)
        assert rec.unstable
        assert rec.t_trigger is not None and rec.t_trigger > 0.0

    def test_zero_wall_budget_times_out(self):
        cfg = IntegratorConfig(max_wall_seconds=0.0)
        rec = classify_stability(STABLE_2P2, cfg=cfg)
        assert rec.label is StabilityLabel.TIMEOUT
        assert rec.n_outer_completed == 0
        assert rec.error is None

    def test_deterministic(self):
        first = classify_stability(PACKED_2P2)
        second = classify_stability(PACKED_2P2)
        assert first == second

    def test_chaotic_record_exceeds_threshold(self):
        # deterministic sampled candidate known to diverge without escaping
        out, row = process_candidate(
            Topology.TRIPLE, 20260814, 0, IntegratorConfig()
        )
        assert out == "kept"
        rec = row.record
        assert rec.label is StabilityLabel.UNSTABLE_CHAOTIC
        assert rec.max_abs_delta > DELTA_THRESHOLD
        assert rec.t_trigger is not None

    def test_threshold_monotonicity(self, monkeypatch):
        stable_spec = _triple(a_in=0.05)
        base = classify_stability(stable_spec)
        assert base.label is StabilityLabel.STABLE

        # tightening the threshold can only push labels toward chaotic
        monkeypatch.setattr(stability, "DELTA_THRESHOLD", 1e-9)
        tight = classify_stability(stable_spec)
        assert tight.label is StabilityLabel.UNSTABLE_CHAOTIC

        # loosening it reclassifies a chaotic system as stable
        monkeypatch.setattr(stability, "DELTA_THRESHOLD", 1e9)
        rng_spec_rec = classify_stability(stable_spec)
        assert rng_spec_rec.label is StabilityLabel.STABLE


class TestIsUnbound:
    @pytest.mark.parametrize(
        "spec",
        [
            _triple(),
            STABLE_2P2,
            HierarchySpec(
                Topology.QUAD_3P1,
                (1.5, 1.0, 1.0, 1.0),
                (_orbit(0.02), _orbit(0.2), _orbit(1.0)),
            ),
        ],
    )
    def test_initial_snapshot_is_bound(self, spec):
        assert not is_unbound(realize_system(spec), spec)

    def _escaping_triple(self, speed_factor):
        masses = np.array([1.0, 1.0, 1.0])
        w_in = math.sqrt(G * 2.0 / 0.1)
        x = np.array([[-0.05, 0, 0], [0.05, 0, 0], [30.0, 0, 0]])
        v = np.array([[0, -w_in / 2, 0], [0, w_in / 2, 0], [0.0, 0, 0]])
        v[2, 0] = speed_factor * math.sqrt(G * 3.0 / 30.0)
        return CartesianSystem(masses, x, v)

    def test_far_receding_energetic_body_escapes(self):
        snap = self._escaping_triple(2.0)  # twice circular: E > 0
        assert is_unbound(snap, _triple())

    def test_far_receding_slow_body_still_bound(self):
        snap = self._escaping_triple(0.2)  # E < 0: long excursion only
        assert not is_unbound(snap, _triple())

    def test_two_body_escape_oracle(self):
        masses = np.array([1.0, 1.0])
        x = np.array([[0.0, 0, 0], [30.0, 0, 0]])
        v_circ = math.sqrt(G * 2.0 / 30.0)
        split = ((0,), (1,))
        v = np.array([[0.0, 0, 0], [2.0 * v_circ, 0, 0]])
        assert _split_unbound(masses, x, v, split, dist_limit=20.0)
        v_slow = np.array([[0.0, 0, 0], [0.5 * v_circ, 0, 0]])
        assert not _split_unbound(masses, x, v_slow, split, dist_limit=20.0)

    def _pair_pair_snapshot(self, bound_pairs):
        masses = np.ones(4)
        sep = 0.05
        w = math.sqrt(G * 2.0 / sep) * (1.0 if bound_pairs else 4.0)
        x = np.array(
            [[-sep / 2, 0, 0], [sep / 2, 0, 0], [25 - sep / 2, 0, 0], [25 + sep / 2, 0, 0]]
        )
        v = np.array([[0, -w / 2, 0], [0, w / 2, 0], [0, -w / 2, 0], [0, w / 2, 0]])
        v[2:, 0] += 2.0 * math.sqrt(G * 4.0 / 25.0)  # fragment escape speed
        return masses, x, v

    def test_escaping_bound_subbinary(self):
        masses, x, v = self._pair_pair_snapshot(bound_pairs=True)
        assert _split_unbound(masses, x, v, ((0, 1), (2, 3)), dist_limit=20.0)

    def test_pair_pair_split_needs_a_bound_side(self):
        masses, x, v = self._pair_pair_snapshot(bound_pairs=False)
        assert not _split_unbound(masses, x, v, ((0, 1), (2, 3)), dist_limit=20.0)


class TestBoundednessCheck:
    def test_hierarchical_system_stays_bound(self):
        assert boundedness_check(_triple(a_in=0.02), n_outer=20) is Boundedness.BOUND

    def test_packed_system_escapes(self):
        assert boundedness_check(PACKED_2P2, n_outer=100) is Boundedness.UNBOUND

    def test_zero_wall_budget(self):
        cfg = IntegratorConfig(max_wall_seconds=0.0)
        assert boundedness_check(_triple(), cfg=cfg) is Boundedness.TIMEOUT
