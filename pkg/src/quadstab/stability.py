"""Ghost-orbit stability labeling of hierarchical systems.

A system is integrated twice: once as specified and once as a "ghost"
copy whose designated inner semi-major axis is offset by +1e-6 AU. The
relative divergence of the designated inner orbit,

    delta(t) = (a_orig(t) - a_ghost(t)) / a_orig(t),

is monitored on a shared output grid of 100 samples per outer orbit;
chaotic systems amplify the offset exponentially. Labels over the run:

    UnstableUnbound  a body or sub-binary escapes the original system
    UnstableChaotic  |delta| exceeds 1e-2 on the grid (and nothing escapes)
    Stable           neither happens within the requested outer orbits
    Timeout          wall-clock budget exhausted or integration failed

Unbound takes precedence over chaotic when both occur before t_end, so
after a delta crossing the original system is still followed (alone) to
the end of the run; the ghost is abandoned at the crossing.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .nbody import (
    IntegratorConfig,
    NumericalFailure,
    StreamingIntegrator,
    WallExpired,
    total_energy,
)
from .orbits import (
    G,
    ORBIT_TREES,
    CartesianSystem,
    HierarchySpec,
    Topology,
    realize_system,
)

GHOST_DA = 1e-6  # AU added to the designated inner semi-major axis
DELTA_THRESHOLD = 1e-2
UNBOUND_DISTANCE_FACTOR = 20.0  # escape declared beyond this many a_out


class StabilityLabel(enum.Enum):
    STABLE = "Stable"
    UNSTABLE_UNBOUND = "UnstableUnbound"
    UNSTABLE_CHAOTIC = "UnstableChaotic"
    TIMEOUT = "Timeout"


class Boundedness(enum.Enum):
    BOUND = "Bound"
    UNBOUND = "Unbound"
    TIMEOUT = "Timeout"


@dataclass(frozen=True)
class StabilityRecord:
    """Outcome of one ghost-divergence run."""

    label: StabilityLabel
    t_trigger: float | None  # yr of first unbound flag or delta crossing
    max_abs_delta: float
    n_outer_completed: int
    energy_drift_final: float
    error: str | None = None  # set when Timeout came from integrator failure

    @property
    def unstable(self) -> bool:
        return self.label in (
            StabilityLabel.UNSTABLE_UNBOUND,
            StabilityLabel.UNSTABLE_CHAOTIC,
        )


def ghost_orbit_index(spec: HierarchySpec, pick: str = "mass") -> int:
    """Index of the orbit whose a the ghost offsets.

    Triples and 3+1 quadruples perturb the innermost binary. For 2+2
    quadruples the designated binary is the one with the smaller total
    mass (pick="mass", ties to the first) or, as an alternative rule
    left switchable on purpose, the one with the smaller binding energy
    magnitude (pick="binding_energy").
    """
    if spec.topology is not Topology.QUAD_2P2:
        return 0
    m1, m2, m3, m4 = spec.masses
    if pick == "mass":
        return 1 if m3 + m4 < m1 + m2 else 0
    if pick == "binding_energy":
        bind1 = G * m1 * m2 / (2.0 * spec.orbits[0].a)
        bind2 = G * m3 * m4 / (2.0 * spec.orbits[1].a)
        return 1 if bind2 < bind1 else 0
    raise ValueError(f"unknown ghost pick rule: {pick!r}")


def make_ghost(spec: HierarchySpec, pick: str = "mass") -> HierarchySpec:
    """Copy of spec with the designated inner a increased by exactly 1e-6 AU."""
    idx = ghost_orbit_index(spec, pick)
    orbits = list(spec.orbits)
    orbits[idx] = replace(orbits[idx], a=orbits[idx].a + GHOST_DA)
    return HierarchySpec(spec.topology, spec.masses, tuple(orbits))


def delta(a_orig, a_ghost):
    """Relative semi-major-axis divergence (a_orig - a_ghost) / a_orig.

    a_orig must be positive (bound osculating frame); callers skip
    frames where the designated orbit is transiently unbound.
    """
    a_orig = np.asarray(a_orig, dtype=np.float64)
    if np.any(a_orig <= 0.0):
        raise ValueError("delta needs a_orig > 0; skip unbound frames")
    out = (a_orig - np.asarray(a_ghost, dtype=np.float64)) / a_orig
    return float(out) if out.ndim == 0 else out


def _group_series(masses, xs, vs, group):
    """Barycenter position/velocity series of a body group; xs is (S, N, 3)."""
    idx = list(group)
    m = masses[idx]
    mtot = m.sum()
    return (
        np.einsum("i,sij->sj", m, xs[:, idx]) / mtot,
        np.einsum("i,sij->sj", m, vs[:, idx]) / mtot,
        mtot,
    )


def _inner_a_series(masses, xs, vs, tree_node):
    """Osculating a of one orbit node per sample, from the energy integral.

    Negative or non-finite values mark transiently unbound frames.
    """
    ra, va, ma = _group_series(masses, xs, vs, tree_node[0])
    rb, vb, mb = _group_series(masses, xs, vs, tree_node[1])
    d = rb - ra
    w = vb - va
    r = np.linalg.norm(d, axis=1)
    eps = 0.5 * np.einsum("sj,sj->s", w, w) - G * (ma + mb) / r
    with np.errstate(divide="ignore"):
        return np.where(eps == 0.0, np.inf, -G * (ma + mb) / (2.0 * eps))


_SPLITS = {
    3: [((0,), (1, 2)), ((1,), (0, 2)), ((2,), (0, 1))],
    4: [((i,), tuple(j for j in range(4) if j != i)) for i in range(4)]
    + [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))],
}


def _pair_bound(masses, x, v, pair):
    i, j = pair
    d = x[j] - x[i]
    w = v[j] - v[i]
    r = float(np.linalg.norm(d))
    if r == 0.0:
        return True
    return 0.5 * float(w @ w) < G * (masses[i] + masses[j]) / r


def _split_unbound(masses, x, v, split, dist_limit):
    """One candidate decomposition tested for mutual escape.

    Both fragments are treated as points at their barycenters; the pair
    of fragments must have positive relative energy, separation beyond
    dist_limit, and growing separation. Pair-pair splits additionally
    require at least one side to be an internally bound binary (else
    the single-body splits cover the escape).
    """
    ga, gb = split
    if len(ga) == 2 and len(gb) == 2:
        if not (_pair_bound(masses, x, v, ga) or _pair_bound(masses, x, v, gb)):
            return False
    ma = masses[list(ga)].sum()
    mb = masses[list(gb)].sum()
    ra = masses[list(ga)] @ x[list(ga)] / ma
    rb = masses[list(gb)] @ x[list(gb)] / mb
    va = masses[list(ga)] @ v[list(ga)] / ma
    vb = masses[list(gb)] @ v[list(gb)] / mb
    d = rb - ra
    r = float(np.linalg.norm(d))
    if r <= dist_limit:
        return False
    w = vb - va
    if float(d @ w) <= 0.0:  # not receding
        return False
    mu = ma * mb / (ma + mb)
    e_rel = 0.5 * mu * float(w @ w) - G * ma * mb / r
    return e_rel > 0.0


def is_unbound(snapshot: CartesianSystem, spec: HierarchySpec) -> bool:
    """True when some body or bound sub-binary has escaped the rest.

    Escape means positive relative energy of the two-fragment split,
    separation beyond 20 x the initial outer semi-major axis, and
    increasing separation, so long bound excursions do not trigger.
    """
    dist_limit = UNBOUND_DISTANCE_FACTOR * spec.orbit("out").a
    m, x, v = snapshot.masses, snapshot.positions, snapshot.velocities
    return any(_split_unbound(m, x, v, s, dist_limit) for s in _SPLITS[snapshot.n])


def _first_unbound_sample(masses, xs, vs, spec, dist_limit):
    """Index of the first escaping sample in a chunk, or -1.

    A cheap gate (some pairwise distance beyond the limit) selects the
    few samples worth the full split test.
    """
    n = xs.shape[1]
    far = np.zeros(xs.shape[0], dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            d = np.linalg.norm(xs[:, j] - xs[:, i], axis=1)
            far |= d > dist_limit
    for s in np.nonzero(far)[0]:
        if any(
            _split_unbound(masses, xs[s], vs[s], sp, dist_limit)
            for sp in _SPLITS[n]
        ):
            return int(s)
    return -1


def classify_stability(
    spec: HierarchySpec,
    n_outer: int = 100,
    cfg: IntegratorConfig | None = None,
    ghost_pick: str = "mass",
) -> StabilityRecord:
    """Label one system by ghost divergence over n_outer outer orbits.

    Both integrations share a single wall-clock budget
    (cfg.max_wall_seconds); exhausting it yields Timeout, as does an
    integrator breakdown (recorded in the error field). Deterministic
    for fixed spec and cfg, apart from where a Timeout lands.
    """
    if cfg is None:
        cfg = IntegratorConfig()
    spec.validate()
    start = time.perf_counter()

    p_out = spec.outer_period()
    samples = cfg.output_samples_per_outer_orbit
    span = p_out / samples
    idx = ghost_orbit_index(spec, ghost_pick)
    tree_node = ORBIT_TREES[spec.topology][idx]
    dist_limit = UNBOUND_DISTANCE_FACTOR * spec.orbit("out").a

    sys_orig = realize_system(spec)
    sys_ghost = realize_system(make_ghost(spec, ghost_pick))
    masses = sys_orig.masses
    e0 = total_energy(sys_orig)

    orig = StreamingIntegrator(sys_orig, cfg)
    ghost = StreamingIntegrator(sys_ghost, cfg)
    orig.deadline = ghost.deadline = start + cfg.max_wall_seconds

    # the t=0 grid sample: exact initial offset -GHOST_DA / a_in
    a0_orig = _inner_a_series(masses, sys_orig.positions[None], sys_orig.velocities[None], tree_node)[0]
    a0_ghost = _inner_a_series(masses, sys_ghost.positions[None], sys_ghost.velocities[None], tree_node)[0]
    max_abs_delta = abs(delta(a0_orig, a0_ghost))

    t_cross: float | None = None  # first |delta| crossing, ghost abandoned there
    energy_drift = 0.0
    n_done = 0

    xs = np.empty((samples, spec.n_bodies, 3))
    vs = np.empty_like(xs)
    gxs = np.empty_like(xs)
    gvs = np.empty_like(xs)

    def record(label, t_trigger, error=None):
        return StabilityRecord(
            label=label,
            t_trigger=t_trigger,
            max_abs_delta=float(max_abs_delta),
            n_outer_completed=n_done,
            energy_drift_final=float(energy_drift),
            error=error,
        )

    for k in range(n_outer):
        if time.perf_counter() - start >= cfg.max_wall_seconds:
            return record(StabilityLabel.TIMEOUT, None)
        t_chunk0 = k * p_out
        try:
            for s in range(samples):
                orig.advance_by(span)
                xs[s] = orig.x
                vs[s] = orig.v
        except WallExpired:
            return record(StabilityLabel.TIMEOUT, None)
        except NumericalFailure as ex:
            return record(StabilityLabel.TIMEOUT, None, error=str(ex))
        energy_drift = abs((total_energy_arrays(masses, xs[-1], vs[-1]) - e0) / e0)

        s_esc = _first_unbound_sample(masses, xs, vs, spec, dist_limit)
        if s_esc >= 0:
            n_done = k
            return record(
                StabilityLabel.UNSTABLE_UNBOUND, t_chunk0 + (s_esc + 1) * span
            )

        if t_cross is None:
            try:
                for s in range(samples):
                    ghost.advance_by(span)
                    gxs[s] = ghost.x
                    gvs[s] = ghost.v
            except WallExpired:
                return record(StabilityLabel.TIMEOUT, None)
            except NumericalFailure as ex:
                return record(StabilityLabel.TIMEOUT, None, error=str(ex))
            a_orig = _inner_a_series(masses, xs, vs, tree_node)
            a_ghost = _inner_a_series(masses, gxs, gvs, tree_node)
            valid = np.isfinite(a_orig) & (a_orig > 0.0) & np.isfinite(a_ghost)
            if valid.any():
                # -1 marks skipped (transiently unbound) frames
                d_abs = np.full(samples, -1.0)
                d_abs[valid] = np.abs(delta(a_orig[valid], a_ghost[valid]))
                max_abs_delta = max(max_abs_delta, float(d_abs.max()))
                crossing = np.nonzero(d_abs > DELTA_THRESHOLD)[0]
                if crossing.size:
                    t_cross = t_chunk0 + (int(crossing[0]) + 1) * span

        n_done = k + 1

    if t_cross is not None:
        return record(StabilityLabel.UNSTABLE_CHAOTIC, t_cross)
    return record(StabilityLabel.STABLE, None)


def total_energy_arrays(masses, x, v) -> float:
    """total_energy without the CartesianSystem wrapper."""
    return total_energy(CartesianSystem(masses, x.copy(), v.copy()))


def boundedness_check(
    spec: HierarchySpec,
    n_outer: int = 1000,
    cfg: IntegratorConfig | None = None,
) -> Boundedness:
    """Long-horizon escape audit: no ghost, no delta, just unbound detection.

    The divergence threshold is calibrated to 100-orbit runs and is
    deliberately not applied here.
    """
    if cfg is None:
        cfg = IntegratorConfig()
    spec.validate()
    start = time.perf_counter()
    p_out = spec.outer_period()
    samples = cfg.output_samples_per_outer_orbit
    span = p_out / samples
    dist_limit = UNBOUND_DISTANCE_FACTOR * spec.orbit("out").a

    sys_orig = realize_system(spec)
    stream = StreamingIntegrator(sys_orig, cfg)
    stream.deadline = start + cfg.max_wall_seconds
    xs = np.empty((samples, spec.n_bodies, 3))
    vs = np.empty_like(xs)
    for _ in range(n_outer):
        if time.perf_counter() - start >= cfg.max_wall_seconds:
            return Boundedness.TIMEOUT
        try:
            for s in range(samples):
                stream.advance_by(span)
                xs[s] = stream.x
                vs[s] = stream.v
        except (NumericalFailure, WallExpired):
            return Boundedness.TIMEOUT
        if _first_unbound_sample(sys_orig.masses, xs, vs, spec, dist_limit) >= 0:
            return Boundedness.UNBOUND
    return Boundedness.BOUND
