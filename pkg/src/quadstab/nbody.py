"""Direct N-body integration with fixed-grid output and drift diagnostics.

Wraps the Gauss-Radau kernel in radau.py: `integrate` produces snapshots
on a uniform time grid under a wall-clock budget, and StreamingIntegrator
exposes the same stepping one grid interval at a time for callers that
interleave several integrations (the ghost-divergence driver does).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import radau
from .orbits import G, CartesianSystem

# hard per-interval guard against runaway step counts when no wall cap is set
_MAX_STEPS_PER_INTERVAL = 50_000_000

# kernel steps between deadline checks; ~2-3 s of work on one core
_CHUNK_STEPS = 1_000_000


class NumericalFailure(RuntimeError):
    """Integration produced a non-finite or stalled state."""


class WallExpired(RuntimeError):
    """The wall-clock budget ran out; the state is valid but short of span."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Accuracy and output settings for one integration.

    rel_tolerance is the dimensionless step-error target of the adaptive
    scheme (error per step in the highest polynomial term relative to
    the acceleration scale); 1e-9 holds relative energy drift well below
    1e-8 over hundreds of orbits for hierarchies without close passages.
    """

    rel_tolerance: float = 1e-9
    output_samples_per_outer_orbit: int = 100
    max_wall_seconds: float = 60.0
    softening: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.rel_tolerance <= 1e-6:
            raise ValueError(
                f"rel_tolerance must be in (0, 1e-6], got {self.rel_tolerance}"
            )
        if self.output_samples_per_outer_orbit < 10:
            raise ValueError("need at least 10 output samples per outer orbit")
        if self.max_wall_seconds < 0.0 or self.softening < 0.0:
            raise ValueError("max_wall_seconds and softening must be >= 0")


@dataclass
class Trajectory:
    """Snapshots of one integration on its uniform output grid.

    completed is False when the wall-clock budget ran out first; the
    arrays then hold only the grid points actually reached.
    """

    times: np.ndarray
    states: list
    energy_drift: np.ndarray
    completed: bool
    wall_time: float


def total_energy(sys: CartesianSystem) -> float:
    """Kinetic plus pairwise Newtonian potential energy [Msun AU^2 yr^-2]."""
    kin = 0.5 * float(sys.masses @ np.einsum("ij,ij->i", sys.velocities, sys.velocities))
    pot = 0.0
    for i in range(sys.n):
        for j in range(i + 1, sys.n):
            r = float(np.linalg.norm(sys.positions[j] - sys.positions[i]))
            if r == 0.0:
                raise ValueError(f"singular potential: bodies {i} and {j} coincide")
            pot -= G * sys.masses[i] * sys.masses[j] / r
    return kin + pot


def angular_momentum(sys: CartesianSystem) -> np.ndarray:
    """Total angular momentum vector sum m_i r_i x v_i."""
    return np.einsum(
        "i,ij->j", sys.masses, np.cross(sys.positions, sys.velocities)
    )


class StreamingIntegrator:
    """One system advanced interval by interval with persistent kernel state.

    The acceleration-polynomial arrays and the adaptive step carry over
    between calls, so a sequence of advance_by calls is equivalent to one
    long integration sampled at the interval boundaries.
    """

    def __init__(self, sys: CartesianSystem, cfg: IntegratorConfig, dt_init: float | None = None):
        if sys.n < 2:
            raise ValueError("need at least 2 bodies")
        self.masses = np.ascontiguousarray(sys.masses)
        self.x = np.ascontiguousarray(sys.positions).copy()
        self.v = np.ascontiguousarray(sys.velocities).copy()
        self.cfg = cfg
        self.soft2 = cfg.softening**2
        self.b = np.zeros((7, sys.n, 3))
        self.e = np.zeros((7, sys.n, 3))
        self.dt = (
            float(dt_init)
            if dt_init is not None
            else radau.initial_step_guess(self.masses, self.x, self.soft2)
        )
        self.t = 0.0
        self.steps = 0
        self.deadline = None  # absolute perf_counter time, or None for no cap

    def advance_by(self, span: float):
        """Advance exactly span years; raises NumericalFailure on breakdown.

        Work is done in bounded-step chunks so a wall deadline (absolute
        perf_counter seconds in self.deadline, shared across systems by
        the caller) is honored within a few seconds even when one span
        needs millions of steps; expiry raises WallExpired.
        """
        remaining = span
        steps_total = 0
        while True:
            self.dt, steps, status, t_done = radau.advance(
                self.masses,
                self.x,
                self.v,
                self.dt,
                remaining,
                self.cfg.rel_tolerance,
                self.soft2,
                self.b,
                self.e,
                _CHUNK_STEPS,
            )
            steps_total += steps
            self.steps += steps
            self.t += t_done
            remaining -= t_done
            if status == radau.NONFINITE:
                raise NumericalFailure(f"non-finite state at t={self.t:.6g} yr")
            if status == radau.STALLED:
                raise NumericalFailure(f"step size collapsed at t={self.t:.6g} yr")
            if status == radau.OK:
                return
            # chunk boundary
            if steps_total >= _MAX_STEPS_PER_INTERVAL:
                raise NumericalFailure(f"step limit exceeded at t={self.t:.6g} yr")
            if self.deadline is not None and time.perf_counter() >= self.deadline:
                raise WallExpired(f"wall budget exhausted at t={self.t:.6g} yr")

    def snapshot(self) -> CartesianSystem:
        return CartesianSystem(self.masses, self.x.copy(), self.v.copy())


def integrate(
    sys: CartesianSystem,
    t_end: float,
    cfg: IntegratorConfig,
    outer_period: float | None = None,
    dt_init: float | None = None,
) -> Trajectory:
    """Integrate to t_end with snapshots on a uniform grid.

    The grid density is cfg.output_samples_per_outer_orbit per
    outer_period; when outer_period is omitted the whole span counts as
    one orbit. Snapshots include the initial state at t=0. If the wall
    budget expires the trajectory is returned truncated with
    completed=False instead of raising.

    Raises
    ------
    NumericalFailure
        On non-finite state or step-size collapse (close encounter with
        zero softening driving dt to zero).
    """
    if t_end <= 0.0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    period = t_end if outer_period is None else float(outer_period)
    n_intervals = max(1, round(cfg.output_samples_per_outer_orbit * t_end / period))
    times = np.linspace(0.0, t_end, n_intervals + 1)

    start = time.perf_counter()
    stream = StreamingIntegrator(sys, cfg, dt_init=dt_init)
    stream.deadline = start + cfg.max_wall_seconds
    states = [stream.snapshot()]
    e0 = total_energy(states[0])
    drift = [0.0]
    completed = True
    for k in range(n_intervals):
        if time.perf_counter() >= stream.deadline:
            completed = False
            break
        try:
            stream.advance_by(times[k + 1] - times[k])
        except WallExpired:
            completed = False
            break
        snap = stream.snapshot()
        states.append(snap)
        drift.append(abs((total_energy(snap) - e0) / e0))
    wall = time.perf_counter() - start
    return Trajectory(
        times=times[: len(states)],
        states=states,
        energy_drift=np.array(drift),
        completed=completed,
        wall_time=wall,
    )
