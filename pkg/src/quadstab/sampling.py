"""Monte Carlo generation and labeling of hierarchical systems.

Sampling distributions:

    masses      log-uniform over one decade, [1, 10] Msun, relabeled so
                m2 <= m1 (and m4 <= m3, m1+m2 >= m3+m4 for 2+2)
    axis ratios uniform on [0.01, 1); the outermost a is fixed to 1 AU
    e           uniform on [0, 0.95] per orbit
    angles      isotropic: cos i uniform on [-1, 1]; node, argument of
                periapsis and mean anomaly uniform on [0, 2 pi)

A draw is rejected wholesale (everything resampled) until every inner
apoapsis lies inside its parent orbit's periapsis. Quadruples that fail
the analytic criterion are thinned (kept with probability 0.3 for 2+2,
0.2 for 3+1) to balance the label classes before the expensive N-body
labeling.

Dataset builds assign each candidate index its own child seed of the
master seed, so results are identical for any worker count and any
resume point; a progress file (JSON lines) caches finished candidates.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .criteria import ma01_quad_stable
from .nbody import IntegratorConfig
from .orbits import HierarchySpec, OrbitElements, Topology, mutual_inclination
from .stability import StabilityLabel, StabilityRecord, classify_stability

ALPHA_FLOOR = 0.01  # lower cutoff on axis ratios; bounds integration cost
E_MAX = 0.95
THINNING_KEEP = {Topology.QUAD_2P2: 0.3, Topology.QUAD_3P1: 0.2}
MAX_SAMPLE_ATTEMPTS = 10_000


class SamplingError(RuntimeError):
    """Hierarchy rejection failed to produce a system."""


def _imut(o1: OrbitElements, o2: OrbitElements) -> float:
    return float(mutual_inclination(o1.i, o1.Omega, o2.i, o2.Omega))


@dataclass(frozen=True)
class QuadParams2p2:
    """Feature view of a 2+2 quadruple plus the full underlying spec."""

    spec: HierarchySpec
    q_in1: float
    q_in2: float
    q_out: float
    alpha_in1_out: float
    alpha_in2_out: float
    e_in1: float
    e_in2: float
    e_out: float
    i_in1_in2: float
    i_in1_out: float
    i_in2_out: float

    FEATURES = (
        "q_in1", "q_in2", "q_out", "alpha_in1_out", "alpha_in2_out",
        "e_in1", "e_in2", "e_out", "i_in1_in2", "i_in1_out", "i_in2_out",
    )

    @classmethod
    def from_spec(cls, spec: HierarchySpec) -> "QuadParams2p2":
        m1, m2, m3, m4 = spec.masses
        b1, b2, bo = spec.orbits
        return cls(
            spec=spec,
            q_in1=m2 / m1,
            q_in2=m4 / m3,
            q_out=(m3 + m4) / (m1 + m2),
            alpha_in1_out=b1.a / bo.a,
            alpha_in2_out=b2.a / bo.a,
            e_in1=b1.e,
            e_in2=b2.e,
            e_out=bo.e,
            i_in1_in2=_imut(b1, b2),
            i_in1_out=_imut(b1, bo),
            i_in2_out=_imut(b2, bo),
        )

    def validate(self):
        m1, m2, m3, m4 = self.spec.masses
        if not (m2 <= m1 and m4 <= m3 and m1 + m2 >= m3 + m4):
            raise ValueError("2+2 mass ordering violated")
        if not (self.q_in1 <= 1 and self.q_in2 <= 1 and self.q_out <= 1):
            raise ValueError("2+2 mass ratios must be <= 1")
        _validate_common(self)
        return self

    def feature_vector(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in self.FEATURES])


@dataclass(frozen=True)
class QuadParams3p1:
    """Feature view of a 3+1 quadruple plus the full underlying spec."""

    spec: HierarchySpec
    q_in: float
    q_mid: float
    q_out: float
    alpha_in_mid: float
    alpha_mid_out: float
    e_in: float
    e_mid: float
    e_out: float
    i_in_mid: float
    i_in_out: float
    i_mid_out: float

    FEATURES = (
        "q_in", "q_mid", "q_out", "alpha_in_mid", "alpha_mid_out",
        "e_in", "e_mid", "e_out", "i_in_mid", "i_in_out", "i_mid_out",
    )

    @classmethod
    def from_spec(cls, spec: HierarchySpec) -> "QuadParams3p1":
        m1, m2, m3, m4 = spec.masses
        bi, bm, bo = spec.orbits
        return cls(
            spec=spec,
            q_in=m2 / m1,
            q_mid=m3 / (m1 + m2),
            q_out=m4 / (m1 + m2 + m3),
            alpha_in_mid=bi.a / bm.a,
            alpha_mid_out=bm.a / bo.a,
            e_in=bi.e,
            e_mid=bm.e,
            e_out=bo.e,
            i_in_mid=_imut(bi, bm),
            i_in_out=_imut(bi, bo),
            i_mid_out=_imut(bm, bo),
        )

    def validate(self):
        m1, m2 = self.spec.masses[:2]
        if m2 > m1:
            raise ValueError("3+1 needs m2 <= m1")
        if self.q_mid <= 0 or self.q_out <= 0:
            raise ValueError("mass ratios must be positive")
        _validate_common(self)
        return self

    def feature_vector(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in self.FEATURES])


@dataclass(frozen=True)
class TripleParams:
    """Feature view of a hierarchical triple plus the underlying spec."""

    spec: HierarchySpec
    q_in: float
    q_out: float
    alpha: float
    e_in: float
    e_out: float
    i_mut: float

    FEATURES = ("q_in", "q_out", "alpha", "e_in", "e_out", "i_mut")

    @classmethod
    def from_spec(cls, spec: HierarchySpec) -> "TripleParams":
        m1, m2, m3 = spec.masses
        bi, bo = spec.orbits
        return cls(
            spec=spec,
            q_in=m2 / m1,
            q_out=m3 / (m1 + m2),
            alpha=bi.a / bo.a,
            e_in=bi.e,
            e_out=bo.e,
            i_mut=_imut(bi, bo),
        )

    def validate(self):
        m1, m2 = self.spec.masses[:2]
        if m2 > m1:
            raise ValueError("triple needs m2 <= m1")
        _validate_common(self)
        return self

    def feature_vector(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in self.FEATURES])


def _validate_common(p):
    for name in p.FEATURES:
        v = getattr(p, name)
        if not math.isfinite(v):
            raise ValueError(f"non-finite feature {name}")
        if name.startswith("alpha") and not 0.0 < v < 1.0:
            raise ValueError(f"{name} outside (0, 1): {v}")
        if name.startswith("e_") and not 0.0 <= v <= E_MAX:
            raise ValueError(f"{name} outside [0, {E_MAX}]: {v}")
        if name.startswith("i_") and not 0.0 <= v <= math.pi:
            raise ValueError(f"{name} outside [0, pi]: {v}")
    p.spec.validate()


PARAM_TYPES = {
    Topology.TRIPLE: TripleParams,
    Topology.QUAD_2P2: QuadParams2p2,
    Topology.QUAD_3P1: QuadParams3p1,
}


def _apo_inside_peri(inner: OrbitElements, outer: OrbitElements) -> bool:
    return inner.a * (1.0 + inner.e) < outer.a * (1.0 - outer.e)


def sample_system(topology: Topology, rng: np.random.Generator):
    """Draw one hierarchy-respecting system; whole draw rejected otherwise.

    The order of rng consumption is part of the reproducibility
    contract: masses, axis ratios, then per-orbit e, cos i, node,
    argument of periapsis, mean anomaly.
    """
    n_orbits = 2 if topology is Topology.TRIPLE else 3
    n_bodies = 3 if topology is Topology.TRIPLE else 4
    for _ in range(MAX_SAMPLE_ATTEMPTS):
        masses = 10.0 ** rng.uniform(0.0, 1.0, n_bodies)
        if topology is Topology.QUAD_2P2:
            p1 = sorted(masses[:2], reverse=True)
            p2 = sorted(masses[2:], reverse=True)
            if sum(p2) > sum(p1):
                p1, p2 = p2, p1
            masses = np.array(p1 + p2)
        else:
            if masses[1] > masses[0]:
                masses[[0, 1]] = masses[[1, 0]]
        ratios = rng.uniform(ALPHA_FLOOR, 1.0, n_orbits - 1)
        e = rng.uniform(0.0, E_MAX, n_orbits)
        inc = np.arccos(rng.uniform(-1.0, 1.0, n_orbits))
        node = rng.uniform(0.0, 2.0 * math.pi, n_orbits)
        argp = rng.uniform(0.0, 2.0 * math.pi, n_orbits)
        anom = rng.uniform(0.0, 2.0 * math.pi, n_orbits)

        if topology is Topology.QUAD_3P1:
            a = (ratios[0] * ratios[1], ratios[1], 1.0)
        else:
            a = tuple(ratios) + (1.0,)
        orbits = tuple(
            OrbitElements(a=a[k], e=e[k], i=inc[k], Omega=node[k], omega=argp[k], M=anom[k])
            for k in range(n_orbits)
        )
        spec = HierarchySpec(topology, tuple(masses), orbits)

        if topology is Topology.QUAD_3P1:
            # product of two ratios can undershoot the floor the ratios
            # themselves respect; reject so every axis stays integrable
            ok = (
                a[0] >= ALPHA_FLOOR
                and _apo_inside_peri(orbits[0], orbits[1])
                and _apo_inside_peri(orbits[1], orbits[2])
            )
        elif topology is Topology.QUAD_2P2:
            ok = _apo_inside_peri(orbits[0], orbits[2]) and _apo_inside_peri(
                orbits[1], orbits[2]
            )
        else:
            ok = _apo_inside_peri(orbits[0], orbits[1])
        if ok:
            return PARAM_TYPES[topology].from_spec(spec).validate()
    raise SamplingError(
        f"no hierarchical {topology.value} system in {MAX_SAMPLE_ATTEMPTS} draws"
    )


def ma01_thinning(params, rng: np.random.Generator) -> bool:
    """Keep analytically stable quadruples always, unstable ones rarely."""
    keep_p = THINNING_KEEP.get(params.spec.topology)
    if keep_p is None:  # triples are never thinned
        return True
    if ma01_quad_stable(params.spec):
        return True
    return rng.random() < keep_p


@dataclass(frozen=True)
class LabeledRow:
    params: object
    record: StabilityRecord
    seed: int  # candidate index under the master seed
    wall_time: float

    @property
    def unstable(self) -> bool:
        return self.record.unstable


@dataclass
class LabeledDataset:
    topology: Topology
    rows: list
    tag: str = ""

    def __len__(self):
        return len(self.rows)

    def feature_matrix(self) -> np.ndarray:
        return np.array([r.params.feature_vector() for r in self.rows])

    def labels(self) -> np.ndarray:
        """1 = unstable, 0 = stable (the classifier output convention)."""
        return np.array([1.0 if r.unstable else 0.0 for r in self.rows])

    def feature_names(self) -> tuple:
        return PARAM_TYPES[self.topology].FEATURES


def candidate_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    )


def process_candidate(
    topology: Topology,
    master_seed: int,
    index: int,
    cfg: IntegratorConfig,
    n_outer: int = 100,
    ghost_pick: str = "mass",
) -> tuple[str, LabeledRow | None]:
    """Sample, thin and (maybe) label candidate `index`.

    Returns (outcome, row) with outcome one of "kept", "timeout",
    "thinned", "sampling_error"; row is None unless a labeling ran.
    """
    rng = candidate_rng(master_seed, index)
    try:
        params = sample_system(topology, rng)
    except SamplingError:
        return "sampling_error", None
    if not ma01_thinning(params, rng):
        return "thinned", None
    t0 = time.perf_counter()
    record = classify_stability(params.spec, n_outer, cfg, ghost_pick)
    wall = time.perf_counter() - t0
    row = LabeledRow(params=params, record=record, seed=index, wall_time=wall)
    if record.label is StabilityLabel.TIMEOUT:
        return "timeout", row
    return "kept", row


def build_dataset(
    topology: Topology,
    n_target: int,
    master_seed: int,
    cfg: IntegratorConfig | None = None,
    n_outer: int = 100,
    ghost_pick: str = "mass",
    progress_path: str | Path | None = None,
    log_every: int = 0,
) -> tuple[LabeledDataset, LabeledDataset]:
    """Label candidates in index order until n_target non-Timeout rows.

    Returns (dataset, timeouts). With a progress_path, finished
    candidates are replayed from the file instead of recomputed, so an
    interrupted build resumes to an identical result.
    """
    if n_target < 10:
        raise ValueError("n_target must be >= 10")
    if cfg is None:
        cfg = IntegratorConfig()
    done = {}
    progress_file = None
    if progress_path is not None:
        progress_path = Path(progress_path)
        if progress_path.exists():
            with open(progress_path) as fh:
                for line in fh:
                    entry = json.loads(line)
                    done[entry["c"]] = entry
        progress_file = open(progress_path, "a")

    kept: list[LabeledRow] = []
    timeouts: list[LabeledRow] = []
    index = 0
    t_start = time.perf_counter()
    try:
        while len(kept) < n_target:
            if index in done:
                entry = done[index]
                outcome = entry["outcome"]
                row = (
                    _row_from_dict(entry["row"], topology)
                    if entry.get("row") is not None
                    else None
                )
            else:
                outcome, row = process_candidate(
                    topology, master_seed, index, cfg, n_outer, ghost_pick
                )
                if progress_file is not None:
                    entry = {
                        "c": index,
                        "outcome": outcome,
                        "row": _row_to_dict(row) if row is not None else None,
                    }
                    progress_file.write(json.dumps(entry) + "\n")
                    progress_file.flush()
            if outcome == "kept":
                kept.append(row)
            elif outcome == "timeout":
                timeouts.append(row)
            index += 1
            if log_every and index % log_every == 0:
                rate = len(kept) / (time.perf_counter() - t_start)
                print(
                    f"[{topology.value}] candidates={index} kept={len(kept)}"
                    f"/{n_target} timeouts={len(timeouts)} ({rate:.2f} rows/s)",
                    flush=True,
                )
    finally:
        if progress_file is not None:
            progress_file.close()
    return (
        LabeledDataset(topology, kept),
        LabeledDataset(topology, timeouts, tag="timeout"),
    )


def split(
    dataset: LabeledDataset, frac: float = 0.8, seed: int = 0
) -> tuple[LabeledDataset, LabeledDataset]:
    """Seeded shuffle into disjoint, exhaustive train/test subsets."""
    if not dataset.rows:
        raise ValueError("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(dataset.rows))
    n_train = int(round(frac * len(dataset.rows)))
    rows = [dataset.rows[k] for k in perm]
    return (
        LabeledDataset(dataset.topology, rows[:n_train], tag="train"),
        LabeledDataset(dataset.topology, rows[n_train:], tag="test"),
    )


# ---------------------------------------------------------------- CSV I/O

ORBIT_NAMES_BY_TOPOLOGY = {
    Topology.TRIPLE: ("in", "out"),
    Topology.QUAD_2P2: ("in1", "in2", "out"),
    Topology.QUAD_3P1: ("in", "mid", "out"),
}


def csv_columns(topology: Topology) -> list[str]:
    cols = list(PARAM_TYPES[topology].FEATURES)
    n_bodies = 3 if topology is Topology.TRIPLE else 4
    cols += [f"m{k+1}" for k in range(n_bodies)]
    for name in ORBIT_NAMES_BY_TOPOLOGY[topology]:
        cols += [f"a_{name}", f"inc_{name}", f"Omega_{name}", f"omega_{name}", f"M_{name}"]
    cols += [
        "label", "t_trigger", "max_abs_delta", "n_outer_completed",
        "energy_drift_final", "seed", "wall_time_s", "error",
    ]
    return cols


def _row_to_dict(row: LabeledRow) -> dict:
    p = row.params
    spec = p.spec
    d = {f: getattr(p, f) for f in p.FEATURES}
    for k, m in enumerate(spec.masses):
        d[f"m{k+1}"] = m
    for name, el in zip(ORBIT_NAMES_BY_TOPOLOGY[spec.topology], spec.orbits):
        d[f"a_{name}"] = el.a
        d[f"inc_{name}"] = el.i
        d[f"Omega_{name}"] = el.Omega
        d[f"omega_{name}"] = el.omega
        d[f"M_{name}"] = el.M
    rec = row.record
    d["label"] = rec.label.value
    d["t_trigger"] = "" if rec.t_trigger is None else rec.t_trigger
    d["max_abs_delta"] = rec.max_abs_delta
    d["n_outer_completed"] = rec.n_outer_completed
    d["energy_drift_final"] = rec.energy_drift_final
    d["seed"] = row.seed
    d["wall_time_s"] = row.wall_time
    d["error"] = rec.error or ""
    return d


def _row_from_dict(d: dict, topology: Topology) -> LabeledRow:
    n_bodies = 3 if topology is Topology.TRIPLE else 4
    masses = tuple(float(d[f"m{k+1}"]) for k in range(n_bodies))
    names = ORBIT_NAMES_BY_TOPOLOGY[topology]
    e_by_orbit = _eccentricities_from_features(d, topology)
    orbits = tuple(
        OrbitElements(
            a=float(d[f"a_{name}"]),
            e=e_by_orbit[k],
            i=float(d[f"inc_{name}"]),
            Omega=float(d[f"Omega_{name}"]),
            omega=float(d[f"omega_{name}"]),
            M=float(d[f"M_{name}"]),
        )
        for k, name in enumerate(names)
    )
    spec = HierarchySpec(topology, masses, orbits)
    params = PARAM_TYPES[topology].from_spec(spec)
    t_trigger = d["t_trigger"]
    record = StabilityRecord(
        label=StabilityLabel(d["label"]),
        t_trigger=None if t_trigger in ("", None) else float(t_trigger),
        max_abs_delta=float(d["max_abs_delta"]),
        n_outer_completed=int(d["n_outer_completed"]),
        energy_drift_final=float(d["energy_drift_final"]),
        error=(d.get("error") or None),
    )
    return LabeledRow(
        params=params,
        record=record,
        seed=int(d["seed"]),
        wall_time=float(d["wall_time_s"]),
    )


def _eccentricities_from_features(d, topology):
    if topology is Topology.TRIPLE:
        return [float(d["e_in"]), float(d["e_out"])]
    if topology is Topology.QUAD_2P2:
        return [float(d["e_in1"]), float(d["e_in2"]), float(d["e_out"])]
    return [float(d["e_in"]), float(d["e_mid"]), float(d["e_out"])]


def _fmt(v) -> str:
    # float() strips numpy scalar wrappers so repr is bitwise-exact text
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_csv(dataset: LabeledDataset, path: str | Path):
    """Write rows with repr-exact floats (bitwise reload)."""
    cols = csv_columns(dataset.topology)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in dataset.rows:
            d = _row_to_dict(row)
            writer.writerow([_fmt(d[c]) for c in cols])


def read_csv(path: str | Path, topology: Topology, tag: str = "") -> LabeledDataset:
    rows = []
    with open(path, newline="") as fh:
        for d in csv.DictReader(fh):
            rows.append(_row_from_dict(d, topology))
    return LabeledDataset(topology, rows, tag=tag)
