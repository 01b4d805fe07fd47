"""Scores, parameter-space slice grids and misclassification profiles.

Three classifier families are compared throughout: the analytic nested
criterion, a triple network applied to the nested views of a quadruple,
and a network trained on the quadruple topology itself.  "Stable" is
the positive class in all derived quantities.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple

import numpy as np

from .criteria import TripleView, ma01_stable, nested_triples, triple_view
from .mlp import MLPModel
from .nbody import IntegratorConfig
from .orbits import HierarchySpec, OrbitElements, Topology
from .sampling import LabeledDataset
from .stability import StabilityLabel, classify_stability

LOW_N_BIN = 30  # bins thinner than this are flagged high-uncertainty
ALPHA_NEW_FLOOR = 0.01
Q_NEW_RANGE = (0.1, 1.0)
E_NEW_RANGE = (0.0, 0.95)

# total mass of the binary that replaces one star of the enclosing
# triple; predictions and stability depend on ratios only, so the
# scale is just a convention (two unit masses in the equal-mass case)
_SPLIT_PAIR_MASS = 2.0


@dataclass(frozen=True)
class ConfusionCounts:
    """Two-class counts with stable as the positive class.

    FS counts systems predicted stable that are actually unstable; FU
    counts systems predicted unstable that are actually stable.
    """

    TS: int
    TU: int
    FS: int
    FU: int

    @property
    def total(self) -> int:
        return self.TS + self.TU + self.FS + self.FU

    def validate(self):
        for name in ("TS", "TU", "FS", "FU"):
            v = getattr(self, name)
            if v < 0 or v != int(v):
                raise ValueError(f"{name} must be a non-negative count, got {v}")
        return self

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.TS + other.TS,
            self.TU + other.TU,
            self.FS + other.FS,
            self.FU + other.FU,
        )


def confusion(true_stable, pred_stable) -> ConfusionCounts:
    """Count agreement between truth and prediction, both as is-stable flags."""
    t = np.asarray(true_stable, dtype=bool)
    p = np.asarray(pred_stable, dtype=bool)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError(f"label sequences must match 1-d, got {t.shape} vs {p.shape}")
    return ConfusionCounts(
        TS=int(np.sum(t & p)),
        TU=int(np.sum(~t & ~p)),
        FS=int(np.sum(~t & p)),
        FU=int(np.sum(t & ~p)),
    )


class Scores(NamedTuple):
    """Overall score plus per-class precision and recall.

    Entries whose denominator is zero are None, never silently 0.
    """

    s: float | None
    p_stable: float | None
    p_unstable: float | None
    r_stable: float | None
    r_unstable: float | None


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def scores(c: ConfusionCounts) -> Scores:
    """S = correct/total; precision and recall of each class."""
    c.validate()
    return Scores(
        s=_ratio(c.TS + c.TU, c.total),
        p_stable=_ratio(c.TS, c.TS + c.FS),
        p_unstable=_ratio(c.TU, c.TU + c.FU),
        r_stable=_ratio(c.TS, c.TS + c.FU),
        r_unstable=_ratio(c.TU, c.TU + c.FS),
    )


# ---------------------------------------------------------------------------
# classifier adapters: HierarchySpec -> bool (predicts stable)

def _view_features(view: TripleView) -> np.ndarray:
    # must match TripleParams.FEATURES order
    return np.array(
        [view.q_in, view.q_out, view.alpha, view.e_in, view.e_out, view.i_mut]
    )


def mlp_quad_classifier(model: MLPModel) -> Callable[[HierarchySpec], bool]:
    """Predict with the network trained on the system's own topology."""
    from .sampling import PARAM_TYPES

    def predict(spec: HierarchySpec) -> bool:
        params = PARAM_TYPES[spec.topology].from_spec(spec)
        return not bool(model.predict_unstable(params.feature_vector()))

    return predict


def mlp_nested_triple_classifier(model: MLPModel) -> Callable[[HierarchySpec], bool]:
    """Triple network on every nested view; stable only if all views are.

    The conjunction mirrors the analytic quadruple rule.  Plain triples
    have a single view, so the adapter covers them too.
    """

    def predict(spec: HierarchySpec) -> bool:
        if spec.topology is Topology.TRIPLE:
            views = (triple_view(spec),)
        else:
            views = nested_triples(spec)
        X = np.stack([_view_features(v) for v in views])
        return not bool(np.any(model.predict_unstable(X)))

    return predict


def ma01_classifier() -> Callable[[HierarchySpec], bool]:
    """The analytic criterion, applied per view with conjunction."""
    return ma01_stable


# ---------------------------------------------------------------------------
# coplanar slices: two new-binary parameters varied, the rest pinned

# Named slices through 2+2 space.  Each row pins the original binary
# and the outer orbit; the new binary's axis ratio is always varied and
# its mass ratio or eccentricity is the second axis.
SLICES_2P2 = {
    "Fiducial": {"alpha_in1_out": 0.25, "q_in1": 1.0, "q_out": 1.0, "e_in1": 0.0, "e_out": 0.0},
    "Low q_in1": {"alpha_in1_out": 0.2, "q_in1": 1.0 / 9.0, "q_out": 1.0, "e_in1": 0.0, "e_out": 0.0},
    "Low q_out": {"alpha_in1_out": 0.25, "q_in1": 1.0, "q_out": 1.0 / 9.0, "e_in1": 0.0, "e_out": 0.0},
    "High e_in1": {"alpha_in1_out": 0.175, "q_in1": 1.0, "q_out": 1.0, "e_in1": 0.5, "e_out": 0.0},
    "High e_out": {"alpha_in1_out": 0.075, "q_in1": 1.0, "q_out": 1.0, "e_in1": 0.0, "e_out": 0.5},
}

# Named slices through 3+1 space; the new binary is the innermost one.
SLICES_3P1 = {
    "Fiducial": {"alpha_mid_out": 0.25, "q_mid": 0.5, "q_out": 1.0 / 3.0, "e_mid": 0.0, "e_out": 0.0},
    "High q_mid": {"alpha_mid_out": 0.175, "q_mid": 3.5, "q_out": 1.0 / 9.0, "e_mid": 0.0, "e_out": 0.0},
    "High q_out": {"alpha_mid_out": 0.15, "q_mid": 0.5, "q_out": 7.0 / 3.0, "e_mid": 0.0, "e_out": 0.0},
    "Low q_mid": {"alpha_mid_out": 0.2, "q_mid": 1.0 / 6.0, "q_out": 3.0 / 7.0, "e_mid": 0.0, "e_out": 0.0},
    "Low q_out": {"alpha_mid_out": 0.25, "q_mid": 0.5, "q_out": 1.0 / 9.0, "e_mid": 0.0, "e_out": 0.0},
    "High e_mid": {"alpha_mid_out": 0.175, "q_mid": 0.5, "q_out": 1.0 / 3.0, "e_mid": 0.5, "e_out": 0.0},
    "High e_out": {"alpha_mid_out": 0.075, "q_mid": 0.5, "q_out": 1.0 / 3.0, "e_mid": 0.0, "e_out": 0.5},
}

_SLICE_TABLES = {Topology.QUAD_2P2: SLICES_2P2, Topology.QUAD_3P1: SLICES_3P1}

# full coplanar parameter set per topology; fixed + varied must cover it
_SLICE_PARAMS = {
    Topology.QUAD_2P2: frozenset(
        ("alpha_in1_out", "alpha_in2_out", "q_in1", "q_in2", "q_out",
         "e_in1", "e_in2", "e_out")
    ),
    Topology.QUAD_3P1: frozenset(
        ("alpha_in_mid", "alpha_mid_out", "q_in", "q_mid", "q_out",
         "e_in", "e_mid", "e_out")
    ),
}

_NEW_BINARY_AXES = {
    Topology.QUAD_2P2: ("alpha_in2_out", "q_in2", "e_in2"),
    Topology.QUAD_3P1: ("alpha_in_mid", "q_in", "e_in"),
}


@dataclass(frozen=True)
class SliceSpec:
    """A 2-d coplanar grid: new-binary axis ratio against one other knob.

    fixed carries every parameter except the two in varied; systems are
    realized periapsis-aligned with zero phases and zero inclinations.
    """

    topology: Topology
    name: str
    fixed: Mapping[str, float]
    varied: tuple[str, str]
    alpha_range: tuple[float, float]
    other_range: tuple[float, float]
    n_alpha: int = 25
    n_other: int = 25

    def validate(self):
        if self.topology not in _SLICE_TABLES:
            raise ValueError(f"slices are defined for quadruples, not {self.topology}")
        alpha_axis, q_axis, e_axis = _NEW_BINARY_AXES[self.topology]
        if len(self.varied) != 2 or self.varied[0] != alpha_axis:
            raise ValueError(f"varied must be ({alpha_axis}, mass ratio or eccentricity)")
        if self.varied[1] not in (q_axis, e_axis):
            raise ValueError(f"second axis must be {q_axis} or {e_axis}")
        want = _SLICE_PARAMS[self.topology]
        got = set(self.fixed) | set(self.varied)
        if got != want or set(self.fixed) & set(self.varied):
            raise ValueError(f"fixed+varied must partition {sorted(want)}")
        if self.n_alpha < 1 or self.n_other < 1:
            raise ValueError("grid dimensions must be >= 1")
        lo, hi = self.alpha_range
        if not ALPHA_NEW_FLOOR <= lo < hi <= self._alpha_limit():
            raise ValueError(
                f"alpha range {self.alpha_range} outside "
                f"[{ALPHA_NEW_FLOOR}, {self._alpha_limit()}]"
            )
        olo, ohi = self.other_range
        bound = Q_NEW_RANGE if self.varied[1] == q_axis else E_NEW_RANGE
        if not bound[0] <= olo < ohi <= bound[1]:
            raise ValueError(f"{self.varied[1]} range {self.other_range} outside {bound}")
        return self

    def _alpha_limit(self) -> float:
        # the new binary must nest under its enclosing fixed orbit
        enclosing_e = self.fixed[
            "e_out" if self.topology is Topology.QUAD_2P2 else "e_mid"
        ]
        return 1.0 - enclosing_e

    def alpha_values(self) -> np.ndarray:
        return _centers(*self.alpha_range, self.n_alpha)

    def other_values(self) -> np.ndarray:
        return _centers(*self.other_range, self.n_other)


def _centers(lo: float, hi: float, n: int) -> np.ndarray:
    """n cell centers of an even partition of [lo, hi]; endpoints excluded."""
    h = (hi - lo) / n
    return np.linspace(lo + 0.5 * h, hi - 0.5 * h, n)


def make_slice(
    topology: Topology,
    name: str = "Fiducial",
    varied: str = "e",
    n_alpha: int = 25,
    n_other: int = 25,
    alpha_range: tuple[float, float] | None = None,
    other_range: tuple[float, float] | None = None,
) -> SliceSpec:
    """Build a named slice; varied is "q" or "e" for the second axis.

    The grid that varies the mass ratio pins the new eccentricity at 0;
    the one that varies the eccentricity pins the mass ratio at 1.
    """
    table = _SLICE_TABLES.get(topology)
    if table is None:
        raise ValueError(f"slices are defined for quadruples, not {topology}")
    row = table.get(name)
    if row is None:
        raise ValueError(f"unknown slice {name!r}; known: {sorted(table)}")
    alpha_axis, q_axis, e_axis = _NEW_BINARY_AXES[topology]
    fixed = dict(row)
    if varied == "q":
        axes = (alpha_axis, q_axis)
        fixed[e_axis] = 0.0
        rng = Q_NEW_RANGE
    elif varied == "e":
        axes = (alpha_axis, e_axis)
        fixed[q_axis] = 1.0
        rng = E_NEW_RANGE
    else:
        raise ValueError(f'varied must be "q" or "e", got {varied!r}')
    enclosing_e = fixed["e_out" if topology is Topology.QUAD_2P2 else "e_mid"]
    spec = SliceSpec(
        topology=topology,
        name=name,
        fixed=fixed,
        varied=axes,
        alpha_range=alpha_range or (ALPHA_NEW_FLOOR, 1.0 - enclosing_e),
        other_range=other_range or rng,
        n_alpha=n_alpha,
        n_other=n_other,
    )
    return spec.validate()


def _masses_2p2(q_in1: float, q_in2: float, q_out: float) -> tuple:
    total1 = _SPLIT_PAIR_MASS
    total2 = q_out * total1
    m1 = total1 / (1.0 + q_in1)
    m3 = total2 / (1.0 + q_in2)
    return (m1, total1 - m1, m3, total2 - m3)


def _masses_3p1(q_in: float, q_mid: float, q_out: float) -> tuple:
    total_in = _SPLIT_PAIR_MASS
    m1 = total_in / (1.0 + q_in)
    m3 = q_mid * total_in
    m4 = q_out * (total_in + m3)
    return (m1, total_in - m1, m3, m4)


def slice_system(spec: SliceSpec, alpha_new: float, other: float) -> HierarchySpec:
    """Realize one grid cell as a coplanar zero-phase quadruple, a_out = 1."""
    p = dict(spec.fixed)
    p[spec.varied[0]] = alpha_new
    p[spec.varied[1]] = other
    if spec.topology is Topology.QUAD_2P2:
        masses = _masses_2p2(p["q_in1"], p["q_in2"], p["q_out"])
        orbits = (
            OrbitElements(a=p["alpha_in1_out"], e=p["e_in1"]),
            OrbitElements(a=p["alpha_in2_out"], e=p["e_in2"]),
            OrbitElements(a=1.0, e=p["e_out"]),
        )
    else:
        masses = _masses_3p1(p["q_in"], p["q_mid"], p["q_out"])
        a_mid = p["alpha_mid_out"]
        orbits = (
            OrbitElements(a=p["alpha_in_mid"] * a_mid, e=p["e_in"]),
            OrbitElements(a=a_mid, e=p["e_mid"]),
            OrbitElements(a=1.0, e=p["e_out"]),
        )
    return HierarchySpec(spec.topology, masses, orbits).validate()


@dataclass
class SliceGrid:
    """Ghost-labeled truth plus per-classifier verdicts on a slice.

    labels and each predictions array are (n_alpha, n_other); cell
    [i, j] belongs to alpha_values[i], other_values[j].  Timeout cells
    carry StabilityLabel.TIMEOUT and are excluded from fractions.
    """

    spec: SliceSpec
    alpha_values: np.ndarray
    other_values: np.ndarray
    labels: np.ndarray  # object array of StabilityLabel
    predictions: dict[str, np.ndarray]  # name -> bool array, True = stable

    def truth_stable(self) -> np.ndarray:
        return np.vectorize(lambda lab: lab is StabilityLabel.STABLE)(self.labels)

    def evaluated(self) -> np.ndarray:
        return np.vectorize(lambda lab: lab is not StabilityLabel.TIMEOUT)(self.labels)


def slice_grid(
    spec: SliceSpec,
    classifiers: Mapping[str, Callable[[HierarchySpec], bool]],
    cfg: IntegratorConfig | None = None,
    n_outer: int = 100,
    ghost_pick: str = "mass",
) -> SliceGrid:
    """Label every cell by ghost divergence and query each classifier.

    Cells are independent: each is realized, integrated and predicted
    in isolation, so any evaluation order gives identical results.
    """
    spec.validate()
    alphas = spec.alpha_values()
    others = spec.other_values()
    labels = np.empty((spec.n_alpha, spec.n_other), dtype=object)
    predictions = {
        name: np.zeros((spec.n_alpha, spec.n_other), dtype=bool) for name in classifiers
    }
    for i, alpha in enumerate(alphas):
        for j, other in enumerate(others):
            system = slice_system(spec, float(alpha), float(other))
            labels[i, j] = classify_stability(system, n_outer, cfg, ghost_pick).label
            for name, predict in classifiers.items():
                predictions[name][i, j] = bool(predict(system))
    return SliceGrid(
        spec=spec,
        alpha_values=alphas,
        other_values=others,
        labels=labels,
        predictions=predictions,
    )


def bad_fraction_by_slice(grid: SliceGrid) -> dict[str, float | None]:
    """Fraction of evaluated cells each classifier got wrong.

    An all-timeout grid has no denominator; every entry is then None.
    """
    mask = grid.evaluated()
    n = int(mask.sum())
    if n == 0:
        return {name: None for name in grid.predictions}
    truth = grid.truth_stable()
    return {
        name: float(np.sum(pred[mask] != truth[mask]) / n)
        for name, pred in grid.predictions.items()
    }


def write_grid_csv(grid: SliceGrid, path) -> None:
    """Flat per-cell table for external plotting."""
    names = list(grid.predictions)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([grid.spec.varied[0], grid.spec.varied[1], "label"]
                   + [f"stable_by_{n}" for n in names])
        for i, alpha in enumerate(grid.alpha_values):
            for j, other in enumerate(grid.other_values):
                w.writerow(
                    [repr(float(alpha)), repr(float(other)), grid.labels[i, j].value]
                    + [str(bool(grid.predictions[n][i, j])) for n in names]
                )


# ---------------------------------------------------------------------------
# misclassification profiles over a labeled test set

@dataclass
class BinnedFractions:
    """Per-bin false-stable and false-unstable fractions for one parameter.

    Fractions are relative to everything in the bin, so their sum is
    the bin's total misclassification rate.  Empty bins carry NaN.
    """

    parameter: str
    edges: np.ndarray  # n_bins + 1 ascending
    counts: np.ndarray
    false_stable: np.ndarray
    false_unstable: np.ndarray
    se_false_stable: np.ndarray
    se_false_unstable: np.ndarray
    low_n: np.ndarray  # True where counts < LOW_N_BIN

    @property
    def n_bins(self) -> int:
        return len(self.counts)


def _binomial_se(p: np.ndarray, n: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.sqrt(p * (1.0 - p) / n)


def bad_fraction_bins(
    dataset: LabeledDataset,
    pred_stable,
    parameter: str,
    n_bins: int = 20,
) -> BinnedFractions:
    """Profile both error types of one classifier against one parameter.

    Bins are equal-width over the observed value range; the top edge is
    closed so every row lands in a bin and the count-weighted average
    of per-bin fractions reproduces the global ones exactly.
    """
    names = dataset.feature_names()
    if parameter not in names:
        raise ValueError(f"unknown parameter {parameter!r}; known: {list(names)}")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    pred = np.asarray(pred_stable, dtype=bool)
    if len(pred) != len(dataset):
        raise ValueError(f"{len(pred)} predictions for {len(dataset)} rows")
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    values = dataset.feature_matrix()[:, names.index(parameter)]
    truth = dataset.labels() == 0.0

    lo, hi = float(values.min()), float(values.max())
    edges = np.linspace(lo, hi, n_bins + 1)
    if hi > lo:
        idx = np.minimum(((values - lo) / (hi - lo) * n_bins).astype(int), n_bins - 1)
    else:
        idx = np.zeros(len(values), dtype=int)

    counts = np.bincount(idx, minlength=n_bins)
    fs = np.bincount(idx[~truth & pred], minlength=n_bins)
    fu = np.bincount(idx[truth & ~pred], minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        fs_frac = np.where(counts > 0, fs / counts, np.nan)
        fu_frac = np.where(counts > 0, fu / counts, np.nan)
    return BinnedFractions(
        parameter=parameter,
        edges=edges,
        counts=counts,
        false_stable=fs_frac,
        false_unstable=fu_frac,
        se_false_stable=_binomial_se(fs_frac, counts),
        se_false_unstable=_binomial_se(fu_frac, counts),
        low_n=counts < LOW_N_BIN,
    )


def write_bins_csv(bins: BinnedFractions, path) -> None:
    """Per-bin table for external plotting of the frequency polygons."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["parameter", "bin_lo", "bin_hi", "n", "false_stable", "false_unstable",
             "se_false_stable", "se_false_unstable", "low_n"]
        )
        for k in range(bins.n_bins):
            w.writerow(
                [bins.parameter, repr(float(bins.edges[k])), repr(float(bins.edges[k + 1])),
                 int(bins.counts[k]), repr(float(bins.false_stable[k])),
                 repr(float(bins.false_unstable[k])), repr(float(bins.se_false_stable[k])),
                 repr(float(bins.se_false_unstable[k])), str(bool(bins.low_n[k]))]
            )
