"""Command-line entry points: classification plus the dataset pipeline.

Units at this boundary: the classify commands take inclinations in
DEGREES and convert once, here; every file format and in-process call
uses radians.  Exit codes: 0 success, 2 usage, 3 input/output,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .criteria import ma01_stable
from .metrics import (
    bad_fraction_bins,
    bad_fraction_by_slice,
    confusion,
    make_slice,
    mlp_nested_triple_classifier,
    mlp_quad_classifier,
    scores,
    slice_grid,
    write_bins_csv,
    write_grid_csv,
)
from .mlp import load, save, train
from .nbody import IntegratorConfig, NumericalFailure
from .orbits import Topology
from .sampling import (
    PARAM_TYPES,
    LabeledDataset,
    SamplingError,
    _eccentricities_from_features,
    _fmt,
    _row_to_dict,
    candidate_rng,
    csv_columns,
    ma01_thinning,
    read_csv,
    sample_system,
    split,
)
from .sampling import ORBIT_NAMES_BY_TOPOLOGY as _ORBITS
from .stability import StabilityLabel, classify_stability

MODEL_DIR_ENV = "QUADSTAB_MODEL_DIR"
MODEL_FILENAMES = {
    "triple": "mlp_triple.json",
    "quad_2p2": "mlp_quad_2p2.json",
    "quad_3p1": "mlp_quad_3p1.json",
}

TOPOLOGY_TAGS = {
    "triple": Topology.TRIPLE,
    "quad_2p2": Topology.QUAD_2P2,
    "quad_3p1": Topology.QUAD_3P1,
}
_TAG_OF = {v: k for k, v in TOPOLOGY_TAGS.items()}

# short flag -> feature, in feature order (the 2+2 classify interface)
FLAGS_2P2 = (
    ("qi1", "q_in1"), ("qi2", "q_in2"), ("qo", "q_out"),
    ("ali1o", "alpha_in1_out"), ("ali2o", "alpha_in2_out"),
    ("ei1", "e_in1"), ("ei2", "e_in2"), ("eo", "e_out"),
    ("ii1i2", "i_in1_in2"), ("ii1o", "i_in1_out"), ("ii2o", "i_in2_out"),
)
FLAGS_3P1 = (
    ("qi", "q_in"), ("qm", "q_mid"), ("qo", "q_out"),
    ("alim", "alpha_in_mid"), ("almo", "alpha_mid_out"),
    ("ei", "e_in"), ("em", "e_mid"), ("eo", "e_out"),
    ("iim", "i_in_mid"), ("iio", "i_in_out"), ("imo", "i_mid_out"),
)

# training coverage per feature, in the units the user types (degrees
# for inclinations); values outside only warn, classification proceeds
_WARN_RANGES = {
    "quad_2p2": {
        "q_in1": (0.1, 1.0), "q_in2": (0.1, 1.0), "q_out": (0.1, 1.0),
    },
    "quad_3p1": {
        "q_in": (0.1, 1.0), "q_mid": (0.05, 5.0), "q_out": (1.0 / 30.0, 10.0 / 3.0),
    },
}


def _warn_range(feature: str, value: float, tag: str) -> str | None:
    if feature.startswith("alpha"):
        lo, hi = 0.01, 1.0
    elif feature.startswith("e_"):
        lo, hi = 0.0, 0.95
    elif feature.startswith("i_"):
        lo, hi = 0.0, 180.0
    else:
        lo, hi = _WARN_RANGES[tag][feature]
    if lo <= value <= hi:
        return None
    return (
        f"warning: {feature}={value:g} outside the training range "
        f"[{lo:g}, {hi:g}]; the verdict may be unreliable"
    )


def resolve_model_path(tag: str, explicit: str | None = None) -> Path:
    """Explicit path, else MODEL_FILENAMES[tag] under $QUADSTAB_MODEL_DIR."""
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(MODEL_DIR_ENV, "models")) / MODEL_FILENAMES[tag]


def _features_to_matrix(args) -> tuple[np.ndarray, bool]:
    arrs = np.broadcast_arrays(*[np.asarray(a, dtype=np.float64) for a in args])
    X = np.stack(arrs, axis=-1)
    if X.ndim == 1:
        return X[None], True
    return X.reshape(-1, X.shape[-1]), False


def mlp_classifier_2p2(model_path, qi1, qi2, qo, ali1o, ali2o,
                       ei1, ei2, eo, ii1i2, ii1o, ii2o):
    """True if stable, False if unstable; scalars or numpy arrays.

    Inclinations are in radians here (only the command line speaks
    degrees).  Argument order matches the 2+2 feature order.
    """
    model = load(model_path)
    X, single = _features_to_matrix(
        (qi1, qi2, qo, ali1o, ali2o, ei1, ei2, eo, ii1i2, ii1o, ii2o)
    )
    stable = ~model.predict_unstable(X)
    return bool(stable[0]) if single else stable


def mlp_classifier_3p1(model_path, qi, qm, qo, alim, almo,
                       ei, em, eo, iim, iio, imo):
    """3+1 counterpart of mlp_classifier_2p2; radians, True if stable."""
    model = load(model_path)
    X, single = _features_to_matrix(
        (qi, qm, qo, alim, almo, ei, em, eo, iim, iio, imo)
    )
    stable = ~model.predict_unstable(X)
    return bool(stable[0]) if single else stable


def _verdict_line(p_unstable: float) -> str:
    verdict = "unstable" if p_unstable >= 0.5 else "stable"
    return f"{verdict} p_unstable={p_unstable!r}"


def _read_batch(path: Path, n_features: int) -> list[list[float]]:
    rows = []
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if not raw or (len(raw) == 1 and not raw[0].strip()):
                continue
            cells = [c for chunk in raw for c in chunk.split()]
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                if lineno == 1:  # header line
                    continue
                raise ValueError(f"{path}:{lineno}: malformed number")
            if len(vals) != n_features:
                raise ValueError(
                    f"{path}:{lineno}: expected {n_features} values, got {len(vals)}"
                )
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no systems found")
    return rows


def _classify_main(tag: str, flag_table, argv) -> int:
    parser = argparse.ArgumentParser(
        prog=f"classify-{tag.replace('_', '-')}",
        allow_abbrev=False,
        description=(
            f"Classify a {tag} system with a trained network. "
            "Inclination flags are in degrees."
        ),
    )
    for flag, feature in flag_table:
        parser.add_argument(
            f"-{flag}", f"--{feature.replace('_', '-')}",
            dest=feature, type=float, default=None,
            help=f"{feature}" + (" [deg]" if feature.startswith("i_") else ""),
        )
    parser.add_argument("--model", default=None, help="model JSON path")
    parser.add_argument(
        "--batch", default=None,
        help="CSV of systems, columns in flag order (header optional)",
    )
    args = parser.parse_args(argv)

    features = [f for _, f in flag_table]
    if args.batch is None:
        missing = [fl for fl, f in flag_table if getattr(args, f) is None]
        if missing:
            parser.error(f"missing flags: {' '.join('-' + m for m in missing)}")
        batches = [[getattr(args, f) for f in features]]
    else:
        if any(getattr(args, f) is not None for f in features):
            parser.error("--batch replaces the per-system flags")
        try:
            batches = _read_batch(Path(args.batch), len(features))
        except OSError as ex:
            print(f"error: {ex}", file=sys.stderr)
            return 3
        except ValueError as ex:
            print(f"error: {ex}", file=sys.stderr)
            return 2

    model_path = resolve_model_path(tag, args.model)
    try:
        model = load(model_path)
    except OSError as ex:
        print(f"error: cannot read model: {ex}", file=sys.stderr)
        return 3
    except ValueError as ex:
        print(f"error: bad model file {model_path}: {ex}", file=sys.stderr)
        return 3
    if model.topology not in (None, tag):
        print(f"error: {model_path} is a {model.topology} model, need {tag}",
              file=sys.stderr)
        return 3

    for row in batches:
        for feature, value in zip(features, row):
            message = _warn_range(feature, value, tag)
            if message:
                print(message, file=sys.stderr)
        x = np.array(row)
        for k, feature in enumerate(features):
            if feature.startswith("i_"):
                x[k] = math.radians(x[k])
        p = model.predict_proba(x)
        if not math.isfinite(p):
            print("error: prediction is not finite", file=sys.stderr)
            return 4
        print(_verdict_line(p))
    return 0


def main_2p2(argv=None):
    sys.exit(_classify_main("quad_2p2", FLAGS_2P2, argv))


def main_3p1(argv=None):
    sys.exit(_classify_main("quad_3p1", FLAGS_3P1, argv))


# ---------------------------------------------------------------------------
# pipeline: sample / label / train / eval / slice

@dataclass
class RunConfig:
    """Shared pipeline settings; a key=value file plus flag overrides."""

    topology: str = "triple"
    n_systems: int = 1000
    master_seed: int = 0
    rel_tolerance: float = 1e-9
    max_wall_seconds: float = 60.0
    samples_per_outer: int = 100
    n_outer: int = 100
    out_dir: str = "."
    model_path: str = ""
    workers: int = 1

    def validate(self):
        if self.topology not in TOPOLOGY_TAGS:
            raise ValueError(
                f"topology must be one of {sorted(TOPOLOGY_TAGS)}, got {self.topology!r}"
            )
        if self.n_systems < 1:
            raise ValueError(f"n_systems must be >= 1, got {self.n_systems}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        out = Path(self.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise OSError(f"output directory not writable: {out}")
        return self

    @property
    def topo(self) -> Topology:
        return TOPOLOGY_TAGS[self.topology]

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(
            rel_tolerance=self.rel_tolerance,
            output_samples_per_outer_orbit=self.samples_per_outer,
            max_wall_seconds=self.max_wall_seconds,
        )


def parse_config_file(path) -> dict:
    """key=value lines; '#' comments; keys must be RunConfig fields."""
    known = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def build_run_config(args) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for f in dataclasses.fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    casters = {"int": int, "float": float, "str": str}
    cfg = RunConfig()
    for f in dataclasses.fields(RunConfig):
        if f.name in values:
            setattr(cfg, f.name, casters[str(f.type)](values[f.name]))
    return cfg.validate()


_RECORD_COLS = frozenset(
    ("label", "t_trigger", "max_abs_delta", "n_outer_completed",
     "energy_drift_final", "wall_time_s", "error")
)


def _systems_columns(topology: Topology) -> list[str]:
    return [c for c in csv_columns(topology) if c not in _RECORD_COLS]


def _system_to_dict(params, index: int) -> dict:
    spec = params.spec
    d = {f: getattr(params, f) for f in params.FEATURES}
    for k, m in enumerate(spec.masses):
        d[f"m{k+1}"] = m
    for name, el in zip(_ORBITS[spec.topology], spec.orbits):
        d[f"a_{name}"] = el.a
        d[f"inc_{name}"] = el.i
        d[f"Omega_{name}"] = el.Omega
        d[f"omega_{name}"] = el.omega
        d[f"M_{name}"] = el.M
    d["seed"] = index
    return d


def _system_from_dict(d: dict, topology: Topology):
    from .orbits import HierarchySpec, OrbitElements

    n_bodies = 3 if topology is Topology.TRIPLE else 4
    masses = tuple(float(d[f"m{k+1}"]) for k in range(n_bodies))
    e_by_orbit = _eccentricities_from_features(d, topology)
    orbits = tuple(
        OrbitElements(
            a=float(d[f"a_{name}"]), e=e_by_orbit[k], i=float(d[f"inc_{name}"]),
            Omega=float(d[f"Omega_{name}"]), omega=float(d[f"omega_{name}"]),
            M=float(d[f"M_{name}"]),
        )
        for k, name in enumerate(_ORBITS[topology])
    )
    spec = HierarchySpec(topology, masses, orbits)
    return PARAM_TYPES[topology].from_spec(spec), int(d["seed"])


def cmd_sample(args) -> int:
    """Draw and thin candidates until n_systems survive; write their specs."""
    cfg = build_run_config(args)
    out_path = Path(args.out or Path(cfg.out_dir) / f"systems_{cfg.topology}.csv")
    cols = _systems_columns(cfg.topo)
    kept = drawn = failed = 0
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        index = 0
        while kept < cfg.n_systems:
            rng = candidate_rng(cfg.master_seed, index)
            try:
                params = sample_system(cfg.topo, rng)
            except SamplingError:
                failed += 1
                index += 1
                continue
            drawn += 1
            if ma01_thinning(params, rng):
                d = _system_to_dict(params, index)
                writer.writerow([_fmt(d[c]) for c in cols])
                kept += 1
            index += 1
    print(
        f"wrote {kept} {cfg.topology} systems to {out_path} "
        f"({drawn} drawn, {drawn - kept} thinned, {failed} failed)"
    )
    return 0


def _label_one(params, index: int, cfg: RunConfig):
    from .sampling import LabeledRow

    record = classify_stability(
        params.spec, cfg.n_outer, cfg.integrator_config()
    )
    # per-row wall time stays out of the artifact so an interrupted and
    # resumed run is byte-identical to an uninterrupted one
    return LabeledRow(params=params, record=record, seed=index, wall_time=0.0)


def _label_star(task):
    params, index, cfg = task
    return _label_one(params, index, cfg)


def cmd_label(args) -> int:
    """Label each sampled system; skip rows the output already has."""
    cfg = build_run_config(args)
    systems_path = Path(args.systems)
    out_path = Path(args.out or Path(cfg.out_dir) / f"labeled_{cfg.topology}.csv")

    with open(systems_path, newline="") as fh:
        systems = [_system_from_dict(d, cfg.topo) for d in csv.DictReader(fh)]

    cols = csv_columns(cfg.topo)
    done = set()
    if out_path.exists():
        with open(out_path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != cols:
                print(f"error: {out_path} has a different column layout", file=sys.stderr)
                return 3
            done = {int(d["seed"]) for d in reader}

    todo = [(params, index, cfg) for params, index in systems if index not in done]
    t0 = time.perf_counter()
    mode = "a" if out_path.exists() else "w"
    n_timeout = 0
    with open(out_path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if mode == "w":
            writer.writerow(cols)

        def emit(results):
            nonlocal n_timeout
            for row in results:
                if row.record.label is StabilityLabel.TIMEOUT:
                    n_timeout += 1
                d = _row_to_dict(row)
                writer.writerow([_fmt(d[c]) for c in cols])
                fh.flush()

        if cfg.workers == 1:
            emit(map(_label_star, todo))
        else:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                emit(pool.map(_label_star, todo, chunksize=1))
    print(
        f"labeled {len(todo)} systems ({len(done)} already done, "
        f"{n_timeout} timeouts) in {time.perf_counter() - t0:.1f} s -> {out_path}"
    )
    return 0


def _load_labeled(path, topology: Topology, drop_timeouts: bool = True) -> LabeledDataset:
    ds = read_csv(path, topology)
    if drop_timeouts:
        kept = [r for r in ds.rows if r.record.label is not StabilityLabel.TIMEOUT]
        ds = LabeledDataset(topology, kept, tag=ds.tag)
    return ds


def cmd_train(args) -> int:
    cfg = build_run_config(args)
    tag = cfg.topology
    ds = _load_labeled(args.data, cfg.topo)
    train_set, test_set = split(ds, frac=args.train_fraction, seed=cfg.master_seed)
    model = train(
        train_set.feature_matrix(), train_set.labels(),
        seed=cfg.master_seed, topology=tag,
    )
    if len(test_set):
        pred = model.predict_unstable(test_set.feature_matrix())
        test_score = float(np.mean(pred == (test_set.labels() == 1.0)))
        model.metadata["test_score"] = test_score
    else:
        test_score = float("nan")
    out_path = Path(args.model_out or resolve_model_path(tag, cfg.model_path or None))
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save(model, out_path)
    meta = model.metadata
    print(
        f"trained {tag} model on {len(train_set)}/{len(test_set)} train/test rows\n"
        f"epochs {meta['epochs_run']} (best {meta['best_epoch']}), "
        f"train score {meta['train_score']:.4f}, test score {test_score:.4f}\n"
        f"model -> {out_path}"
    )
    return 0


def _dataset_classifiers(args, tag: str, truth_stable: np.ndarray) -> dict:
    """Name -> per-row stable predictions for every requested classifier."""
    available = {"truth", "ma01", "triple_mlp", "quad_mlp"}
    names = [n.strip() for n in (args.classifiers or "").split(",") if n.strip()]
    unknown = set(names) - available
    if unknown:
        raise ValueError(f"unknown classifiers: {sorted(unknown)}")
    if not names:
        names = ["ma01"]
        if args.triple_model:
            names.append("triple_mlp")
        if args.quad_model:
            names.append("quad_mlp")
    out = {}
    for name in names:
        if name == "truth":
            out[name] = truth_stable.copy()
        elif name == "ma01":
            out[name] = None  # filled per-row by the caller
        elif name == "triple_mlp":
            if not args.triple_model:
                raise ValueError("triple_mlp requested but no --triple-model given")
            out[name] = load(args.triple_model)
        else:
            if not args.quad_model:
                raise ValueError("quad_mlp requested but no --quad-model given")
            model = load(args.quad_model)
            if model.topology not in (None, tag):
                raise ValueError(
                    f"--quad-model is a {model.topology} model, data is {tag}"
                )
            out[name] = model
    return out


_SCORE_FIELDS = ("s", "p_stable", "p_unstable", "r_stable", "r_unstable")


def _format_score_table(rows: dict) -> str:
    header = f"{'classifier':<12}" + "".join(f"{f:>12}" for f in _SCORE_FIELDS)
    lines = [header]
    for name, sc in rows.items():
        cells = "".join(
            f"{('-' if v is None else format(v, '.4f')):>12}" for v in sc
        )
        lines.append(f"{name:<12}{cells}")
    return "\n".join(lines)


def cmd_eval(args) -> int:
    cfg = build_run_config(args)
    tag = cfg.topology
    ds = _load_labeled(args.data, cfg.topo)
    if not len(ds):
        raise ValueError(f"no usable rows in {args.data}")
    truth_stable = ds.labels() == 0.0
    classifiers = _dataset_classifiers(args, tag, truth_stable)

    predictions = {}
    for name, payload in classifiers.items():
        if name == "truth":
            predictions[name] = payload
        elif name == "ma01":
            predictions[name] = np.array(
                [ma01_stable(r.params.spec) for r in ds.rows]
            )
        elif name == "triple_mlp":
            predict = mlp_nested_triple_classifier(payload)
            predictions[name] = np.array([predict(r.params.spec) for r in ds.rows])
        else:
            predictions[name] = ~payload.predict_unstable(ds.feature_matrix())

    table = {
        name: scores(confusion(truth_stable, pred))
        for name, pred in predictions.items()
    }
    print(f"{len(ds)} {tag} systems from {args.data}")
    print(_format_score_table(table))

    if args.polygons:
        out_dir = Path(cfg.out_dir)
        mlp_names = [n for n in predictions if n.endswith("_mlp")]
        for name in mlp_names:
            for feature in ds.feature_names():
                bins = bad_fraction_bins(ds, predictions[name], feature, args.bins)
                write_bins_csv(bins, out_dir / f"bins_{tag}_{name}_{feature}.csv")
        if mlp_names:
            print(f"bin tables for {', '.join(mlp_names)} -> {out_dir}")
    return 0


def cmd_slice(args) -> int:
    cfg = build_run_config(args)
    tag = cfg.topology
    classifiers = {"ma01": ma01_stable}
    if args.triple_model:
        classifiers["triple_mlp"] = mlp_nested_triple_classifier(load(args.triple_model))
    if args.quad_model:
        model = load(args.quad_model)
        if model.topology not in (None, tag):
            raise ValueError(f"--quad-model is a {model.topology} model, need {tag}")
        classifiers["quad_mlp"] = mlp_quad_classifier(model)

    kinds = ("q", "e") if args.varied == "both" else (args.varied,)
    out_dir = Path(cfg.out_dir)
    slug = args.name.lower().replace(" ", "-")
    for kind in kinds:
        spec = make_slice(cfg.topo, args.name, kind, n_alpha=args.grid, n_other=args.grid)
        grid = slice_grid(
            spec, classifiers, cfg.integrator_config(), n_outer=cfg.n_outer
        )
        path = out_dir / f"slice_{tag}_{slug}_{kind}.csv"
        write_grid_csv(grid, path)
        bad = bad_fraction_by_slice(grid)
        summary = ", ".join(
            f"{name}={'-' if v is None else format(v, '.3f')}"
            for name, v in bad.items()
        )
        n_timeout = int((~grid.evaluated()).sum())
        print(f"{path}: {grid.labels.size} cells ({n_timeout} timeouts), bad: {summary}")
    return 0


def _add_run_config_flags(sub):
    sub.add_argument("--config", default=None, help="key=value settings file")
    sub.add_argument("--topology", choices=sorted(TOPOLOGY_TAGS), default=None)
    sub.add_argument("--n-systems", dest="n_systems", type=int, default=None)
    sub.add_argument("--master-seed", dest="master_seed", type=int, default=None)
    sub.add_argument("--rel-tolerance", dest="rel_tolerance", type=float, default=None)
    sub.add_argument("--max-wall-seconds", dest="max_wall_seconds", type=float, default=None)
    sub.add_argument("--samples-per-outer", dest="samples_per_outer", type=int, default=None)
    sub.add_argument("--n-outer", dest="n_outer", type=int, default=None)
    sub.add_argument("--out-dir", dest="out_dir", default=None)
    sub.add_argument("--model-path", dest="model_path", default=None)
    sub.add_argument("--workers", type=int, default=None)


def _pipeline_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadstab", allow_abbrev=False,
        description="Sample, label, train, evaluate and slice stability datasets.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("sample", help="draw systems and write their specs")
    _add_run_config_flags(p)
    p.add_argument("--out", default=None, help="systems CSV path")
    p.set_defaults(fn=cmd_sample)

    p = subs.add_parser("label", help="integrate and label sampled systems")
    _add_run_config_flags(p)
    p.add_argument("--systems", required=True, help="CSV from the sample command")
    p.add_argument("--out", default=None, help="labeled CSV path (resumable)")
    p.set_defaults(fn=cmd_label)

    p = subs.add_parser("train", help="fit a network on a labeled CSV")
    _add_run_config_flags(p)
    p.add_argument("--data", required=True, help="labeled CSV")
    p.add_argument("--model-out", default=None, help="model JSON path")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.set_defaults(fn=cmd_train)

    p = subs.add_parser("eval", help="score classifiers on a labeled CSV")
    _add_run_config_flags(p)
    p.add_argument("--data", required=True, help="labeled CSV")
    p.add_argument("--triple-model", default=None)
    p.add_argument("--quad-model", default=None)
    p.add_argument("--classifiers", default=None,
                   help="comma list from: truth,ma01,triple_mlp,quad_mlp")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--polygons", action=argparse.BooleanOptionalAction, default=True,
                   help="write per-parameter misclassification bin CSVs")
    p.set_defaults(fn=cmd_eval)

    p = subs.add_parser("slice", help="evaluate a named coplanar slice grid")
    _add_run_config_flags(p)
    p.add_argument("--name", default="Fiducial")
    p.add_argument("--varied", choices=("q", "e", "both"), default="both")
    p.add_argument("--grid", type=int, default=25)
    p.add_argument("--triple-model", default=None)
    p.add_argument("--quad-model", default=None)
    p.set_defaults(fn=cmd_slice)

    return parser


def _pipeline_main(argv) -> int:
    args = _pipeline_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ValueError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2
    except OSError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 3
    except NumericalFailure as ex:
        print(f"error: numerical failure: {ex}", file=sys.stderr)
        return 4


def main_pipeline(argv=None):
    sys.exit(_pipeline_main(argv))
