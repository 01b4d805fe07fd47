#!/usr/bin/env python3
"""Train the network classifier and score it against the analytic baseline.

Uses the shipped data/triple.csv when available (4000 labeled triples);
otherwise fabricates a small synthetic set so the demo still runs. The
network is a 6-64-64-64-64-1 logistic stack trained with Adam and early
stopping; everything is deterministic for a fixed seed.
"""

from pathlib import Path

import numpy as np

from quadstab.criteria import ma01_stable
from quadstab.metrics import confusion, scores
from quadstab.mlp import save, train
from quadstab.orbits import Topology
from quadstab.sampling import (
    LabeledDataset,
    LabeledRow,
    candidate_rng,
    read_csv,
    sample_system,
    split,
)
from quadstab.stability import StabilityLabel, StabilityRecord

SEED = 20260814


def synthetic_triples(n=600):
    # stand-in labels from the analytic criterion; fine for a demo,
    # useless for science
    rows = []
    for i in range(n):
        params = sample_system(Topology.TRIPLE, candidate_rng(SEED, i))
        label = StabilityLabel.STABLE if ma01_stable(params.spec) \
            else StabilityLabel.UNSTABLE_CHAOTIC
        record = StabilityRecord(
            label=label, t_trigger=None, max_abs_delta=0.0,
            n_outer_completed=100, energy_drift_final=0.0,
        )
        rows.append(LabeledRow(params=params, record=record, seed=i, wall_time=0.0))
    return LabeledDataset(Topology.TRIPLE, rows, tag="synthetic")


def main():
    data = Path("data/triple.csv")
    if data.exists():
        ds = read_csv(data, Topology.TRIPLE, tag="triple")
        print(f"loaded {len(ds)} labeled triples from {data}")
    else:
        ds = synthetic_triples()
        print(f"data/triple.csv not found; fabricated {len(ds)} analytic-label triples")

    train_set, test_set = split(ds, frac=0.8, seed=SEED)
    print(f"training on {len(train_set)}, holding out {len(test_set)} ...")
    model = train(train_set.feature_matrix(), train_set.labels(),
                  seed=SEED, topology="triple")
    meta = model.metadata
    print(f"stopped after {meta['epochs_run']} epochs "
          f"(best validation at {meta['best_epoch']}), "
          f"train accuracy {meta['train_score']:.4f}\n")

    truth_stable = test_set.labels() == 0.0
    rows = {
        "mlp": ~model.predict_unstable(test_set.feature_matrix()),
        "ma01": np.array([ma01_stable(r.params.spec) for r in test_set.rows]),
    }
    print(f"{'classifier':<12}{'S':>8}{'P_s':>8}{'P_u':>8}{'R_s':>8}{'R_u':>8}")
    for name, pred in rows.items():
        sc = scores(confusion(truth_stable, pred))
        cells = "".join(
            f"{'-':>8}" if v is None else f"{v:>8.3f}" for v in sc
        )
        print(f"{name:<12}{cells}")

    out = Path("demo_out")
    out.mkdir(exist_ok=True)
    save(model, out / "demo_triple_model.json")
    print(f"\nmodel saved to {out / 'demo_triple_model.json'}")


if __name__ == "__main__":
    main()
