#!/usr/bin/env python3
"""Train the three shipped classifiers from the CSVs under data/.

Usage: python3 tools/train_models.py [--seed 20260814] [--data data] [--out models]

Each model trains on an 80% split of its dataset; the held-out score
lands in the model metadata. Deterministic for a fixed seed.
"""

import argparse
import json
import time
from pathlib import Path

from quadstab.mlp import train, save
from quadstab.orbits import Topology
from quadstab.sampling import read_csv, split

DATASETS = {
    "triple": (Topology.TRIPLE, "triple.csv", "mlp_triple.json"),
    "quad_2p2": (Topology.QUAD_2P2, "quad_2p2.csv", "mlp_quad_2p2.json"),
    "quad_3p1": (Topology.QUAD_3P1, "quad_3p1.csv", "mlp_quad_3p1.json"),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=20260814)
    ap.add_argument("--data", default="data")
    ap.add_argument("--out", default="models")
    ap.add_argument("--only", default=None, help="comma list of tags")
    args = ap.parse_args()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    only = set(args.only.split(",")) if args.only else set(DATASETS)

    summary = {}
    for tag, (topology, csv_name, model_name) in DATASETS.items():
        if tag not in only:
            continue
        csv_path = Path(args.data) / csv_name
        if not csv_path.exists():
            print(f"[{tag}] skipped: {csv_path} missing")
            continue
        ds = read_csv(csv_path, topology, tag=tag)
        tr, te = split(ds, frac=0.8, seed=args.seed)
        t0 = time.perf_counter()
        model = train(tr.feature_matrix(), tr.labels(), seed=args.seed, topology=tag)
        wall = time.perf_counter() - t0
        pred = model.predict_unstable(te.feature_matrix())
        test_score = float((pred == (te.labels() == 1.0)).mean())
        model.metadata["test_score"] = test_score
        model.metadata["train_rows"] = len(tr)
        model.metadata["data_file"] = csv_name
        path = out_dir / model_name
        save(model, path)
        summary[tag] = {
            "rows": len(ds), "train_score": model.metadata["train_score"],
            "test_score": test_score, "epochs": model.metadata["epochs_run"],
            "wall_s": round(wall, 1),
        }
        print(f"[{tag}] {len(tr)}/{len(te)} rows, epochs {model.metadata['epochs_run']}, "
              f"train {model.metadata['train_score']:.4f}, test {test_score:.4f} -> {path}")
    if summary:
        summary_path = out_dir / "train_summary.json"
        if summary_path.exists():  # partial --only runs merge in
            merged = json.loads(summary_path.read_text())
            merged.update(summary)
            summary = merged
        with open(summary_path, "w") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")


if __name__ == "__main__":
    main()
