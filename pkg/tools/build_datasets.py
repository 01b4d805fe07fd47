"""Build the labeled stability datasets for all topologies.

Sequential on purpose: the wall cap that defines the Timeout class is
wall-clock time, so sharing the core between builds would mislabel
marginal systems. Each topology gets a progress file, making the build
resumable and byte-reproducible.

Usage: python tools/build_datasets.py [--n 4000] [--seed 20260814] [--out data]
"""

import argparse
import json
import time
from pathlib import Path

from quadstab.nbody import IntegratorConfig
from quadstab.orbits import Topology
from quadstab.sampling import build_dataset, write_csv

ORDER = [Topology.TRIPLE, Topology.QUAD_2P2, Topology.QUAD_3P1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=20260814)
    ap.add_argument("--out", type=Path, default=Path("data"))
    ap.add_argument("--topology", default="all", choices=["all"] + [t.value for t in ORDER])
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    cfg = IntegratorConfig()
    todo = ORDER if args.topology == "all" else [Topology(args.topology)]
    stats_path = args.out / "build_stats.json"
    stats = json.loads(stats_path.read_text()) if stats_path.exists() else {}

    for topo in todo:
        t0 = time.perf_counter()
        ds, timeouts = build_dataset(
            topo,
            args.n,
            args.seed,
            cfg,
            progress_path=args.out / f"progress_{topo.value}.jsonl",
            log_every=200,
        )
        wall = time.perf_counter() - t0
        write_csv(ds, args.out / f"{topo.value}.csv")
        write_csv(timeouts, args.out / f"{topo.value}_timeouts.csv")
        n_lab = len(ds.rows) + len(timeouts.rows)
        stats[topo.value] = {
            "master_seed": args.seed,
            "n_kept": len(ds.rows),
            "n_timeout": len(timeouts.rows),
            "timeout_fraction": len(timeouts.rows) / n_lab,
            "n_unstable": int(ds.labels().sum()),
            "build_wall_s": round(wall, 1),
            "rel_tolerance": cfg.rel_tolerance,
            "samples_per_outer": cfg.output_samples_per_outer_orbit,
            "max_wall_seconds": cfg.max_wall_seconds,
            "n_outer": 100,
        }
        stats_path.write_text(json.dumps(stats, indent=2) + "\n")
        print(f"[{topo.value}] done: {stats[topo.value]}", flush=True)


if __name__ == "__main__":
    main()
