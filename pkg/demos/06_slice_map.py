#!/usr/bin/env python3
"""Map a 2D parameter slice of quadruple stability and overlay classifiers.

Fixes a named parameter combination (here the fiducial 2+2 row: equal
masses, first binary at alpha=0.25, circular orbits) and scans the
second binary's size against its eccentricity. Every cell is labeled by
direct integration, then compared with the analytic criterion and, when
models/mlp_quad_2p2.json exists, the trained network.

Coarse settings (6x6 cells, 10 outer orbits) keep this to ~2 minutes;
the shipped evaluation uses finer grids and the full 100 orbits.
"""

from pathlib import Path

from quadstab.criteria import ma01_stable
from quadstab.metrics import (
    bad_fraction_by_slice,
    make_slice,
    mlp_quad_classifier,
    slice_grid,
    write_grid_csv,
)
from quadstab.mlp import load
from quadstab.nbody import IntegratorConfig
from quadstab.orbits import Topology
from quadstab.stability import StabilityLabel


def ascii_map(grid, name=None):
    # rows top-down in the varied parameter, columns left-right in alpha
    lines = []
    for j in reversed(range(len(grid.other_values))):
        cells = []
        for i in range(len(grid.alpha_values)):
            label = grid.labels[i, j]
            if label is StabilityLabel.TIMEOUT:
                ch = "?"
            elif label is StabilityLabel.STABLE:
                ch = "."
            else:
                ch = "#"
            if name is not None and label is not StabilityLabel.TIMEOUT:
                truth = label is StabilityLabel.STABLE
                if grid.predictions[name][i, j] != truth:
                    ch = "x"
            cells.append(ch)
        lines.append(f"  e={grid.other_values[j]:.2f}  " + " ".join(cells))
    footer = "         " + " ".join(f"{a:.2f}"[1:] for a in grid.alpha_values)
    return "\n".join(lines + [footer + "   (alpha)"])


def main():
    classifiers = {"ma01": ma01_stable}
    model_path = Path("models/mlp_quad_2p2.json")
    if model_path.exists():
        classifiers["mlp"] = mlp_quad_classifier(load(model_path))
        print(f"using {model_path} alongside the analytic criterion")
    else:
        print("models/mlp_quad_2p2.json not found; analytic criterion only")

    spec = make_slice(Topology.QUAD_2P2, "Fiducial", varied="e",
                      n_alpha=6, n_other=6)
    cfg = IntegratorConfig(max_wall_seconds=20.0)
    print("integrating 36 cells ...")
    grid = slice_grid(spec, classifiers, cfg, n_outer=10)

    print("\ntrue labels ('.' stable, '#' unstable, '?' timeout):")
    print(ascii_map(grid))
    for name in classifiers:
        print(f"\n{name} disagreements marked 'x':")
        print(ascii_map(grid, name))

    print("\nbad fraction (wrong calls / evaluated cells):")
    for name, frac in bad_fraction_by_slice(grid).items():
        print(f"  {name:6s} {'-' if frac is None else f'{frac:.3f}'}")

    out = Path("demo_out")
    out.mkdir(exist_ok=True)
    write_grid_csv(grid, out / "slice_fiducial_e.csv")
    print(f"\ncell table written to {out / 'slice_fiducial_e.csv'}")


if __name__ == "__main__":
    main()
