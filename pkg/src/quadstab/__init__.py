"""Stability of hierarchical triple and quadruple star systems.

Labels systems stable / unstable by direct N-body integration with a
ghost-orbit chaos indicator, compares against the nested application of
the Mardling & Aarseth analytic criterion, and trains small neural
classifiers on the labeled sets.
"""

from .criteria import (
    TripleView,
    lk_period_ratio,
    lk_timescale,
    ma01_quad_stable,
    ma01_rp_crit_ratio,
    ma01_stable,
    ma01_triple_stable,
    nested_triples,
    triple_view,
)
from .metrics import (
    BinnedFractions,
    ConfusionCounts,
    Scores,
    SliceGrid,
    SliceSpec,
    bad_fraction_bins,
    bad_fraction_by_slice,
    confusion,
    make_slice,
    mlp_nested_triple_classifier,
    mlp_quad_classifier,
    scores,
    slice_grid,
    slice_system,
)
from .mlp import Hyperparams, MLPModel, gradient_check, train
from .mlp import load as load_model
from .mlp import save as save_model
from .nbody import (
    IntegratorConfig,
    NumericalFailure,
    StreamingIntegrator,
    Trajectory,
    WallExpired,
    angular_momentum,
    integrate,
    total_energy,
)
from .orbits import (
    G,
    CartesianSystem,
    HierarchySpec,
    OrbitElements,
    Topology,
    elements_to_rel_state,
    kepler_solve,
    mutual_inclination,
    nested_elements,
    orbital_period,
    realize_system,
    rel_state_to_elements,
)
from .sampling import (
    LabeledDataset,
    LabeledRow,
    QuadParams2p2,
    QuadParams3p1,
    SamplingError,
    TripleParams,
    build_dataset,
    ma01_thinning,
    process_candidate,
    read_csv,
    sample_system,
    split,
    write_csv,
)
from .stability import (
    Boundedness,
    StabilityLabel,
    StabilityRecord,
    boundedness_check,
    classify_stability,
    delta,
    is_unbound,
    make_ghost,
)
from .cli import mlp_classifier_2p2, mlp_classifier_3p1

__all__ = [
    "G",
    "BinnedFractions",
    "Boundedness",
    "CartesianSystem",
    "ConfusionCounts",
    "HierarchySpec",
    "Hyperparams",
    "IntegratorConfig",
    "LabeledDataset",
    "LabeledRow",
    "MLPModel",
    "NumericalFailure",
    "OrbitElements",
    "QuadParams2p2",
    "QuadParams3p1",
    "SamplingError",
    "Scores",
    "SliceGrid",
    "SliceSpec",
    "StabilityLabel",
    "StabilityRecord",
    "StreamingIntegrator",
    "Topology",
    "Trajectory",
    "TripleParams",
    "TripleView",
    "WallExpired",
    "angular_momentum",
    "bad_fraction_bins",
    "bad_fraction_by_slice",
    "boundedness_check",
    "build_dataset",
    "classify_stability",
    "confusion",
    "delta",
    "elements_to_rel_state",
    "gradient_check",
    "integrate",
    "is_unbound",
    "kepler_solve",
    "lk_period_ratio",
    "lk_timescale",
    "load_model",
    "ma01_quad_stable",
    "ma01_rp_crit_ratio",
    "ma01_stable",
    "ma01_thinning",
    "ma01_triple_stable",
    "make_ghost",
    "make_slice",
    "mlp_classifier_2p2",
    "mlp_classifier_3p1",
    "mlp_nested_triple_classifier",
    "mlp_quad_classifier",
    "mutual_inclination",
    "nested_elements",
    "nested_triples",
    "orbital_period",
    "process_candidate",
    "read_csv",
    "realize_system",
    "rel_state_to_elements",
    "sample_system",
    "save_model",
    "scores",
    "slice_grid",
    "slice_system",
    "split",
    "total_energy",
    "train",
    "triple_view",
    "write_csv",
]

__version__ = "0.1.0"
