"""t-Exponential Triplet Embedding (t-ETE).

Robust low-dimensional embedding from relative-similarity triplets, the
weighted variant for nonlinear dimensionality reduction, and STE / t-STE
baselines.
"""

from tete.genexp import exp_t, log_t, rho_capped
from tete.triplets import (
    LabeledDataset,
    Triplet,
    TripletSet,
    cv_split,
    reverse_noise,
    synth_triplets,
)
from tete.core import (
    DivergenceError,
    EmbedConfig,
    WeightedTripletSet,
    gradient,
    init_embedding,
    objective,
    optimize,
    triplet_loss,
)
from tete.ste import ste_gradient, ste_objective, ste_optimize, triplet_probability
from tete.sampler import (
    compute_weights,
    knn,
    normalize_weights,
    sample_triplets,
    weight_triplets,
)
from tete.evaluation import (
    MetricsReport,
    nn_error,
    run_cv,
    run_noise_sweep,
    triplet_error,
)

__version__ = "0.1.0"

__all__ = [
    "DivergenceError",
    "EmbedConfig",
    "LabeledDataset",
    "MetricsReport",
    "Triplet",
    "TripletSet",
    "WeightedTripletSet",
    "compute_weights",
    "cv_split",
    "exp_t",
    "gradient",
    "init_embedding",
    "knn",
    "log_t",
    "nn_error",
    "normalize_weights",
    "objective",
    "optimize",
    "reverse_noise",
    "rho_capped",
    "run_cv",
    "run_noise_sweep",
    "sample_triplets",
    "ste_gradient",
    "ste_objective",
    "ste_optimize",
    "synth_triplets",
    "triplet_error",
    "triplet_loss",
    "triplet_probability",
    "weight_triplets",
]
