"""Nearest-neighbor search on noisy low-rank data via split-half SVD denoising.

Data model: a d x (n+1) matrix holds n points column-wise with the query as
the last column.  A low-rank latent matrix B is observed through entrywise
Gaussian noise as A = B + C, and the task is to find the query's nearest
neighbor among the *latent* points from A alone.  Point indices are 1-based
across the public API.
"""

from .algorithms import (
    NnsAnswer,
    SplitView,
    estimate_noise_sigma,
    estimated_sq_distances,
    knn,
    naive_nns,
    oracle_nns,
    split,
    svd_split_nns,
)
from .errors import (
    FormatError,
    GenerationError,
    IngestError,
    NumericError,
    ParameterError,
    SnnsError,
    SweepError,
)
from .harness import (
    Algorithm,
    ExperimentRecord,
    SkStudyResult,
    SweepConfig,
    SyntheticFamily,
    emit_csv,
    emit_plot,
    noise_threshold,
    parse_csv,
    sk_dependence_study,
    success_probability,
    success_probability_over_instances,
    sweep,
)
from .linalg import (
    OrthonormalBasis,
    numerical_rank,
    project,
    rank_k_approximation,
    singular_value,
    spectral_norm,
    top_k_left_singular_subspace,
)
from .lowerbounds import (
    DistinguishabilityResult,
    kl_isotropic_gaussians,
    swap_kl,
    swap_test_experiment_eps,
    swap_test_experiment_k,
    tv_mean_shift_bound,
)
from .model import (
    LatentInstance,
    NoisyInstance,
    derive_seed,
    embed_query_collinear,
    generate_synthetic,
    instance_sk,
    perturb,
    read_instance,
    seeded_rng,
    synthetic_points,
    verify_gap,
    write_instance,
)
from .thresholds import (
    BindingTerm,
    Regime,
    ThresholdReport,
    classify_regime,
    corollary_interval_holds,
    theorem_sigma_cap,
)

__version__ = "0.1.0"
