"""Graph-signal denoising under a spectral smoothness prior.

The package models observed vertex signals as corruptions of an unknown
smooth signal and recovers the most likely original under three noise
models: additive Gaussian noise in the frequency domain, uniform random
scaling, and Bernoulli dropout over a suspicion set.  Comparison filters
and a reproducible experiment harness round out the library.
"""

__version__ = "0.1.0"

from .baselines import (
    GridShape,
    band_filter,
    local_average,
    magic_filter,
    nuclear_norm_denoise,
)
from .bernoulli import (
    BernoulliConfig,
    SparseUpdate,
    bernoulli_denoise,
    l0_greedy,
    lasso_coordinate_descent,
    no_trust_denoise,
)
from .errors import (
    ConvergenceError,
    DegenerateSignalError,
    GraphDenoiseError,
    GraphDisconnectedError,
    InvalidArgumentError,
    NotPositiveDefiniteError,
    NumericalFailureError,
    SingularSystemError,
    TooLargeError,
)
from .experiments import (
    ExperimentSpec,
    ExperimentTable,
    NoiseSpec,
    add_noise,
    ccp_vs_pg_benchmark,
    make_cluster_data,
    parse_experiment_spec,
    pearson_correlation,
    relative_error,
    run_experiment,
)
from .gaussian import (
    GaussianParams,
    denoise_gaussian,
    estimate_tau,
    estimate_tau_multi,
    nonneg_moment_fit,
)
from .graphs import (
    Graph,
    VertexSet,
    boundary,
    build_grid_graph,
    build_knn_graph,
    dirichlet_energy,
    incidence_apply,
    incidence_columns,
    incidence_transpose_apply,
    laplacian_apply,
    laplacian_squared_trace,
    laplacian_trace,
    restrict_adjacency,
    restrict_laplacian,
)
from .result import DenoiseResult, DescentTrace
from .solvers import SddOperator, SolveReport, cg_solve, harmonic_interpolate
from .spectral import (
    FilterSpec,
    SpectralBasis,
    apply_filter,
    eigendecompose,
    gft,
    igft,
    map_error_covariance_diag,
    sample_prior,
)
from .uniform import (
    UniformFeasibleRegion,
    ccp_denoise,
    projected_gradient_denoise,
    uniform_loss,
)
