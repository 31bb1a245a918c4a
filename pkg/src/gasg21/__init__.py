"""Robust subspace recovery and clustering from streaming, partially
observed columns, via adaptive stochastic gradient descent on the
Grassmannian (GASG21 and its K-subspaces extension)."""

from .errors import (
    AllColumnsUnusable,
    DegenerateGradient,
    EmptyInliers,
    IndexOutOfRange,
    InvalidShape,
    InvalidSpec,
    RankDeficient,
    ShapeMismatch,
    TooFewColumns,
    Underdetermined,
    ZeroDenominator,
    ZeroVector,
)
from .geometry import (
    ObservedVector,
    RankOneGradient,
    Subspace,
    fit_loss,
    geodesic_step,
    least_squares_weights,
    principal_angle,
    residual_gradient,
    restricted_basis,
    spherize,
)
from .stepsize import (
    AdaptiveStepState,
    StepParams,
    adapt,
    diminishing,
    gradient_inner_product,
    sigmoid,
)
from .recovery import (
    RecoveryConfig,
    RunTrace,
    TraceRecord,
    init_subspace,
    process_vector,
    run,
)
from .clustering import (
    CandidateSet,
    ClusterModel,
    assign_vector,
    candidate_loss,
    cluster,
    column_residuals,
    greedy_select,
    refine,
    seed_candidates,
)
from .synth import GroundTruth, SyntheticSpec, gen_low_rank, gen_union
from .metrics import (
    AngleReport,
    match_and_angles,
    project_columns,
    relative_residual,
    segmentation_error,
)
from . import formats

__version__ = "0.1.0"
