"""gapkit: analyze, explain, and close the modality gap in paired embeddings."""

from .core import (
    LabeledEmbeddings,
    PairedEmbeddings,
    PrincipalBasis,
    modality_mean,
    nearest_neighbor,
    nearest_neighbors,
    normalize_rows,
    pairwise_sq_dist,
    principal_components,
    project_out_subspace,
)
from .contrastive import (
    GradientPair,
    SoftAssignment,
    StochasticityStats,
    contrastive_loss,
    loss_gradient,
    s_linear_approx,
    soft_assignments,
    stochasticity_stats,
)
from .gap import (
    GapReport,
    NoiseCorrelationScore,
    global_gap,
    local_gaps,
    noise_correlation_score,
    orthogonality_report,
)
from .closing import (
    ClosingPlan,
    apply_plan,
    approx_orthogonal_direction,
    exact_orthogonal_direction,
    make_closing_plan,
    quantization_aware_lambda,
)
from .robustness import (
    NoiseModel,
    RobustnessCurve,
    empirical_robustness,
    quantize_matrix,
    recall_at_1,
    robustness_curve,
    sample_noise,
    zero_shot_accuracy,
)
from .simulate import (
    DimCollapse,
    Explicit,
    GaussianClusters,
    InfoImbalance,
    SimulationConfig,
    TrajectoryRecord,
    gd_step,
    init_scenario,
    run_simulation,
    run_to_final,
    temperature_sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
