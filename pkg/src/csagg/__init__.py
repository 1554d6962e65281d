"""Conformal score aggregation: multivariate conformal calibration via
quantile envelopes, prediction-set construction, baseline aggregators, and
robust predict-then-optimize routing."""

from .baselines import (
    VoteAggregate,
    best_single_direction,
    bonferroni_envelope,
    majority_vote_membership,
    model_selection,
    split_conformal,
)
from .calibration import (
    CalibrationConfig,
    QuantileEnvelope,
    calibrate,
    compute_t_hat,
    default_direction_count,
    empirical_quantile,
    fit_frontier,
    scalar_envelope,
    single_stage_calibrate,
    split_scores,
)
from .errors import (
    CalibrationWarning,
    CsaggError,
    DegenerateEnvelopeError,
    DegenerateScoreWarning,
    EmptyRegionError,
    InfeasibleProblemError,
    InsufficientDataError,
    InvalidArgumentError,
    ParseError,
    UndefinedMetricError,
)
from .estimators import (
    BonferroniAggregator,
    ConformalScoreAggregator,
    SingleStageAggregator,
)
from .flow import FlowProblem, min_cost_flow_lp, shortest_path_lmo
from .geometry import DirectionSet, project_scores, sample_directions, t_score, t_scores
from .lp import LinearProgram, LPStatus, SimplexResult, simplex_solve
from .regions import (
    ClassificationBatch,
    GridSpec,
    PredictionSet,
    RegionReport,
    RegressionBatch,
    acceptance_region_area,
    classification_set,
    coverage_and_length_report,
    grid_from_targets,
    regression_interval_length,
    residual_grid_lengths,
)
from .robust import (
    InnerMaxResult,
    RobustSolution,
    inner_max,
    robust_route,
    robust_value,
    suboptimality_gap,
)
from .scores import (
    SampleBank,
    aps_score,
    aps_score_matrix,
    ensemble_score,
    gpcp_score,
    residual_score,
    stack_scores,
)
from .synth import (
    ClassificationDataset,
    RoutingDataset,
    ScoreDataset,
    SyntheticSpec,
    generate_classification_ensemble,
    generate_synthetic,
    grid_flow_problem,
    routing_score_matrix,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
