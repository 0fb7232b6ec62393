"""moco: multi-objective counterfactual search for tabular prediction models."""

from .baselines import NoFeasiblePoint, random_search, whatif_nearest
from .evolution import (
    ArchiveEntry,
    Candidate,
    ConfigInvalid,
    EvolutionConfig,
    MocResult,
    ParetoArchive,
    RunObserver,
    run_moc,
)
from .feature_space import (
    DataPoint,
    FeatureDescriptor,
    FeatureSchema,
    MissingValue,
    ObservedDataset,
    ParseError,
    SchemaMismatch,
    clamp_to_ranges,
    gower_delta,
    gower_distance,
    load_dataset,
    load_schema,
)
from .metrics import coverage_rate, dominates, hypervolume, truncate_counterfactuals
from .model_adapter import (
    ExternalModel,
    ExternalProcessFailure,
    IceCurve,
    LinearModel,
    ice_curve,
    load_model,
    predict_batch,
    response_surface_grid,
)
from .objectives import (
    DesiredOutcome,
    ObjectiveContext,
    ObjectiveVector,
    evaluate_objectives,
    o1_target_distance,
    o2_proximity,
    o3_sparsity,
    o4_plausibility,
    reference_point,
)
from .sampler import ConditionalSampler, DatasetTooSmall, fit_samplers, sample_conditional

__version__ = "0.1.0"
