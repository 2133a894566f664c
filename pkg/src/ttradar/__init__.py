"""ttradar: tensor-train denoising and joint parameter estimation for
4D FMCW MIMO radar signal tensors."""

from .decomp import (
    CpdModel,
    TTModel,
    cpd_als,
    cpd_to_tt,
    load_model,
    mdl_rank,
    reconstruct,
    save_model,
    tt_mdl,
    tt_recompress,
)
from .errors import (
    IngestError,
    InvalidArgumentError,
    NumericFailureError,
    ScenarioError,
    TTRadarError,
)
from .estimate import (
    EstimationResult,
    SmoothingPlan,
    estimate,
    fba,
    joint_nmse,
    spatial_smooth,
)
from .estimators import RadarParameterEstimator, TensorTrainDenoiser
from .metrics import output_snr_db, ra_profile, rd_profile
from .radar import (
    NoiseSpec,
    RadarConfig,
    SpatialFrequencies,
    TargetParams,
    add_noise,
    desk_scenario,
    ingest_adc,
    load_scenario,
    save_scenario,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "CpdModel",
    "TTModel",
    "cpd_als",
    "cpd_to_tt",
    "load_model",
    "mdl_rank",
    "reconstruct",
    "save_model",
    "tt_mdl",
    "tt_recompress",
    "IngestError",
    "InvalidArgumentError",
    "NumericFailureError",
    "ScenarioError",
    "TTRadarError",
    "EstimationResult",
    "SmoothingPlan",
    "estimate",
    "fba",
    "joint_nmse",
    "spatial_smooth",
    "RadarParameterEstimator",
    "TensorTrainDenoiser",
    "output_snr_db",
    "ra_profile",
    "rd_profile",
    "NoiseSpec",
    "RadarConfig",
    "SpatialFrequencies",
    "TargetParams",
    "add_noise",
    "desk_scenario",
    "ingest_adc",
    "load_scenario",
    "save_scenario",
    "synthesize",
    "__version__",
]
