"""BOSS and randomised BOSS (RBOSS) dictionary classifiers for time series."""

from rboss.boss import (
    BaseBossModel,
    TrainEstimate,
    boss_distance,
    build_base_boss,
    fast_loocv_estimate,
    loocv_estimate,
    predict_1nn,
)
from rboss.checkpoint import BuildCheckpoint, load_checkpoint, resume_build, save_checkpoint
from rboss.data import (
    Fraction,
    LabeledDataset,
    MaxTotal,
    load_dataset,
    parse_dataset,
    stratified_resample,
    subsample,
    z_normalize,
)
from rboss.ensemble import (
    EnsembleModel,
    FastLoocv,
    FullLoocv,
    RbossConfig,
    build_grid_boss,
    cawpe_weight,
    enumerate_parameter_space,
    predict_ensemble,
)
from rboss.randomised import RbossBuilder, build_rboss, build_rboss_contracted
from rboss.sfa import SfaParameters, bag_of_words, fit_mcb
from rboss.synthetic import SyntheticSpec, generate_synthetic

__version__ = "0.1.0"
