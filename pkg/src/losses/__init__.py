from src.losses.downsample import downsample, downsample_array
from src.losses.features import FixedFeatureExtractor
from src.losses.objectives import (
    FinalObjective,
    LossTerms,
    final_loss,
    final_loss_terms,
    pyramid_loss,
    rec_loss,
    removal_loss,
    removal_objective,
    sr_loss,
    sr_objective,
    variation_loss,
)

__all__ = [
    "FinalObjective",
    "FixedFeatureExtractor",
    "LossTerms",
    "downsample",
    "downsample_array",
    "final_loss",
    "final_loss_terms",
    "pyramid_loss",
    "rec_loss",
    "removal_loss",
    "removal_objective",
    "sr_loss",
    "sr_objective",
    "variation_loss",
]
