from src.model.checkpoint import load_checkpoint, save_checkpoint
from src.model.fdnet import FDNet
from src.model.lfpnet import LatentState, LFPNet, sample_initial_latent
from src.model.vdp import Rollout, VideoDynamicsPrior

__all__ = [
    "FDNet",
    "LFPNet",
    "LatentState",
    "Rollout",
    "VideoDynamicsPrior",
    "load_checkpoint",
    "sample_initial_latent",
    "save_checkpoint",
]
