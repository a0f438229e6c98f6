"""Gated-fusion classifier over factor-branch features, with training,
Jacobian alignment, and full-rankness verification."""

from .features import BRANCHES, H, BranchFeatures, extract_branch_features
from .model import (
    AllMasked,
    DegenerateSensitivity,
    GateConfig,
    GateParams,
    HeadParams,
    binary_ce,
    forward_logit,
    fuse,
    fuse_and_predict,
    gate,
    gate_weights,
    head_logit,
    init_params,
    jacobian_alignment_loss,
    kl_divergence,
    load_checkpoint,
    params_pytree,
    predict_proba,
    sample_loss,
    save_checkpoint,
    sensitivity_target,
    sensitivity_target_checked,
    sensitivity_vectors,
    total_loss,
)
from .rank import RankReport, design_matrix_rank, elimination_rank, jacobian_column_rank
from .train import LossBreakdown, NonFiniteLoss, TrainConfig, TrainResult, train

__all__ = [
    "AllMasked", "BRANCHES", "BranchFeatures", "DegenerateSensitivity",
    "GateConfig", "GateParams", "H", "HeadParams", "LossBreakdown",
    "NonFiniteLoss", "RankReport", "TrainConfig", "TrainResult", "binary_ce",
    "design_matrix_rank", "elimination_rank", "extract_branch_features",
    "forward_logit", "fuse", "fuse_and_predict", "gate", "gate_weights",
    "head_logit", "init_params", "jacobian_alignment_loss",
    "jacobian_column_rank", "kl_divergence", "load_checkpoint",
    "params_pytree", "predict_proba", "sample_loss", "save_checkpoint",
    "sensitivity_target", "sensitivity_target_checked",
    "sensitivity_vectors", "total_loss", "train",
]
