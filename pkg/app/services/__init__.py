"""
Services module - geometry, losses, gradients and the tools built on them
"""
from .autodiff import ViewSynthesisObjective, finite_diff, gradcheck, loss_and_gradients
from .augment import apply_effect, augment
from .depth_eval import aggregate, compute_metrics, format_report
from .geometry import (
    assemble_k,
    backproject,
    bilinear_sample,
    compose_transform,
    invert_k,
    kt_transfer,
    project,
    warp_image,
)
from .losses import min_reprojection_loss, photometric_error, smoothness_loss, ssim, total_loss
from .pyramid import build_pyramid
from .scene_synthesis import make_scene, render_scene
from .semantic_adjust import adjust_disparity, merge_masks
from .toytrain import adamw_step, cosine_lr, optimize
from .upsample import nearest_upsample, pixel_shuffle, pixel_unshuffle

__all__ = [
    "ViewSynthesisObjective", "finite_diff", "gradcheck", "loss_and_gradients",
    "apply_effect", "augment",
    "aggregate", "compute_metrics", "format_report",
    "assemble_k", "backproject", "bilinear_sample", "compose_transform",
    "invert_k", "kt_transfer", "project", "warp_image",
    "min_reprojection_loss", "photometric_error", "smoothness_loss", "ssim", "total_loss",
    "build_pyramid",
    "make_scene", "render_scene",
    "adjust_disparity", "merge_masks",
    "adamw_step", "cosine_lr", "optimize",
    "nearest_upsample", "pixel_shuffle", "pixel_unshuffle",
]
