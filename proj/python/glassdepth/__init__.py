"""Depth completion for transparent objects."""

from ._core import (
    CameraIntrinsics,
    ConfigError,
    IoError,
    NumericalError,
    backproject,
    backproject_cloud,
    build_heightmap,
    complete_depth,
    depth_metrics,
    derive_boundaries,
    eval_resize_depth,
    eval_resize_mask,
    mask_metrics,
    normal_metrics,
    project,
    render_scene,
    rotation_stack,
)

__all__ = [
    "CameraIntrinsics",
    "ConfigError",
    "IoError",
    "NumericalError",
    "backproject",
    "backproject_cloud",
    "build_heightmap",
    "complete_depth",
    "depth_metrics",
    "derive_boundaries",
    "eval_resize_depth",
    "eval_resize_mask",
    "mask_metrics",
    "normal_metrics",
    "project",
    "render_scene",
    "rotation_stack",
]
