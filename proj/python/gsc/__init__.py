# Copyright Contributors to the gsc Project
# SPDX-License-Identifier: Apache-2.0
"""Gaussian-splat compaction toolkit.

Thin Python surface over the C++ core: point-cloud IO, rendering,
multi-view contribution ranking, budgeted pruning, transport-based
aggregation and contractive splitting.
"""

from ._core import (
    Camera,
    Cloud,
    GscError,
    Image,
    Primitive,
    __version__,
    aggregate,
    budgeted_prune,
    bures_wasserstein_sq,
    eta_residual,
    gelbrich_feature,
    gelbrich_sq,
    max_threads,
    psnr,
    rank_scores,
    read_cameras,
    read_image,
    read_ply,
    render,
    set_max_threads,
    split,
    split_marked,
    ssim,
    synth_scene,
    view_loss,
    write_cameras,
    write_image,
    write_ply,
)

__all__ = [
    "Camera",
    "Cloud",
    "GscError",
    "Image",
    "Primitive",
    "__version__",
    "aggregate",
    "budgeted_prune",
    "bures_wasserstein_sq",
    "eta_residual",
    "gelbrich_feature",
    "gelbrich_sq",
    "max_threads",
    "psnr",
    "rank_scores",
    "read_cameras",
    "read_image",
    "read_ply",
    "render",
    "set_max_threads",
    "split",
    "split_marked",
    "ssim",
    "synth_scene",
    "view_loss",
    "write_cameras",
    "write_image",
    "write_ply",
]
