// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "gsc/core.hpp"
#include "gsc/io.hpp"

namespace gsc {

struct RankingConfig {
    double tau1 = 0.1;       // structural (texture-difference) threshold
    double tau2 = 0.05;      // photometric (max-channel difference) threshold
    double lambda = 0.5;     // edge/corner balance inside the texture map
    double eps = 1e-6;       // gradient stabilizer inside G
    double eps_v = 0.01;     // contribution threshold for deficiency counting
    double lambda_ssim = 0.2;
    double eps_prune = 1e-3; // stabilizer in the prune-sampling weight
    int view_stride = 1;     // use every view_stride-th camera
};

/// Rec.601 luminance: 0.299 R + 0.587 G + 0.114 B.
ImageBuffer luminance(const ImageBuffer& img);

/// Texture map: min-max normalized G + lambda*H on the luminance image,
/// where G is the Sobel gradient magnitude (with eps inside the square
/// root) and H the absolute 4-neighbor Laplacian response.  Borders use
/// edge replication; a constant input maps to all zeros.
ImageBuffer texture_map(const ImageBuffer& img, double lambda, double eps);

/// Dual-criterion error mask: a pixel is flagged only when the texture maps
/// differ by more than tau1 AND the max-channel color difference exceeds
/// tau2.  Output is a 1-channel image of 0/1 values.
ImageBuffer error_mask(const ImageBuffer& rendered, const ImageBuffer& gt,
                       const RankingConfig& cfg);

struct DeficiencyResult {
    std::vector<std::int64_t> deficiency;           // C per primitive
    std::vector<double> per_view_losses;            // view_loss per selected view
    std::vector<double> per_view_mask_fraction;     // flagged pixels / total pixels
    // Per selected view, the loss-folded masked contribution per primitive
    // (the raw material of the pruning score).
    std::vector<std::vector<double>> per_view_weighted_error_sums;
    int n_views = 0; // number of selected views
};

/// For every selected camera: render, build the error mask against the
/// ground truth, then re-rasterize with accumulators.  C is the sum of
/// per-view deficiency counts in fixed view order.
DeficiencyResult deficiency_scores(const GaussianCloud& cloud,
                                   const std::vector<Camera>& cameras,
                                   const std::vector<ImageBuffer>& gt_images,
                                   const RankingConfig& cfg);

/// S_d = floor(C / n_views) per primitive.
std::vector<std::int64_t> densification_score(const std::vector<std::int64_t>& deficiency,
                                              int n_views);

/// S_p: per-view loss-weighted masked contributions summed across views
/// (the loss factor is already folded into each view's weighted_error_sum),
/// then min-max normalized to [0,1].  A constant raw vector maps to zeros.
std::vector<double> pruning_score(const GaussianCloud& cloud,
                                  const std::vector<std::vector<double>>& weighted_error_sums,
                                  const std::vector<double>& per_view_losses);

struct PruneFilters {
    double min_opacity = 0.005;
    // Maximum allowed world-space scale, as a fraction of the scene extent
    // (diagonal of the means' bounding box).
    double max_world_scale = 1.0;
};

struct PruneResult {
    GaussianCloud kept;
    std::vector<std::size_t> removed; // ascending original indices
    std::size_t candidate_count = 0;
    std::size_t requested_budget = 0; // pre-clamp
};

/// Removes `budget` primitives drawn without replacement among the
/// candidates (those passing the opacity/scale filters), weighted by
/// w_i = 1 / (eps_prune + (1 - S_p_i)) so high-S_p primitives go first.
/// Sampling uses exponential keys (-ln U / w, keep the smallest), so the
/// draw is deterministic per seed.  A budget above the candidate count is
/// clamped and reported.
PruneResult budgeted_prune(const GaussianCloud& cloud, const std::vector<double>& prune_score,
                           std::size_t budget, std::uint64_t seed,
                           const PruneFilters& filters = {}, double eps_prune = 1e-3);

} // namespace gsc
