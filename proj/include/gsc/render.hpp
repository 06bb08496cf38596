// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gsc/core.hpp"
#include "gsc/io.hpp"

namespace gsc {

/// A splat after perspective projection into one camera.
struct ProjectedGaussian {
    double mean2d[2] = {0.0, 0.0}; // pixel coordinates (pixel centers on integers)
    double cov2d[3] = {0.0, 0.0, 0.0}; // symmetric 2x2 as (xx, xy, yy), pixels^2
    double depth = 0.0;                // camera-space z
    std::int64_t source_index = -1;
};

struct RenderOptions {
    double near = 0.01;      // cull at or before this camera depth
    double alpha_clamp = 0.99;
    double term_transmittance = 1e-4; // stop blending a pixel below this T

    bool record_accumulators = false;
    const ImageBuffer* error_mask = nullptr; // 1-channel, camera resolution
    double view_loss = 1.0;                  // folded into weighted_error_sum
    double eps_v = 0.01;                     // contribution threshold for counting
};

struct RenderOutput {
    ImageBuffer image; // RGB
    ImageBuffer alpha; // 1 channel, accumulated opacity (1 - final transmittance)
    // Present (sized to the cloud) only when record_accumulators was set:
    std::vector<std::int64_t> deficiency_count; // masked pixels with contribution > eps_v
    std::vector<double> weighted_error_sum;     // sum of view_loss * contribution there
};

/// Perspective projection of one splat; nullopt when culled (camera depth <=
/// near, or the 3-sigma ellipse misses the viewport).  cov2d is J W Sigma
/// W^T J^T plus an isotropic 0.3 px^2 low-pass term.
std::optional<ProjectedGaussian> project_gaussian(const GaussianPrimitive& g, const Camera& cam,
                                                  double near = 0.01);

/// Depth-sorted front-to-back alpha blending of the whole cloud into cam's
/// viewport.  Contribution of splat i at pixel u is w = a'_i * T_u with
/// a'_i = alpha_i * exp(-0.5 d^T cov2d^-1 d) clamped to alpha_clamp, and a
/// splat touches exactly the pixels inside its 3-sigma axis-aligned box.
/// With record_accumulators and an error_mask, every masked pixel where
/// w > eps_v bumps deficiency_count[i] and adds view_loss * w to
/// weighted_error_sum[i].
RenderOutput rasterize(const GaussianCloud& cloud, const Camera& cam,
                       const RenderOptions& options = {});

/// 10*log10(1/MSE) over all channels; +infinity for identical images.
double psnr(const ImageBuffer& a, const ImageBuffer& b);
bool psnr_is_infinite(double value);

/// Mean SSIM over fully-interior 11x11 Gaussian windows (sigma 1.5,
/// C1=0.01^2, C2=0.03^2 on the [0,1] range), averaged across channels.
/// Requires both dimensions >= 11.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

/// (1-lambda)*meanL1 + lambda*(1-ssim).
double view_loss(const ImageBuffer& a, const ImageBuffer& b, double lambda_ssim);

} // namespace gsc
