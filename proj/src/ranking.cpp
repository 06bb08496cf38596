// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include "gsc/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gsc/errors.hpp"
#include "gsc/log.hpp"
#include "gsc/render.hpp"
#include "gsc/rng.hpp"

namespace gsc {

namespace {

/// Luminance value with edge replication outside the image.
inline double lum_at(const ImageBuffer& l, int x, int y) {
    x = std::clamp(x, 0, l.width - 1);
    y = std::clamp(y, 0, l.height - 1);
    return l.pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(l.width) +
                    static_cast<std::size_t>(x)];
}

} // namespace

ImageBuffer luminance(const ImageBuffer& img) {
    if (img.channels != 3)
        throw InvalidInputError("luminance: input must have 3 channels");
    ImageBuffer out = ImageBuffer::create(img.width, img.height, 1);
    for (std::size_t p = 0; p < out.pixels.size(); ++p) {
        out.pixels[p] = 0.299 * img.pixels[p * 3 + 0] + 0.587 * img.pixels[p * 3 + 1] +
                        0.114 * img.pixels[p * 3 + 2];
    }
    return out;
}

ImageBuffer texture_map(const ImageBuffer& img, double lambda, double eps) {
    if (img.width < 3 || img.height < 3)
        throw InvalidInputError("texture_map: image must be at least 3x3");
    const ImageBuffer l = luminance(img);

    ImageBuffer out = ImageBuffer::create(img.width, img.height, 1);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            // Sobel gradients.
            const double gx = -lum_at(l, x - 1, y - 1) + lum_at(l, x + 1, y - 1) -
                              2.0 * lum_at(l, x - 1, y) + 2.0 * lum_at(l, x + 1, y) -
                              lum_at(l, x - 1, y + 1) + lum_at(l, x + 1, y + 1);
            const double gy = -lum_at(l, x - 1, y - 1) - 2.0 * lum_at(l, x, y - 1) -
                              lum_at(l, x + 1, y - 1) + lum_at(l, x - 1, y + 1) +
                              2.0 * lum_at(l, x, y + 1) + lum_at(l, x + 1, y + 1);
            const double g = std::sqrt(gx * gx + gy * gy + eps);
            // 4-neighbor Laplacian.
            const double lap = lum_at(l, x, y - 1) + lum_at(l, x - 1, y) +
                               lum_at(l, x + 1, y) + lum_at(l, x, y + 1) -
                               4.0 * lum_at(l, x, y);
            const double v = g + lambda * std::abs(lap);
            out.at(x, y, 0) = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double range = hi - lo;
    if (range <= 0.0) {
        std::fill(out.pixels.begin(), out.pixels.end(), 0.0);
        return out;
    }
    for (double& v : out.pixels)
        v = (v - lo) / range;
    return out;
}

ImageBuffer error_mask(const ImageBuffer& rendered, const ImageBuffer& gt,
                       const RankingConfig& cfg) {
    if (!rendered.same_shape(gt))
        throw InvalidInputError("error_mask: image shapes do not match");
    const ImageBuffer t_rendered = texture_map(rendered, cfg.lambda, cfg.eps);
    const ImageBuffer t_gt = texture_map(gt, cfg.lambda, cfg.eps);

    ImageBuffer mask = ImageBuffer::create(rendered.width, rendered.height, 1);
    for (std::size_t p = 0; p < mask.pixels.size(); ++p) {
        const bool structural = std::abs(t_rendered.pixels[p] - t_gt.pixels[p]) > cfg.tau1;
        if (!structural)
            continue;
        double photometric = 0.0;
        for (int c = 0; c < 3; ++c)
            photometric = std::max(photometric,
                                   std::abs(rendered.pixels[p * 3 + static_cast<std::size_t>(c)] -
                                            gt.pixels[p * 3 + static_cast<std::size_t>(c)]));
        if (photometric > cfg.tau2)
            mask.pixels[p] = 1.0;
    }
    return mask;
}

DeficiencyResult deficiency_scores(const GaussianCloud& cloud,
                                   const std::vector<Camera>& cameras,
                                   const std::vector<ImageBuffer>& gt_images,
                                   const RankingConfig& cfg) {
    if (cameras.size() != gt_images.size())
        throw InvalidInputError("deficiency_scores: need one ground-truth image per camera");
    if (cfg.view_stride < 1)
        throw InvalidInputError("deficiency_scores: view_stride must be >= 1");

    DeficiencyResult result;
    result.deficiency.assign(cloud.size(), 0);

    for (std::size_t v = 0; v < cameras.size(); v += static_cast<std::size_t>(cfg.view_stride)) {
        const Camera& cam = cameras[v];
        const ImageBuffer& gt = gt_images[v];
        if (gt.width != cam.width || gt.height != cam.height || gt.channels != 3)
            throw InvalidInputError("deficiency_scores: ground-truth image " +
                                    std::to_string(v) + " does not match its camera");

        RenderOptions plain;
        plain.eps_v = cfg.eps_v;
        const RenderOutput first = rasterize(cloud, cam, plain);

        const ImageBuffer mask = error_mask(first.image, gt, cfg);
        const double loss = view_loss(first.image, gt, cfg.lambda_ssim);

        RenderOptions with_acc = plain;
        with_acc.record_accumulators = true;
        with_acc.error_mask = &mask;
        with_acc.view_loss = loss;
        const RenderOutput second = rasterize(cloud, cam, with_acc);

        for (std::size_t i = 0; i < cloud.size(); ++i)
            result.deficiency[i] += second.deficiency_count[i];
        result.per_view_losses.push_back(loss);
        double flagged = 0.0;
        for (double m : mask.pixels)
            flagged += m;
        result.per_view_mask_fraction.push_back(flagged /
                                                static_cast<double>(mask.pixels.size()));
        result.per_view_weighted_error_sums.push_back(second.weighted_error_sum);
        ++result.n_views;
    }
    return result;
}

std::vector<std::int64_t> densification_score(const std::vector<std::int64_t>& deficiency,
                                              int n_views) {
    if (n_views < 1)
        throw InvalidInputError("densification_score: n_views must be >= 1");
    std::vector<std::int64_t> s_d(deficiency.size());
    for (std::size_t i = 0; i < deficiency.size(); ++i)
        s_d[i] = deficiency[i] / n_views; // floor for non-negative counts
    return s_d;
}

std::vector<double> pruning_score(const GaussianCloud& cloud,
                                  const std::vector<std::vector<double>>& weighted_error_sums,
                                  const std::vector<double>& per_view_losses) {
    if (weighted_error_sums.size() != per_view_losses.size())
        throw InvalidInputError("pruning_score: accumulator/loss view counts do not match");
    std::vector<double> raw(cloud.size(), 0.0);
    for (const auto& wes : weighted_error_sums) {
        if (wes.size() != cloud.size())
            throw InvalidInputError("pruning_score: accumulator length does not match cloud");
        // The per-view loss factor was folded into weighted_error_sum during
        // rasterization, so the cross-view reduction is a plain sum.
        for (std::size_t i = 0; i < cloud.size(); ++i)
            raw[i] += wes[i];
    }
    if (raw.empty())
        return raw;
    const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    const double lo = *lo_it, hi = *hi_it;
    const double range = hi - lo;
    if (range <= 0.0) {
        std::fill(raw.begin(), raw.end(), 0.0);
        return raw;
    }
    for (double& v : raw)
        v = (v - lo) / range;
    return raw;
}

PruneResult budgeted_prune(const GaussianCloud& cloud, const std::vector<double>& prune_score,
                           std::size_t budget, std::uint64_t seed, const PruneFilters& filters,
                           double eps_prune) {
    if (prune_score.size() != cloud.size())
        throw InvalidInputError("budgeted_prune: prune_score length does not match cloud");

    // Scene extent = diagonal of the bounding box of the means.
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi = -lo;
    for (const auto& g : cloud.primitives) {
        const Vec3 m = g.mean_v();
        for (std::size_t a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], m[a]);
            hi[a] = std::max(hi[a], m[a]);
        }
    }
    const double scene_extent = cloud.empty() ? 0.0 : norm(hi - lo);
    const double max_scale = filters.max_world_scale * scene_extent;

    std::vector<std::size_t> candidates;
    candidates.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const GaussianPrimitive& g = cloud.primitives[i];
        if (g.opacity() < filters.min_opacity)
            continue;
        const Vec3 s = g.scales_v();
        if (std::max({s.x, s.y, s.z}) > max_scale)
            continue;
        candidates.push_back(i);
    }

    PruneResult result;
    result.candidate_count = candidates.size();
    result.requested_budget = budget;
    if (budget > candidates.size()) {
        log::warn("budgeted_prune: budget ", budget, " exceeds ", candidates.size(),
                  " candidates; clamping");
        budget = candidates.size();
    }

    // Exponential-keys weighted sampling without replacement: the `budget`
    // smallest keys -ln(U)/w are the removed set, drawn in candidate order
    // so the stream is reproducible per seed.
    Rng rng(seed);
    std::vector<std::pair<double, std::size_t>> keys;
    keys.reserve(candidates.size());
    for (const std::size_t idx : candidates) {
        double u;
        do {
            u = rng.uniform01();
        } while (u <= 0.0);
        const double w = 1.0 / (eps_prune + (1.0 - prune_score[idx]));
        keys.emplace_back(-std::log(u) / w, idx);
    }
    std::sort(keys.begin(), keys.end());
    keys.resize(budget);

    result.removed.reserve(budget);
    for (const auto& [key, idx] : keys)
        result.removed.push_back(idx);
    std::sort(result.removed.begin(), result.removed.end());

    std::vector<char> removed_flag(cloud.size(), 0);
    for (const std::size_t idx : result.removed)
        removed_flag[idx] = 1;

    GaussianCloud& kept = result.kept;
    kept.primitives.reserve(cloud.size() - budget);
    const bool has_c = !cloud.deficiency.empty();
    const bool has_sd = !cloud.densify.empty();
    const bool has_sp = !cloud.prune.empty();
    const bool has_w = !cloud.weight.empty();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (removed_flag[i])
            continue;
        kept.primitives.push_back(cloud.primitives[i]);
        if (has_c)
            kept.deficiency.push_back(cloud.deficiency[i]);
        if (has_sd)
            kept.densify.push_back(cloud.densify[i]);
        if (has_sp)
            kept.prune.push_back(cloud.prune[i]);
        if (has_w)
            kept.weight.push_back(cloud.weight[i]);
    }
    return result;
}

} // namespace gsc
