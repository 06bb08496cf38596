// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include "gsc/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gsc/errors.hpp"
#include "gsc/parallel.hpp"

namespace gsc {

namespace {

// Real spherical-harmonics basis constants in the 3DGS convention.
constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                           0.3731763325901154, -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};

/// View-dependent color for one channel from the stored SH coefficients,
/// evaluated along `dir` (unit vector from camera center to the splat).
/// Matches 3DGS: +0.5 offset, clamped to be non-negative.
double eval_sh(const GaussianPrimitive& g, int degree, const Vec3& dir, int channel) {
    double c = kC0 * g.sh(0, channel);
    if (degree >= 1) {
        c += -kC1 * dir.y * g.sh(1, channel) + kC1 * dir.z * g.sh(2, channel) -
             kC1 * dir.x * g.sh(3, channel);
    }
    if (degree >= 2) {
        const double xx = dir.x * dir.x, yy = dir.y * dir.y, zz = dir.z * dir.z;
        const double xy = dir.x * dir.y, yz = dir.y * dir.z, xz = dir.x * dir.z;
        c += kC2[0] * xy * g.sh(4, channel) + kC2[1] * yz * g.sh(5, channel) +
             kC2[2] * (2.0 * zz - xx - yy) * g.sh(6, channel) +
             kC2[3] * xz * g.sh(7, channel) + kC2[4] * (xx - yy) * g.sh(8, channel);
        if (degree >= 3) {
            c += kC3[0] * dir.y * (3.0 * xx - yy) * g.sh(9, channel) +
                 kC3[1] * xy * dir.z * g.sh(10, channel) +
                 kC3[2] * dir.y * (4.0 * zz - xx - yy) * g.sh(11, channel) +
                 kC3[3] * dir.z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * g.sh(12, channel) +
                 kC3[4] * dir.x * (4.0 * zz - xx - yy) * g.sh(13, channel) +
                 kC3[5] * dir.z * (xx - yy) * g.sh(14, channel) +
                 kC3[6] * dir.x * (xx - 3.0 * yy) * g.sh(15, channel);
        }
    }
    return std::max(0.0, c + 0.5);
}

/// Per-splat state hoisted out of the pixel loop.
struct SplatWork {
    double inv_xx, inv_xy, inv_yy; // inverse of cov2d
    double mean_x, mean_y;
    double color[3];
    double alpha;
    int x0, x1, y0, y1; // inclusive pixel bounds, pre-clamped to the viewport
    std::int64_t source;
};

} // namespace

std::optional<ProjectedGaussian> project_gaussian(const GaussianPrimitive& g, const Camera& cam,
                                                  double near) {
    const Vec3 p = cam.to_camera(g.mean_v());
    if (p.z <= near)
        return std::nullopt;

    const double inv_z = 1.0 / p.z;
    const double u = cam.fx * p.x * inv_z + cam.cx;
    const double v = cam.fy * p.y * inv_z + cam.cy;

    const Covariance3 sigma = build_covariance(g.rotation_q(), g.scales_v());
    const Mat3 cam_cov = cam.rotation * sigma.matrix() * cam.rotation.transposed();

    // J = d(pixel)/d(camera point) at the mean: rows
    //   (fx/z, 0, -fx x/z^2) and (0, fy/z, -fy y/z^2).
    const double j00 = cam.fx * inv_z;
    const double j02 = -cam.fx * p.x * inv_z * inv_z;
    const double j11 = cam.fy * inv_z;
    const double j12 = -cam.fy * p.y * inv_z * inv_z;

    // Rows of J * cam_cov.
    const double r0x = j00 * cam_cov(0, 0) + j02 * cam_cov(2, 0);
    const double r0z = j00 * cam_cov(0, 2) + j02 * cam_cov(2, 2);
    const double r1x = j11 * cam_cov(1, 0) + j12 * cam_cov(2, 0);
    const double r1y = j11 * cam_cov(1, 1) + j12 * cam_cov(2, 1);
    const double r1z = j11 * cam_cov(1, 2) + j12 * cam_cov(2, 2);

    constexpr double kLowPass = 0.3; // px^2, the usual 3DGS anti-aliasing term
    const double cxx = r0x * j00 + r0z * j02 + kLowPass;
    const double cxy = r1x * j00 + r1z * j02;
    const double cyy = r1y * j11 + r1z * j12 + kLowPass;

    // The 3-sigma extents along x/y are exactly 3*sqrt of the marginals.
    const double rx = 3.0 * std::sqrt(cxx);
    const double ry = 3.0 * std::sqrt(cyy);
    if (u + rx < -0.5 || u - rx > cam.width - 0.5 || v + ry < -0.5 || v - ry > cam.height - 0.5)
        return std::nullopt;

    ProjectedGaussian out;
    out.mean2d[0] = u;
    out.mean2d[1] = v;
    out.cov2d[0] = cxx;
    out.cov2d[1] = cxy;
    out.cov2d[2] = cyy;
    out.depth = p.z;
    return out;
}

RenderOutput rasterize(const GaussianCloud& cloud, const Camera& cam,
                       const RenderOptions& options) {
    if (cloud.empty())
        throw InvalidInputError("rasterize: cloud is empty");
    if (options.error_mask &&
        (options.error_mask->width != cam.width || options.error_mask->height != cam.height ||
         options.error_mask->channels != 1))
        throw InvalidInputError("rasterize: error_mask does not match the camera resolution");

    const int degree = cloud.primitives[0].sh_degree();
    const Vec3 cam_center = cam.center();

    std::vector<ProjectedGaussian> visible;
    visible.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto proj = project_gaussian(cloud.primitives[i], cam, options.near);
        if (proj) {
            proj->source_index = static_cast<std::int64_t>(i);
            visible.push_back(*proj);
        }
    }
    std::sort(visible.begin(), visible.end(), [](const ProjectedGaussian& a,
                                                 const ProjectedGaussian& b) {
        if (a.depth != b.depth)
            return a.depth < b.depth;
        return a.source_index < b.source_index;
    });

    std::vector<SplatWork> work(visible.size());
    for (std::size_t s = 0; s < visible.size(); ++s) {
        const ProjectedGaussian& pg = visible[s];
        const GaussianPrimitive& g =
            cloud.primitives[static_cast<std::size_t>(pg.source_index)];
        SplatWork& w = work[s];
        const double detc = pg.cov2d[0] * pg.cov2d[2] - pg.cov2d[1] * pg.cov2d[1];
        const double inv_det = 1.0 / detc; // SPD after the low-pass term
        w.inv_xx = pg.cov2d[2] * inv_det;
        w.inv_xy = -pg.cov2d[1] * inv_det;
        w.inv_yy = pg.cov2d[0] * inv_det;
        w.mean_x = pg.mean2d[0];
        w.mean_y = pg.mean2d[1];
        w.alpha = g.opacity();
        const Vec3 dir = normalized(g.mean_v() - cam_center);
        for (int c = 0; c < 3; ++c)
            w.color[c] = eval_sh(g, degree, dir, c);
        const double rx = 3.0 * std::sqrt(pg.cov2d[0]);
        const double ry = 3.0 * std::sqrt(pg.cov2d[2]);
        w.x0 = std::max(0, static_cast<int>(std::ceil(pg.mean2d[0] - rx)));
        w.x1 = std::min(cam.width - 1, static_cast<int>(std::floor(pg.mean2d[0] + rx)));
        w.y0 = std::max(0, static_cast<int>(std::ceil(pg.mean2d[1] - ry)));
        w.y1 = std::min(cam.height - 1, static_cast<int>(std::floor(pg.mean2d[1] + ry)));
        w.source = pg.source_index;
    }

    const std::size_t npix =
        static_cast<std::size_t>(cam.width) * static_cast<std::size_t>(cam.height);
    std::vector<double> color(npix * 3, 0.0);
    std::vector<double> transmittance(npix, 1.0);

    // Chunk count depends only on the inputs (never the thread count) so the
    // per-chunk accumulator reduction below is schedule-independent.
    const std::size_t want_chunks = options.record_accumulators
                                        ? std::min<std::size_t>(16, static_cast<std::size_t>(cam.height))
                                        : std::min<std::size_t>(64, static_cast<std::size_t>(cam.height));
    const std::size_t nchunks = chunk_count(static_cast<std::size_t>(cam.height), want_chunks);

    const bool accumulate = options.record_accumulators && options.error_mask != nullptr;
    std::vector<std::vector<std::int64_t>> def_parts;
    std::vector<std::vector<double>> wes_parts;
    if (accumulate) {
        def_parts.assign(nchunks, std::vector<std::int64_t>(cloud.size(), 0));
        wes_parts.assign(nchunks, std::vector<double>(cloud.size(), 0.0));
    }
    const ImageBuffer* mask = options.error_mask;

    parallel_for_chunks(
        0, static_cast<std::size_t>(cam.height),
        [&](std::size_t chunk, std::size_t row_begin, std::size_t row_end) {
            std::vector<std::int64_t>* def = accumulate ? &def_parts[chunk] : nullptr;
            std::vector<double>* wes = accumulate ? &wes_parts[chunk] : nullptr;
            const int ry0 = static_cast<int>(row_begin);
            const int ry1 = static_cast<int>(row_end);
            for (const SplatWork& w : work) {
                if (w.y1 < ry0 || w.y0 >= ry1 || w.x1 < w.x0)
                    continue;
                const int ya = std::max(w.y0, ry0);
                const int yb = std::min(w.y1, ry1 - 1);
                for (int y = ya; y <= yb; ++y) {
                    const double dy = static_cast<double>(y) - w.mean_y;
                    const std::size_t row_off =
                        static_cast<std::size_t>(y) * static_cast<std::size_t>(cam.width);
                    for (int x = w.x0; x <= w.x1; ++x) {
                        const std::size_t p = row_off + static_cast<std::size_t>(x);
                        double& T = transmittance[p];
                        if (T < options.term_transmittance)
                            continue; // blending already terminated here
                        const double dx = static_cast<double>(x) - w.mean_x;
                        const double e = -0.5 * (w.inv_xx * dx * dx + w.inv_yy * dy * dy) -
                                         w.inv_xy * dx * dy;
                        double a = w.alpha * std::exp(e);
                        if (a > options.alpha_clamp)
                            a = options.alpha_clamp;
                        const double contrib = a * T;
                        color[p * 3 + 0] += w.color[0] * contrib;
                        color[p * 3 + 1] += w.color[1] * contrib;
                        color[p * 3 + 2] += w.color[2] * contrib;
                        T *= 1.0 - a;
                        if (def && contrib > options.eps_v &&
                            mask->pixels[p] != 0.0) {
                            const std::size_t src = static_cast<std::size_t>(w.source);
                            (*def)[src] += 1;
                            (*wes)[src] += options.view_loss * contrib;
                        }
                    }
                }
            }
        },
        nchunks);

    RenderOutput out;
    out.image = ImageBuffer::create(cam.width, cam.height, 3);
    out.alpha = ImageBuffer::create(cam.width, cam.height, 1);
    for (std::size_t p = 0; p < npix; ++p) {
        for (int c = 0; c < 3; ++c)
            out.image.pixels[p * 3 + static_cast<std::size_t>(c)] =
                std::clamp(color[p * 3 + static_cast<std::size_t>(c)], 0.0, 1.0);
        out.alpha.pixels[p] = std::clamp(1.0 - transmittance[p], 0.0, 1.0);
    }

    if (options.record_accumulators) {
        out.deficiency_count.assign(cloud.size(), 0);
        out.weighted_error_sum.assign(cloud.size(), 0.0);
        // Fixed chunk-order reduction keeps results byte-identical across
        // thread counts.
        for (std::size_t c = 0; c < def_parts.size(); ++c) {
            for (std::size_t i = 0; i < cloud.size(); ++i) {
                out.deficiency_count[i] += def_parts[c][i];
                out.weighted_error_sum[i] += wes_parts[c][i];
            }
        }
    }
    return out;
}

} // namespace gsc
