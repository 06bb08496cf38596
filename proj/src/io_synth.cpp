// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "gsc/errors.hpp"
#include "gsc/io.hpp"
#include "gsc/rng.hpp"

namespace gsc {

namespace {

constexpr double kSh0 = 0.28209479177387814; // Y_0^0, matches the renderer

// Fixture geometry: cameras on a ring outside the unit cube, tilted down at
// its center.  The cube's ~53 degree angular size at this distance fits the
// 256px/f=256 frustum with margin.
constexpr double kRingRadius = 2.6;
constexpr double kRingHeight = 1.3;
constexpr int kImageSize = 256;

/// Smooth per-channel color field over the cube: nearby splats get similar
/// colors, so block-level aggregation artifacts stay visually coherent.
double color_field(const Vec3& p, int channel) {
    const double t = p[static_cast<std::size_t>(channel)] + 0.5; // [0,1] across the cube
    return 0.25 + 0.5 * t;
}

} // namespace

std::pair<GaussianCloud, std::vector<Camera>> synth_scene(std::uint64_t seed, int n_gaussians,
                                                          int duplication_factor,
                                                          int n_cameras) {
    if (n_gaussians < 1)
        throw InvalidInputError("synth_scene: n_gaussians must be >= 1");
    if (duplication_factor < 1)
        throw InvalidInputError("synth_scene: duplication_factor must be >= 1");
    if (n_cameras < 0)
        throw InvalidInputError("synth_scene: n_cameras must be >= 0");

    Rng rng(seed);
    GaussianCloud cloud;
    cloud.primitives.reserve(static_cast<std::size_t>(n_gaussians) *
                             static_cast<std::size_t>(duplication_factor));

    for (int i = 0; i < n_gaussians; ++i) {
        GaussianPrimitive base;
        const Vec3 mean{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                        rng.uniform(-0.5, 0.5)};
        base.set_mean(mean);

        // Log-uniform scales sized so the ring cameras see a dense scene.
        const double lo = std::log(0.03), hi = std::log(0.08);
        const Vec3 scales{std::exp(rng.uniform(lo, hi)), std::exp(rng.uniform(lo, hi)),
                          std::exp(rng.uniform(lo, hi))};
        base.set_scales(scales);

        base.set_rotation(
            Quat{rng.normal(), rng.normal(), rng.normal(), rng.normal()}.normalized());

        // Each cluster is one dominant splat plus faint echo copies (the
        // shape of redundancy splat training leaves behind).  Mass-weighted
        // merging of such a cluster reproduces the dominant member almost
        // exactly, and the mass-balanced partition allocates about one
        // dominant splat per leaf, so a correct pipeline compacts this scene
        // with little visible loss.
        base.set_opacity(rng.uniform(0.988, 0.995));

        for (int c = 0; c < 3; ++c) {
            const double color = std::clamp(
                color_field(mean, c) + rng.uniform(-0.05, 0.05), 0.02, 0.98);
            base.sh_coeffs[static_cast<std::size_t>(c)] =
                (color - 0.5) / kSh0;
        }

        const Vec3 s = base.scales_v();
        const double jitter = 0.01 * (s.x + s.y + s.z) / 3.0;

        cloud.primitives.push_back(base);
        for (int d = 1; d < duplication_factor; ++d) {
            GaussianPrimitive dup = base;
            dup.set_mean(mean + Vec3{rng.normal(0.0, jitter), rng.normal(0.0, jitter),
                                     rng.normal(0.0, jitter)});
            dup.set_opacity(rng.uniform(0.0005, 0.002));
            cloud.primitives.push_back(dup);
        }
    }

    std::vector<Camera> cameras;
    cameras.reserve(static_cast<std::size_t>(n_cameras));
    const double c_half = (kImageSize - 1) / 2.0;
    for (int k = 0; k < n_cameras; ++k) {
        const double theta = 2.0 * 3.14159265358979323846 * k / n_cameras;
        const Vec3 eye{kRingRadius * std::cos(theta), kRingRadius * std::sin(theta),
                       kRingHeight};
        cameras.push_back(Camera::look_at(eye, Vec3{0.0, 0.0, 0.0}, Vec3{0.0, 0.0, 1.0},
                                          kImageSize, kImageSize, c_half, c_half, kImageSize,
                                          kImageSize));
    }
    return {std::move(cloud), std::move(cameras)};
}

} // namespace gsc
