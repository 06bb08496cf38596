// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "gsc/core.hpp"
#include "gsc/vecmat.hpp"

namespace gsc {

/// Pinhole camera with a rigid world-to-camera transform.  Camera space is
/// x-right, y-down, z-forward; a world point p maps to rotation*p +
/// translation, and then to pixels via (fx*x/z + cx, fy*y/z + cy).
struct Camera {
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    Mat3 rotation;     // world-to-camera rotation block
    Vec3 translation;  // world-to-camera translation

    Vec3 to_camera(const Vec3& p) const { return rotation * p + translation; }
    Vec3 center() const { return rotation.transposed() * (-translation); }

    /// Row-major 4x4 world-to-camera matrix (last row 0,0,0,1).
    std::array<double, 16> world_to_camera() const;

    /// Validates fx/fy/width/height, the rotation's orthonormality
    /// (Frobenius tolerance `ortho_tol`) and its +1 determinant, then
    /// re-orthonormalizes the rotation so downstream math sees an exact
    /// rotation.  `label` names the camera in error messages.
    static Camera from_w2c(double fx, double fy, double cx, double cy, int width, int height,
                           const std::array<double, 16>& w2c, const std::string& label,
                           double ortho_tol = 1e-4);

    /// Camera at `eye` looking at `target` with the world up hint (z-up
    /// scenes use (0,0,1)).  Degenerate when the view direction is parallel
    /// to `up`.
    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx,
                          double fy, double cx, double cy, int width, int height);
};

/// Row-major float image with values in [0,1]; 1 (gray) or 3 (RGB) channels.
struct ImageBuffer {
    int width = 0, height = 0, channels = 0;
    std::vector<double> pixels;

    static ImageBuffer create(int width, int height, int channels, double fill = 0.0);

    double& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                       static_cast<std::size_t>(x)) *
                          static_cast<std::size_t>(channels) +
                      static_cast<std::size_t>(c)];
    }
    double at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                       static_cast<std::size_t>(x)) *
                          static_cast<std::size_t>(channels) +
                      static_cast<std::size_t>(c)];
    }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    bool same_shape(const ImageBuffer& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

/// Binary little-endian PLY in the vanilla 3DGS vertex layout: x,y,z,
/// f_dc_0..2, f_rest_*, opacity, scale_0..2, rot_0..3.  Values pass through
/// unactivated, so write-then-read round-trips bitwise.  Normals nx,ny,nz
/// are tolerated and ignored on read and never written.
GaussianCloud read_ply(const std::string& path);
void write_ply(const GaussianCloud& cloud, const std::string& path);

/// Camera list as a JSON array of records {fx,fy,cx,cy,width,height,
/// world_to_camera:[16 row-major numbers]}.
std::vector<Camera> read_cameras(const std::string& path);
void write_cameras(const std::vector<Camera>& cameras, const std::string& path);

/// 8-bit image IO.  PNG (gray or RGB) and binary PPM/PGM (P6/P5) are
/// supported, chosen by file extension.  Decode divides by 255; encode
/// rounds half away from zero.
ImageBuffer read_image(const std::string& path);
void write_image(const ImageBuffer& img, const std::string& path);

/// Deterministic synthetic fixture: n_gaussians base splats inside the unit
/// cube (centered at the origin), each duplicated duplication_factor times
/// with positional jitter of sigma = 1% of the base splat's mean scale, plus
/// n_cameras poses on a ring looking at the cube center.  Colors follow a
/// smooth position-based field so aggregation artifacts stay visually
/// coherent; each cluster is one near-opaque splat plus faint echo copies,
/// so a mass-weighted merge of the cluster reproduces its dominant member.
std::pair<GaussianCloud, std::vector<Camera>> synth_scene(std::uint64_t seed, int n_gaussians,
                                                          int duplication_factor,
                                                          int n_cameras);

} // namespace gsc
