// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "gsc/errors.hpp"
#include "gsc/vecmat.hpp"

namespace gsc {

/// Logistic sigmoid and its inverse.  Opacity is stored pre-activation.
double sigmoid(double x);
double logit(double p);

/// One anisotropic 3D Gaussian splat in 3DGS storage conventions: log-space
/// scales and logit-space opacity so PLY interchange round-trips bitwise
/// (fields are double in memory; the on-disk layout stays float32).
/// The covariance is always derived (build_covariance), never stored.
struct GaussianPrimitive {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 4> rotation{1.0, 0.0, 0.0, 0.0}; // quaternion, scalar first
    std::array<double, 3> log_scales{0.0, 0.0, 0.0};
    double opacity_logit = 0.0;
    // Spherical-harmonics color, 3*(deg+1)^2 values for deg in {0,1,2,3}.
    // Layout matches the PLY order: DC triplet first, then the higher-order
    // coefficients channel-major (all rest coefficients of R, then G, then B).
    std::vector<double> sh_coeffs{0.0, 0.0, 0.0};

    int sh_degree() const;

    Vec3 mean_v() const { return {mean[0], mean[1], mean[2]}; }
    Quat rotation_q() const { return {rotation[0], rotation[1], rotation[2], rotation[3]}; }
    Vec3 scales_v() const; // exp(log_scales)
    double opacity() const { return sigmoid(opacity_logit); }

    void set_mean(const Vec3& m);
    void set_rotation(const Quat& q); // normalizes; zero quaternion is invalid
    void set_scales(const Vec3& s);   // world-space scales, must be positive finite
    void set_opacity(double alpha);   // must lie strictly in (0,1)

    /// SH coefficient for band-flattened index j (0 = DC) and channel c.
    double sh(int j, int channel) const;
    void set_sh(int j, int channel, double value);
};

/// Number of SH coefficients per primitive for a degree, and the inverse.
/// Throws InvalidInputError when the count is not 3*(deg+1)^2 for deg 0..3.
int sh_coeff_count(int degree);
int sh_degree_from_count(std::size_t count);

/// Symmetric positive-definite 3x3 covariance.  Construction symmetrizes and
/// clamps eigenvalues to the SPD floor (1e-12 x largest eigenvalue, at least
/// 1e-20 absolute) so degenerate flat splats stay invertible.
class Covariance3 {
public:
    Covariance3() : m_(Mat3::identity()) {}

    /// Build from a general symmetric matrix.  Asymmetry beyond 1e-9
    /// absolute is an invalid-input error; within tolerance the matrix is
    /// symmetrized exactly.  Eigenvalues below the floor are clamped and the
    /// result is flagged.
    static Covariance3 from_matrix(const Mat3& m);

    /// Build from a known eigendecomposition (rotation columns = axes).
    /// Skips the symmetry check; still applies the SPD floor.
    static Covariance3 from_eigen(const Mat3& rotation, const Vec3& eigenvalues);

    const Mat3& matrix() const { return m_; }
    double operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

    /// True when construction had to clamp an eigenvalue to the floor.
    bool floored() const { return floored_; }

private:
    Mat3 m_;
    bool floored_ = false;
};

/// Sigma = R * diag(scales^2) * R^T.  The quaternion is normalized first;
/// non-finite or non-positive inputs are invalid-input errors.
Covariance3 build_covariance(const Quat& rotation, const Vec3& scales);

struct EigenDecomposition {
    Vec3 eigenvalues;  // descending
    Mat3 rotation;     // columns are the matching eigenvectors
};

/// Cyclic Jacobi eigensolver for symmetric 3x3 matrices (1e-12 relative
/// off-diagonal tolerance, at most 32 sweeps).  Eigenvalues come back sorted
/// descending with a deterministic eigenvector sign convention: the
/// largest-magnitude component of each column is made positive (lowest index
/// wins magnitude ties), so downstream output is byte-reproducible.
EigenDecomposition eigendecompose_sym3(const Mat3& sym);
EigenDecomposition eigendecompose_sym3(const Covariance3& cov);

/// Principal square root R * diag(sqrt(lambda)) * R^T.
Covariance3 sqrt_covariance(const Covariance3& cov);

struct PrincipalAxis {
    double s_k = 0.0; // sqrt of the largest eigenvalue (world-space scale)
    Vec3 v_k;         // matching unit eigenvector under the sign convention
};

/// Longest axis of the covariance ellipsoid; ties resolve to the first
/// column of the (descending, stably sorted) eigendecomposition.
PrincipalAxis principal_axis(const Covariance3& cov);

/// Column-oriented splat collection plus the optional per-primitive score
/// channels the ranking stage produces.  An empty channel means "absent";
/// present channels must match the primitive count.
struct GaussianCloud {
    std::vector<GaussianPrimitive> primitives;

    std::vector<double> deficiency;       // C: non-negative error-pixel counts
    std::vector<std::int64_t> densify;    // S_d: split votes per primitive
    std::vector<double> prune;            // S_p in [0,1]
    std::vector<double> weight;           // W: non-negative aggregation mass

    std::size_t size() const { return primitives.size(); }
    bool empty() const { return primitives.empty(); }

    /// Throws ValidationError when a present score channel's length does not
    /// match the primitive count.
    void validate() const;
};

} // namespace gsc
