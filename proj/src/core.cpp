// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include "gsc/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gsc/log.hpp"

namespace gsc {

namespace {

constexpr double kSpdFloorRel = 1e-12;
constexpr double kSpdFloorAbs = 1e-20;
constexpr double kSymmetryTol = 1e-9;
constexpr double kJacobiTol = 1e-12;
constexpr int kJacobiMaxSweeps = 32;

bool finite3(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// Clamp three eigenvalues to the SPD floor; reports whether any moved.
bool floor_eigenvalues(Vec3& lam) {
    const double lmax = std::max({lam.x, lam.y, lam.z, 0.0});
    const double floor_val = std::max(kSpdFloorRel * lmax, kSpdFloorAbs);
    bool moved = false;
    for (std::size_t i = 0; i < 3; ++i) {
        if (lam[i] < floor_val) {
            lam[i] = floor_val;
            moved = true;
        }
    }
    return moved;
}

Mat3 reconstruct(const Mat3& rotation, const Vec3& lam) {
    // R * diag(lam) * R^T, symmetrized exactly.
    Mat3 rd;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            rd.m[i][j] = rotation.m[i][j] * lam[static_cast<std::size_t>(j)];
    Mat3 out = rd * rotation.transposed();
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const double v = 0.5 * (out.m[i][j] + out.m[j][i]);
            out.m[i][j] = v;
            out.m[j][i] = v;
        }
    return out;
}

} // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw InvalidInputError("logit: argument must lie strictly in (0,1)");
    return std::log(p / (1.0 - p));
}

int sh_coeff_count(int degree) {
    if (degree < 0 || degree > 3)
        throw InvalidInputError("sh_coeff_count: degree must be 0..3");
    return 3 * (degree + 1) * (degree + 1);
}

int sh_degree_from_count(std::size_t count) {
    for (int deg = 0; deg <= 3; ++deg)
        if (count == static_cast<std::size_t>(sh_coeff_count(deg)))
            return deg;
    std::ostringstream msg;
    msg << "sh_degree_from_count: " << count
        << " coefficients do not match any SH degree 0..3";
    throw InvalidInputError(msg.str());
}

int GaussianPrimitive::sh_degree() const { return sh_degree_from_count(sh_coeffs.size()); }

Vec3 GaussianPrimitive::scales_v() const {
    return {std::exp(log_scales[0]), std::exp(log_scales[1]), std::exp(log_scales[2])};
}

void GaussianPrimitive::set_mean(const Vec3& m) {
    if (!finite3(m))
        throw InvalidInputError("set_mean: non-finite mean");
    mean = {m.x, m.y, m.z};
}

void GaussianPrimitive::set_rotation(const Quat& q) {
    const double n = q.norm();
    if (!(n > 0.0) || !std::isfinite(n))
        throw InvalidInputError("set_rotation: quaternion must be non-zero and finite");
    rotation = {q.w / n, q.x / n, q.y / n, q.z / n};
}

void GaussianPrimitive::set_scales(const Vec3& s) {
    if (!finite3(s) || !(s.x > 0.0 && s.y > 0.0 && s.z > 0.0))
        throw InvalidInputError("set_scales: scales must be positive and finite");
    log_scales = {std::log(s.x), std::log(s.y), std::log(s.z)};
}

void GaussianPrimitive::set_opacity(double alpha) {
    opacity_logit = logit(alpha);
}

double GaussianPrimitive::sh(int j, int channel) const {
    if (j == 0)
        return sh_coeffs[static_cast<std::size_t>(channel)];
    const int n_rest = static_cast<int>(sh_coeffs.size()) / 3 - 1;
    return sh_coeffs[static_cast<std::size_t>(3 + channel * n_rest + (j - 1))];
}

void GaussianPrimitive::set_sh(int j, int channel, double value) {
    if (j == 0) {
        sh_coeffs[static_cast<std::size_t>(channel)] = value;
        return;
    }
    const int n_rest = static_cast<int>(sh_coeffs.size()) / 3 - 1;
    sh_coeffs[static_cast<std::size_t>(3 + channel * n_rest + (j - 1))] = value;
}

Covariance3 Covariance3::from_matrix(const Mat3& m) {
    double max_asym = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            max_asym = std::max(max_asym, std::abs(m.m[i][j] - m.m[j][i]));
    if (max_asym > kSymmetryTol) {
        std::ostringstream msg;
        msg << "Covariance3: input asymmetric by " << max_asym << " (tolerance "
            << kSymmetryTol << ")";
        throw InvalidInputError(msg.str());
    }
    Mat3 sym = m;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const double v = 0.5 * (sym.m[i][j] + sym.m[j][i]);
            sym.m[i][j] = v;
            sym.m[j][i] = v;
        }
    const EigenDecomposition ed = eigendecompose_sym3(sym);
    return from_eigen(ed.rotation, ed.eigenvalues);
}

Covariance3 Covariance3::from_eigen(const Mat3& rotation, const Vec3& eigenvalues) {
    Vec3 lam = eigenvalues;
    Covariance3 out;
    out.floored_ = floor_eigenvalues(lam);
    if (out.floored_)
        log::debug("Covariance3: eigenvalue clamped to SPD floor");
    out.m_ = reconstruct(rotation, lam);
    return out;
}

Covariance3 build_covariance(const Quat& rotation, const Vec3& scales) {
    if (!finite3(scales) || !std::isfinite(rotation.norm()))
        throw InvalidInputError("build_covariance: non-finite input");
    if (!(scales.x > 0.0 && scales.y > 0.0 && scales.z > 0.0))
        throw InvalidInputError("build_covariance: scales must be positive");
    const double n = rotation.norm();
    if (!(n > 0.0))
        throw InvalidInputError("build_covariance: zero quaternion");
    const Mat3 r = quat_to_mat(rotation.normalized());
    // Eigenvalues of R diag(s^2) R^T are exactly s^2; floor them directly so
    // the hot aggregation path never needs an eigensolve here.
    const Vec3 lam{scales.x * scales.x, scales.y * scales.y, scales.z * scales.z};
    return Covariance3::from_eigen(r, lam);
}

EigenDecomposition eigendecompose_sym3(const Mat3& sym) {
    double max_asym = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            max_asym = std::max(max_asym, std::abs(sym.m[i][j] - sym.m[j][i]));
    if (max_asym > kSymmetryTol)
        throw InvalidInputError("eigendecompose_sym3: input is not symmetric");

    Mat3 a = sym;
    Mat3 v = Mat3::identity();
    const double scale = std::sqrt(frobenius_sq(a));
    const double tol = kJacobiTol * std::max(scale, 1e-300);

    for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
        const double off = std::sqrt(2.0 * (a.m[0][1] * a.m[0][1] + a.m[0][2] * a.m[0][2] +
                                            a.m[1][2] * a.m[1][2]));
        if (off <= tol)
            break;
        static constexpr int kPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
        for (const auto& pq : kPairs) {
            const int p = pq[0], q = pq[1];
            const double apq = a.m[p][q];
            if (apq == 0.0)
                continue;
            const double theta = (a.m[q][q] - a.m[p][p]) / (2.0 * apq);
            const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                             (std::abs(theta) + std::sqrt(theta * theta + 1.0));
            const double c = 1.0 / std::sqrt(t * t + 1.0);
            const double s = t * c;

            // A <- J^T A J for the (p,q) Givens rotation J.
            const double app = a.m[p][p], aqq = a.m[q][q];
            a.m[p][p] = app - t * apq;
            a.m[q][q] = aqq + t * apq;
            a.m[p][q] = 0.0;
            a.m[q][p] = 0.0;
            for (int k = 0; k < 3; ++k) {
                if (k == p || k == q)
                    continue;
                const double akp = a.m[k][p], akq = a.m[k][q];
                a.m[k][p] = c * akp - s * akq;
                a.m[p][k] = a.m[k][p];
                a.m[k][q] = s * akp + c * akq;
                a.m[q][k] = a.m[k][q];
            }
            // Accumulate V <- V J (columns are eigenvectors).
            for (int k = 0; k < 3; ++k) {
                const double vkp = v.m[k][p], vkq = v.m[k][q];
                v.m[k][p] = c * vkp - s * vkq;
                v.m[k][q] = s * vkp + c * vkq;
            }
        }
    }

    // Stable descending sort so equal eigenvalues keep Jacobi column order.
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return a.m[i][i] > a.m[j][j]; });

    EigenDecomposition out;
    for (int col = 0; col < 3; ++col) {
        const int src = order[static_cast<std::size_t>(col)];
        out.eigenvalues[static_cast<std::size_t>(col)] = a.m[src][src];
        Vec3 axis{v.m[0][src], v.m[1][src], v.m[2][src]};
        // Sign convention: largest-magnitude component positive; the lowest
        // index wins magnitude ties so the choice is deterministic.
        int imax = 0;
        for (int i = 1; i < 3; ++i)
            if (std::abs(axis[static_cast<std::size_t>(i)]) >
                std::abs(axis[static_cast<std::size_t>(imax)]))
                imax = i;
        if (axis[static_cast<std::size_t>(imax)] < 0.0)
            axis = -axis;
        for (int rrow = 0; rrow < 3; ++rrow)
            out.rotation.m[rrow][col] = axis[static_cast<std::size_t>(rrow)];
    }
    return out;
}

EigenDecomposition eigendecompose_sym3(const Covariance3& cov) {
    return eigendecompose_sym3(cov.matrix());
}

Covariance3 sqrt_covariance(const Covariance3& cov) {
    EigenDecomposition ed = eigendecompose_sym3(cov);
    Vec3 lam = ed.eigenvalues;
    floor_eigenvalues(lam); // defensive; construction already floored
    const Vec3 root{std::sqrt(lam.x), std::sqrt(lam.y), std::sqrt(lam.z)};
    return Covariance3::from_eigen(ed.rotation, root);
}

PrincipalAxis principal_axis(const Covariance3& cov) {
    const EigenDecomposition ed = eigendecompose_sym3(cov);
    PrincipalAxis out;
    out.s_k = std::sqrt(std::max(ed.eigenvalues.x, 0.0));
    out.v_k = {ed.rotation(0, 0), ed.rotation(1, 0), ed.rotation(2, 0)};
    return out;
}

void GaussianCloud::validate() const {
    const std::size_t n = primitives.size();
    auto check = [&](std::size_t len, const char* name) {
        if (len != 0 && len != n) {
            std::ostringstream msg;
            msg << "GaussianCloud: score channel '" << name << "' has length " << len
                << " but the cloud holds " << n << " primitives";
            throw ValidationError(msg.str());
        }
    };
    check(deficiency.size(), "deficiency");
    check(densify.size(), "densify");
    check(prune.size(), "prune");
    check(weight.size(), "weight");
}

} // namespace gsc
