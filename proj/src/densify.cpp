// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include "gsc/densify.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>

#include "gsc/errors.hpp"
#include "gsc/vecmat.hpp"

namespace gsc {
namespace {

void check_eta(double eta, bool allow_negative) {
    const double low = allow_negative ? -1.0 : 0.0;
    const bool ok = std::isfinite(eta) && eta < 1.0 &&
                    (allow_negative ? eta > low : eta >= low);
    if (!ok) {
        std::ostringstream msg;
        msg << "eta must lie in " << (allow_negative ? "(-1, 1)" : "[0, 1)") << ", got "
            << eta;
        throw DomainError(msg.str());
    }
}

} // namespace

std::array<GaussianPrimitive, 2> split_gaussian(const GaussianPrimitive& parent, double eta,
                                                bool strict_moments) {
    check_eta(eta, /*allow_negative=*/false);

    const Covariance3 cov = build_covariance(parent.rotation_q(), parent.scales_v());
    const PrincipalAxis axis = principal_axis(cov);
    const Vec3 offset = axis.v_k * (eta * axis.s_k);
    const double shrink = std::sqrt(1.0 - eta * eta);

    GaussianPrimitive child = parent;
    if (strict_moments) {
        // Re-express the parent in its eigenframe and shrink only the
        // principal axis: the half/half child mixture then has exactly the
        // parent mean and covariance.
        const EigenDecomposition ed = eigendecompose_sym3(cov);
        Mat3 rot = ed.rotation;
        if (det(rot) < 0.0)
            for (int r = 0; r < 3; ++r)
                rot(r, 2) = -rot(r, 2);
        child.set_rotation(mat_to_quat(rot));
        child.set_scales({shrink * std::sqrt(ed.eigenvalues[0]),
                          std::sqrt(ed.eigenvalues[1]), std::sqrt(ed.eigenvalues[2])});
    } else {
        const double log_shrink = 0.5 * std::log1p(-eta * eta);
        for (int i = 0; i < 3; ++i)
            child.log_scales[i] =
                parent.log_scales[i] + log_shrink;
    }

    std::array<GaussianPrimitive, 2> children{child, child};
    const Vec3 mean = parent.mean_v();
    children[0].set_mean(mean + offset);
    children[1].set_mean(mean - offset);
    return children;
}

GaussianCloud split_marked(const GaussianCloud& cloud, const std::vector<std::uint8_t>& marks,
                           double eta, bool strict_moments) {
    cloud.validate();
    if (marks.size() != cloud.size())
        throw InvalidInputError("split_marked: marks length does not match the cloud");

    GaussianCloud out;
    std::size_t n_marked = 0;
    for (std::uint8_t m : marks)
        n_marked += m ? 1 : 0;
    out.primitives.reserve(cloud.size() - n_marked + 2 * n_marked);

    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (!marks[i])
            out.primitives.push_back(cloud.primitives[i]);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (marks[i]) {
            std::array<GaussianPrimitive, 2> children =
                split_gaussian(cloud.primitives[i], eta, strict_moments);
            out.primitives.push_back(std::move(children[0]));
            out.primitives.push_back(std::move(children[1]));
        }
    return out;
}

double eta_residual(double eta) {
    check_eta(eta, /*allow_negative=*/true);
    const double one_minus = 1.0 - eta * eta;
    return std::sqrt(one_minus) - std::exp(-eta * eta / (2.0 * one_minus));
}

} // namespace gsc
