// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gsc/core.hpp"

namespace gsc {

/// Split one splat into two: the children sit at mu +/- eta * s_k along the
/// principal axis v_k and shrink every scale by sqrt(1 - eta^2); opacity and
/// SH are copied.  The shrink overshoots on the non-principal axes on
/// purpose — the mild contraction regularizes repeated densification.  With
/// `strict_moments` only the principal scale shrinks, so the two-child
/// mixture reproduces the parent covariance exactly.  eta must lie in [0, 1).
std::array<GaussianPrimitive, 2> split_gaussian(const GaussianPrimitive& parent, double eta,
                                                bool strict_moments = false);

/// Apply split_gaussian to every marked primitive: unmarked survivors keep
/// their relative order at the front, then child pairs follow in parent
/// order.  Score channels are dropped (they described the parents).
GaussianCloud split_marked(const GaussianCloud& cloud, const std::vector<std::uint8_t>& marks,
                           double eta, bool strict_moments = false);

/// Opacity mismatch of the contractive split at the parent center:
/// f(eta) = sqrt(1 - eta^2) - exp(-eta^2 / (2 (1 - eta^2))).
/// Small everywhere on [0, 1) with a single interior maximum, which is what
/// keeps the copied-opacity children visually faithful.  |eta| >= 1 is a
/// domain error.
double eta_residual(double eta);

} // namespace gsc
