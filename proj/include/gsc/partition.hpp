// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "gsc/core.hpp"
#include "gsc/vecmat.hpp"

namespace gsc {

/// Result of the importance-balanced KD partition: every primitive belongs
/// to exactly one of the M non-empty leaf blocks (M <= 2^depth).
struct Partition {
    std::vector<std::int32_t> block_of;  // per-primitive block index in [0, M)
    std::vector<double> block_weights;   // total W per block
    int depth = 0;
    std::size_t block_count() const { return block_weights.size(); }
};

/// One internal split, exposed so the balance bound is checkable.
struct SplitRecord {
    double left_weight = 0.0;
    double right_weight = 0.0;
    double max_weight = 0.0; // largest single W in the node
};

/// Transport mass per primitive: W_i = alpha_i * C_i + eps_w.  The floor
/// keeps zero-deficiency primitives at a small positive mass.  Requires the
/// deficiency channel.
std::vector<double> contribution_weights(const GaussianCloud& cloud, double eps_w = 1e-6);

/// Recursive spatial partition balancing cumulative W instead of counts.
/// At each node: split axis = widest extent (lowest axis on ties); points
/// sorted along it (primitive index breaks coordinate ties); the split picks
/// whichever prefix around the weighted median best balances the halves, so
/// |W_left - W_right| never exceeds the node's largest single weight; both
/// children stay non-empty.  Leaves are reached at `depth` or on singletons.
/// `splits`, when given, receives one record per internal split.
Partition build_balanced_kdtree(const std::vector<Vec3>& positions,
                                const std::vector<double>& weights, int depth,
                                std::vector<SplitRecord>* splits = nullptr);

} // namespace gsc
