// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include "gsc/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gsc/errors.hpp"

namespace gsc {

std::vector<double> contribution_weights(const GaussianCloud& cloud, double eps_w) {
    if (cloud.deficiency.size() != cloud.size())
        throw InvalidInputError(
            "contribution_weights: cloud has no deficiency channel (run ranking first)");
    std::vector<double> w(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        w[i] = cloud.primitives[i].opacity() * cloud.deficiency[i] + eps_w;
    return w;
}

namespace {

struct Builder {
    const std::vector<Vec3>& pos;
    const std::vector<double>& w;
    std::vector<std::int32_t>& block_of;
    std::vector<double>& block_weights;
    std::vector<SplitRecord>* splits;
    std::vector<std::size_t> idx;

    void make_leaf(std::size_t lo, std::size_t hi) {
        const auto block = static_cast<std::int32_t>(block_weights.size());
        double total = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            block_of[idx[i]] = block;
            total += w[idx[i]];
        }
        block_weights.push_back(total);
    }

    void build(std::size_t lo, std::size_t hi, int depth) {
        const std::size_t n = hi - lo;
        if (depth == 0 || n <= 1) {
            make_leaf(lo, hi);
            return;
        }

        // Widest spatial extent picks the axis; ties go to the lowest axis.
        Vec3 mn = pos[idx[lo]], mx = pos[idx[lo]];
        for (std::size_t i = lo + 1; i < hi; ++i) {
            const Vec3& p = pos[idx[i]];
            for (std::size_t a = 0; a < 3; ++a) {
                mn[a] = std::min(mn[a], p[a]);
                mx[a] = std::max(mx[a], p[a]);
            }
        }
        std::size_t axis = 0;
        double best_extent = mx[0] - mn[0];
        for (std::size_t a = 1; a < 3; ++a) {
            const double e = mx[a] - mn[a];
            if (e > best_extent) {
                best_extent = e;
                axis = a;
            }
        }

        std::sort(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                  idx.begin() + static_cast<std::ptrdiff_t>(hi),
                  [&](std::size_t a, std::size_t b) {
                      const double pa = pos[a][axis], pb = pos[b][axis];
                      if (pa != pb)
                          return pa < pb;
                      return a < b;
                  });

        double total = 0.0;
        double node_max = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            total += w[idx[i]];
            node_max = std::max(node_max, w[idx[i]]);
        }
        const double half = 0.5 * total;

        // Smallest prefix reaching half the weight...
        std::size_t p = 1;
        double cum = w[idx[lo]];
        while (p < n && cum < half) {
            cum += w[idx[lo + p]];
            ++p;
        }
        // ...then take whichever of {p-1, p} balances better (the winner is
        // always within one atom of perfect, so |left-right| <= node_max),
        // clamped so both children stay non-empty.
        std::size_t split = p;
        double left_w = cum;
        if (p >= n) {
            split = n - 1;
            left_w = cum - w[idx[lo + n - 1]];
        } else if (p >= 2) {
            const double prev = cum - w[idx[lo + p - 1]];
            if (std::abs(2.0 * prev - total) < std::abs(2.0 * cum - total)) {
                split = p - 1;
                left_w = prev;
            }
        }

        if (splits)
            splits->push_back({left_w, total - left_w, node_max});
        build(lo, lo + split, depth - 1);
        build(lo + split, hi, depth - 1);
    }
};

} // namespace

Partition build_balanced_kdtree(const std::vector<Vec3>& positions,
                                const std::vector<double>& weights, int depth,
                                std::vector<SplitRecord>* splits) {
    if (positions.size() != weights.size())
        throw InvalidInputError("build_balanced_kdtree: positions/weights size mismatch");
    if (depth < 0)
        throw InvalidInputError("build_balanced_kdtree: depth must be >= 0");
    for (const Vec3& p : positions)
        if (!(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z)))
            throw InvalidInputError("build_balanced_kdtree: non-finite position");
    for (const double v : weights)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InvalidInputError("build_balanced_kdtree: weights must be finite and >= 0");

    Partition part;
    part.depth = depth;
    part.block_of.assign(positions.size(), 0);
    if (positions.empty())
        return part;

    Builder b{positions, weights, part.block_of, part.block_weights, splits, {}};
    b.idx.resize(positions.size());
    std::iota(b.idx.begin(), b.idx.end(), 0);
    b.build(0, positions.size(), depth);
    return part;
}

} // namespace gsc
