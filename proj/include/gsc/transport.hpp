// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gsc/core.hpp"
#include "gsc/vecmat.hpp"

namespace gsc {

struct TransportConfig {
    double sample_ratio = 0.8; // retained fraction K/N, applied per block
    int kd_depth = 10;
    int em_iters = 5;
    bool converge_early = true; // stop once assignments stop changing
    double eps_w = 1e-6;        // mass floor inside contribution_weights
};

/// Hard transport plan: every source goes to exactly one target and carries
/// its full mass pi_i = W_i.
struct TransportPlan {
    std::vector<std::int32_t> assignment;
    std::vector<double> mass;
};

/// Gaussian as plain moments, for the distance oracles.
struct MeanCov {
    Vec3 mean;
    Mat3 cov; // SPD
};

/// Exact squared 2-Wasserstein distance between Gaussians:
/// |mu_a-mu_b|^2 + Tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2), clamped at 0.
double bures_wasserstein_sq(const MeanCov& a, const MeanCov& b);

/// Gelbrich-form proxy: |mu_a-mu_b|^2 + |Sa^1/2 - Sb^1/2|_F^2.  Upper-bounds
/// the exact distance; equal when the covariances commute.
double gelbrich_sq(const MeanCov& a, const MeanCov& b);

/// 9-dim embedding whose squared Euclidean distance is gelbrich_sq:
/// (mean, sqrt-cov diagonal, sqrt(2) * sqrt-cov off-diagonals).  Computed
/// from the stored rotation/scales, no eigensolve needed.
std::array<double, 9> gelbrich_feature(const GaussianPrimitive& g);

/// Row-major n x k matrix of gelbrich_sq(source_i, target_j).
std::vector<double> cost_matrix(const std::vector<GaussianPrimitive>& sources,
                                const std::vector<GaussianPrimitive>& targets);

/// Hard assignment: j(i) = argmin_k cost(i,k), ties to the lowest index.
TransportPlan e_step(const std::vector<double>& cost, std::size_t n, std::size_t k,
                     const std::vector<double>& weights);

/// One merged target with its pre-floor covariance kept for verification.
struct AggregatedTarget {
    Vec3 mean;
    Mat3 cov_prefloor;           // moment-matched covariance before the SPD floor
    GaussianPrimitive primitive; // storable result (floored, re-decomposed)
};

/// Moment matching per target over its assigned sources: mixture mean, and
/// covariance via the variance identity E[xx^T] - mu mu^T; opacity and SH
/// merge as mass-weighted means.  Every target must have >= 1 source.
std::vector<AggregatedTarget> m_step(const TransportPlan& plan,
                                     const std::vector<GaussianPrimitive>& sources,
                                     std::size_t k);

struct BlockResult {
    std::vector<AggregatedTarget> targets;
    std::vector<std::int32_t> assignment; // final E-step result
    int iterations = 0;
};

/// EM loop over one block: targets start as the top-k sources by weight
/// (ties to the lowest index); alternate assignment and moment matching for
/// at most cfg.em_iters rounds, stopping early once assignments repeat.
/// Targets left empty by an E-step are re-seeded with the costliest source
/// stolen from a multi-source target.
BlockResult aggregate_block(const std::vector<GaussianPrimitive>& sources,
                            const std::vector<double>& weights, std::size_t budget,
                            const TransportConfig& cfg);

/// Optional per-block record of what aggregate_cloud did, for verification.
struct AggregateTrace {
    struct Block {
        std::vector<std::size_t> sources;     // global indices, ascending
        std::vector<std::int32_t> assignment; // local target index per source
        std::vector<AggregatedTarget> targets;
    };
    std::vector<Block> blocks;
};

struct PhaseTimings {
    double tree_ms = 0.0;
    double estep_ms = 0.0; // feature building + assignment (the cost phase)
    double mstep_ms = 0.0;
    double total_ms = 0.0;
    // Block-shape diagnostics for reports.
    std::size_t blocks = 0;
    std::size_t block_min = 0;  // smallest source count in a block
    std::size_t block_max = 0;  // largest source count in a block
    std::size_t out_min = 0;    // smallest per-block budget
    std::size_t out_max = 0;    // largest per-block budget
};

/// Whole-cloud aggregation: weights from the deficiency channel (or C == 1
/// when absent), an importance-balanced KD partition at cfg.kd_depth, then
/// one aggregate_block per block with budget max(1, round(ratio * n_b)).
/// Targets concatenate in block order.
GaussianCloud aggregate_cloud(const GaussianCloud& cloud, const TransportConfig& cfg,
                              AggregateTrace* trace = nullptr,
                              PhaseTimings* timings = nullptr);

} // namespace gsc
