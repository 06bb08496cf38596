// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include "gsc/transport.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include "gsc/errors.hpp"
#include "gsc/parallel.hpp"
#include "gsc/partition.hpp"

namespace gsc {
namespace {

// Mirrors the SPD floor inside build_covariance so feature-space distances
// and stored covariances describe the same ellipsoids.
constexpr double kFloorRel = 1e-12;
constexpr double kFloorAbs = 1e-20;
constexpr double kSymTol = 1e-9;
// Merged opacity is a convex combination of values in (0,1); the clamp only
// guards float round-off at the extremes before the logit.
constexpr double kAlphaClamp = 1e-12;

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

void floor_ascending(Vec3& lam) {
    const double lmax = std::max(lam[0], 0.0); // eigenvalues arrive descending
    const double floor_val = std::max(kFloorRel * lmax, kFloorAbs);
    for (int i = 0; i < 3; ++i)
        lam[i] = std::max(lam[i], floor_val);
}

EigenDecomposition checked_spd(const Mat3& cov, const char* who) {
    double max_asym = 0.0;
    for (int r = 0; r < 3; ++r)
        for (int c = r + 1; c < 3; ++c)
            max_asym = std::max(max_asym, std::abs(cov(r, c) - cov(c, r)));
    if (!(max_asym <= kSymTol)) {
        std::ostringstream msg;
        msg << who << ": covariance is not symmetric (max asymmetry " << max_asym << ")";
        throw InvalidInputError(msg.str());
    }
    Mat3 sym = cov;
    for (int r = 0; r < 3; ++r)
        for (int c = r + 1; c < 3; ++c) {
            const double v = 0.5 * (sym(r, c) + sym(c, r));
            sym(r, c) = v;
            sym(c, r) = v;
        }
    EigenDecomposition ed = eigendecompose_sym3(sym);
    if (!(ed.eigenvalues[2] > 0.0)) {
        std::ostringstream msg;
        msg << who << ": covariance is not positive definite (smallest eigenvalue "
            << ed.eigenvalues[2] << ")";
        throw InvalidInputError(msg.str());
    }
    return ed;
}

Mat3 sqrt_from_eigen(const EigenDecomposition& ed) {
    const Vec3 s{std::sqrt(std::max(ed.eigenvalues[0], 0.0)),
                 std::sqrt(std::max(ed.eigenvalues[1], 0.0)),
                 std::sqrt(std::max(ed.eigenvalues[2], 0.0))};
    const Mat3& r = ed.rotation;
    Mat3 a;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            const double v =
                r(i, 0) * s[0] * r(j, 0) + r(i, 1) * s[1] * r(j, 1) + r(i, 2) * s[2] * r(j, 2);
            a(i, j) = v;
            a(j, i) = v;
        }
    return a;
}

std::array<double, 9> feature_of(const Vec3& mean, const Mat3& sqrt_cov) {
    const double r2 = std::numbers::sqrt2;
    return {mean.x,
            mean.y,
            mean.z,
            sqrt_cov(0, 0),
            sqrt_cov(1, 1),
            sqrt_cov(2, 2),
            r2 * sqrt_cov(0, 1),
            r2 * sqrt_cov(0, 2),
            r2 * sqrt_cov(1, 2)};
}

// R * diag(s) * R^T from the stored rotation/scales, flooring the variances
// exactly like build_covariance does.
Mat3 sqrt_cov_of(const GaussianPrimitive& g) {
    const Mat3 r = quat_to_mat(g.rotation_q().normalized());
    Vec3 s2;
    double s2max = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double s = std::exp(static_cast<double>(g.log_scales[i]));
        s2[i] = s * s;
        s2max = std::max(s2max, s2[i]);
    }
    const double floor_val = std::max(kFloorRel * s2max, kFloorAbs);
    Vec3 s;
    for (int i = 0; i < 3; ++i)
        s[i] = std::sqrt(std::max(s2[i], floor_val));
    Mat3 a;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            const double v =
                r(i, 0) * s[0] * r(j, 0) + r(i, 1) * s[1] * r(j, 1) + r(i, 2) * s[2] * r(j, 2);
            a(i, j) = v;
            a(j, i) = v;
        }
    return a;
}

double dist9_sq(const std::array<double, 9>& a, const std::array<double, 9>& b) {
    double d = 0.0;
    for (int i = 0; i < 9; ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

int uniform_sh_len(const std::vector<GaussianPrimitive>& prims, const char* who) {
    const std::size_t len = prims.front().sh_coeffs.size();
    for (const GaussianPrimitive& g : prims)
        if (g.sh_coeffs.size() != len) {
            std::ostringstream msg;
            msg << who << ": primitives mix SH degrees (" << len << " vs "
                << g.sh_coeffs.size() << " coefficients)";
            throw InvalidInputError(msg.str());
        }
    return static_cast<int>(len);
}

// Per-source inputs the EM loop consumes, gathered once.  m2 is the raw
// second moment Sigma_i + mu_i mu_i^T packed as (xx, yy, zz, xy, xz, yz).
struct SourceArrays {
    std::size_t n = 0;
    int sh_len = 0;
    std::vector<double> pi;
    std::vector<double> alpha;
    std::vector<Vec3> mu;
    std::vector<std::array<double, 6>> m2;
    std::vector<std::array<double, 9>> feat;
    std::vector<const double*> sh;
};

std::array<double, 6> second_moment_of(const GaussianPrimitive& g) {
    const Mat3 cov = build_covariance(g.rotation_q(), g.scales_v()).matrix();
    const Vec3 mu = g.mean_v();
    return {cov(0, 0) + mu.x * mu.x, cov(1, 1) + mu.y * mu.y, cov(2, 2) + mu.z * mu.z,
            cov(0, 1) + mu.x * mu.y, cov(0, 2) + mu.x * mu.z, cov(1, 2) + mu.y * mu.z};
}

void gather_source(const GaussianPrimitive& g, double weight, std::size_t slot,
                   SourceArrays& out) {
    out.pi[slot] = weight;
    out.alpha[slot] = g.opacity();
    out.mu[slot] = g.mean_v();
    out.m2[slot] = second_moment_of(g);
    out.feat[slot] = feature_of(g.mean_v(), sqrt_cov_of(g));
    out.sh[slot] = g.sh_coeffs.data();
}

SourceArrays gather_sources(const std::vector<GaussianPrimitive>& prims,
                            const std::vector<double>& weights, const char* who) {
    SourceArrays s;
    s.n = prims.size();
    s.sh_len = uniform_sh_len(prims, who);
    s.pi.resize(s.n);
    s.alpha.resize(s.n);
    s.mu.resize(s.n);
    s.m2.resize(s.n);
    s.feat.resize(s.n);
    s.sh.resize(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        if (!(std::isfinite(weights[i]) && weights[i] > 0.0)) {
            std::ostringstream msg;
            msg << who << ": weight " << i << " must be a positive finite mass, got "
                << weights[i];
            throw InvalidInputError(msg.str());
        }
        gather_source(prims[i], weights[i], i, s);
    }
    return s;
}

/// Moment matching for every target: mixture mean, covariance through the
// E[xx^T] - mu mu^T identity (floored afterwards), mass-weighted opacity and
// SH.  Assignments must leave no target empty.  When `tfeat` is given it
// receives each updated target's 9-dim feature for the next assignment pass.
std::vector<AggregatedTarget> moment_match(const SourceArrays& src,
                                           const std::int32_t* assign, std::size_t k,
                                           std::vector<std::array<double, 9>>* tfeat) {
    const std::size_t L = static_cast<std::size_t>(src.sh_len);
    std::vector<double> sw(k, 0.0);
    std::vector<Vec3> amu(k);
    std::vector<std::array<double, 6>> am2(k, {0, 0, 0, 0, 0, 0});
    std::vector<double> aalpha(k, 0.0);
    std::vector<double> ash(k * L, 0.0);

    for (std::size_t i = 0; i < src.n; ++i) {
        const std::size_t j = static_cast<std::size_t>(assign[i]);
        const double p = src.pi[i];
        sw[j] += p;
        amu[j] += src.mu[i] * p;
        for (int c = 0; c < 6; ++c)
            am2[j][c] += p * src.m2[i][c];
        aalpha[j] += p * src.alpha[i];
        const double* shp = src.sh[i];
        double* dst = ash.data() + j * L;
        for (std::size_t l = 0; l < L; ++l)
            dst[l] += p * static_cast<double>(shp[l]);
    }

    std::vector<AggregatedTarget> targets(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double inv = 1.0 / sw[j];
        const Vec3 mean = amu[j] * inv;

        Mat3 cov;
        cov(0, 0) = am2[j][0] * inv - mean.x * mean.x;
        cov(1, 1) = am2[j][1] * inv - mean.y * mean.y;
        cov(2, 2) = am2[j][2] * inv - mean.z * mean.z;
        cov(0, 1) = cov(1, 0) = am2[j][3] * inv - mean.x * mean.y;
        cov(0, 2) = cov(2, 0) = am2[j][4] * inv - mean.x * mean.z;
        cov(1, 2) = cov(2, 1) = am2[j][5] * inv - mean.y * mean.z;

        EigenDecomposition ed = eigendecompose_sym3(cov);
        Vec3 lam = ed.eigenvalues;
        floor_ascending(lam);
        const Vec3 scales{std::sqrt(lam[0]), std::sqrt(lam[1]), std::sqrt(lam[2])};
        Mat3 rot = ed.rotation;
        if (det(rot) < 0.0)
            for (int r = 0; r < 3; ++r)
                rot(r, 2) = -rot(r, 2);

        AggregatedTarget& t = targets[j];
        t.mean = mean;
        t.cov_prefloor = cov;
        t.primitive.set_mean(mean);
        t.primitive.set_rotation(mat_to_quat(rot));
        t.primitive.set_scales(scales);
        t.primitive.set_opacity(std::clamp(aalpha[j] * inv, kAlphaClamp, 1.0 - kAlphaClamp));
        t.primitive.sh_coeffs.resize(L);
        const double* srcsh = ash.data() + j * L;
        for (std::size_t l = 0; l < L; ++l)
            t.primitive.sh_coeffs[l] = srcsh[l] * inv;

        if (tfeat) {
            const EigenDecomposition floored{lam, ed.rotation};
            (*tfeat)[j] = feature_of(mean, sqrt_from_eigen(floored));
        }
    }
    return targets;
}

struct EmOutcome {
    std::vector<AggregatedTarget> targets;
    std::vector<std::int32_t> assignment;
    int iterations = 0;
    double estep_ms = 0.0;
    double mstep_ms = 0.0;
};

// One block's EM rounds: seed targets from the heaviest sources, then
// alternate nearest-feature assignment with moment matching.  Assignments are
// deterministic (lowest index wins cost ties) and the loop stops once they
// repeat.
EmOutcome run_em(const SourceArrays& src, std::size_t k, const TransportConfig& cfg) {
    const std::size_t n = src.n;
    EmOutcome out;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (src.pi[a] != src.pi[b])
            return src.pi[a] > src.pi[b];
        return a < b;
    });

    std::vector<std::array<double, 9>> tfeat(k);
    for (std::size_t j = 0; j < k; ++j)
        tfeat[j] = src.feat[order[j]];

    // Target features transposed to dimension-major so the assignment scan
    // streams contiguously over candidates.
    std::vector<double> tf_soa(9 * k);
    const auto refresh_soa = [&] {
        for (int d = 0; d < 9; ++d)
            for (std::size_t j = 0; j < k; ++j)
                tf_soa[static_cast<std::size_t>(d) * k + j] = tfeat[j][d];
    };
    refresh_soa();

    std::vector<std::int32_t> assign(n, -1);
    std::vector<std::int32_t> next(n, -1);
    std::vector<double> dist(k);
    std::vector<double> cost_of(n, 0.0);
    std::vector<std::int64_t> members(k, 0);

    for (int iter = 1; iter <= cfg.em_iters; ++iter) {
        const auto t0 = Clock::now();

        for (std::size_t i = 0; i < n; ++i) {
            const std::array<double, 9>& f = src.feat[i];
            std::fill(dist.begin(), dist.end(), 0.0);
            for (int d = 0; d < 9; ++d) {
                const double fd = f[d];
                const double* row = tf_soa.data() + static_cast<std::size_t>(d) * k;
                for (std::size_t j = 0; j < k; ++j) {
                    const double diff = fd - row[j];
                    dist[j] += diff * diff;
                }
            }
            std::size_t best = 0;
            double best_d = dist[0];
            for (std::size_t j = 1; j < k; ++j)
                if (dist[j] < best_d) {
                    best_d = dist[j];
                    best = j;
                }
            next[i] = static_cast<std::int32_t>(best);
            cost_of[i] = best_d;
        }

        const bool unchanged = iter > 1 && next == assign;
        if (unchanged && cfg.converge_early) {
            out.iterations = iter;
            out.estep_ms += ms_between(t0, Clock::now());
            break;
        }

        // Re-seed any target the assignment left empty with the worst-served
        // source stolen from a target that can spare one.
        std::fill(members.begin(), members.end(), std::int64_t{0});
        for (std::size_t i = 0; i < n; ++i)
            ++members[static_cast<std::size_t>(next[i])];
        for (std::size_t j = 0; j < k; ++j) {
            if (members[j] != 0)
                continue;
            std::size_t steal = n;
            double worst = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (members[static_cast<std::size_t>(next[i])] < 2)
                    continue;
                if (cost_of[i] > worst) {
                    worst = cost_of[i];
                    steal = i;
                }
            }
            --members[static_cast<std::size_t>(next[steal])];
            next[steal] = static_cast<std::int32_t>(j);
            members[j] = 1;
            cost_of[steal] = dist9_sq(src.feat[steal], tfeat[j]);
        }

        assign = next;
        const auto t1 = Clock::now();
        out.estep_ms += ms_between(t0, t1);

        out.targets = moment_match(src, assign.data(), k, &tfeat);
        refresh_soa();
        out.iterations = iter;
        out.mstep_ms += ms_between(t1, Clock::now());
    }

    out.assignment = std::move(assign);
    return out;
}

void validate_config(const TransportConfig& cfg) {
    if (!(cfg.sample_ratio > 0.0 && cfg.sample_ratio <= 1.0))
        throw InvalidInputError("aggregate: sample_ratio must lie in (0, 1]");
    if (cfg.kd_depth < 0)
        throw InvalidInputError("aggregate: kd_depth must be non-negative");
    if (cfg.em_iters < 1)
        throw InvalidInputError("aggregate: em_iters must be at least 1");
}

std::size_t block_budget(std::size_t n_block, double ratio) {
    const auto rounded = std::llround(ratio * static_cast<double>(n_block));
    const auto clamped = std::clamp<long long>(rounded, 1, static_cast<long long>(n_block));
    return static_cast<std::size_t>(clamped);
}

} // namespace

double bures_wasserstein_sq(const MeanCov& a, const MeanCov& b) {
    const EigenDecomposition eda = checked_spd(a.cov, "bures_wasserstein_sq");
    checked_spd(b.cov, "bures_wasserstein_sq");
    const Mat3 sqrt_a = sqrt_from_eigen(eda);

    Mat3 inner = sqrt_a * b.cov * sqrt_a;
    for (int r = 0; r < 3; ++r)
        for (int c = r + 1; c < 3; ++c) {
            const double v = 0.5 * (inner(r, c) + inner(c, r));
            inner(r, c) = v;
            inner(c, r) = v;
        }
    const EigenDecomposition edm = eigendecompose_sym3(inner);
    double tr_sqrt = 0.0;
    for (int i = 0; i < 3; ++i)
        tr_sqrt += std::sqrt(std::max(edm.eigenvalues[i], 0.0));

    const double d2 =
        norm_sq(a.mean - b.mean) + trace(a.cov) + trace(b.cov) - 2.0 * tr_sqrt;
    return std::max(d2, 0.0);
}

double gelbrich_sq(const MeanCov& a, const MeanCov& b) {
    const EigenDecomposition eda = checked_spd(a.cov, "gelbrich_sq");
    const EigenDecomposition edb = checked_spd(b.cov, "gelbrich_sq");
    const Mat3 diff = sqrt_from_eigen(eda) - sqrt_from_eigen(edb);
    return norm_sq(a.mean - b.mean) + frobenius_sq(diff);
}

std::array<double, 9> gelbrich_feature(const GaussianPrimitive& g) {
    return feature_of(g.mean_v(), sqrt_cov_of(g));
}

std::vector<double> cost_matrix(const std::vector<GaussianPrimitive>& sources,
                                const std::vector<GaussianPrimitive>& targets) {
    if (sources.empty() || targets.empty())
        throw InvalidInputError("cost_matrix: sources and targets must be non-empty");
    const std::size_t n = sources.size();
    const std::size_t k = targets.size();
    std::vector<std::array<double, 9>> sf(n);
    std::vector<std::array<double, 9>> tf(k);
    for (std::size_t i = 0; i < n; ++i)
        sf[i] = gelbrich_feature(sources[i]);
    for (std::size_t j = 0; j < k; ++j)
        tf[j] = gelbrich_feature(targets[j]);
    std::vector<double> cost(n * k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j)
            cost[i * k + j] = dist9_sq(sf[i], tf[j]);
    return cost;
}

TransportPlan e_step(const std::vector<double>& cost, std::size_t n, std::size_t k,
                     const std::vector<double>& weights) {
    if (n == 0 || k == 0)
        throw InvalidInputError("e_step: n and k must be positive");
    if (cost.size() != n * k)
        throw InvalidInputError("e_step: cost matrix size does not match n x k");
    if (weights.size() != n)
        throw InvalidInputError("e_step: weights length does not match source count");
    TransportPlan plan;
    plan.assignment.resize(n);
    plan.mass = weights;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = cost.data() + i * k;
        std::size_t best = 0;
        double best_c = row[0];
        for (std::size_t j = 1; j < k; ++j)
            if (row[j] < best_c) {
                best_c = row[j];
                best = j;
            }
        plan.assignment[i] = static_cast<std::int32_t>(best);
    }
    return plan;
}

std::vector<AggregatedTarget> m_step(const TransportPlan& plan,
                                     const std::vector<GaussianPrimitive>& sources,
                                     std::size_t k) {
    const std::size_t n = sources.size();
    if (n == 0 || k == 0)
        throw InvalidInputError("m_step: sources and k must be non-empty");
    if (plan.assignment.size() != n || plan.mass.size() != n)
        throw InvalidInputError("m_step: plan does not match the source count");

    std::vector<std::int64_t> members(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::int32_t a = plan.assignment[i];
        if (a < 0 || static_cast<std::size_t>(a) >= k)
            throw InvalidInputError("m_step: assignment index out of range");
        ++members[static_cast<std::size_t>(a)];
    }
    for (std::size_t j = 0; j < k; ++j)
        if (members[j] == 0) {
            std::ostringstream msg;
            msg << "m_step: target " << j << " has no assigned sources";
            throw InvalidInputError(msg.str());
        }

    const SourceArrays src = gather_sources(sources, plan.mass, "m_step");
    return moment_match(src, plan.assignment.data(), k, nullptr);
}

BlockResult aggregate_block(const std::vector<GaussianPrimitive>& sources,
                            const std::vector<double>& weights, std::size_t budget,
                            const TransportConfig& cfg) {
    validate_config(cfg);
    const std::size_t n = sources.size();
    if (n == 0)
        throw InvalidInputError("aggregate_block: sources must be non-empty");
    if (budget < 1 || budget > n)
        throw InvalidInputError("aggregate_block: budget must lie in [1, n]");
    if (weights.size() != n)
        throw InvalidInputError("aggregate_block: weights length does not match sources");

    const SourceArrays src = gather_sources(sources, weights, "aggregate_block");
    EmOutcome em = run_em(src, budget, cfg);
    BlockResult result;
    result.targets = std::move(em.targets);
    result.assignment = std::move(em.assignment);
    result.iterations = em.iterations;
    return result;
}

GaussianCloud aggregate_cloud(const GaussianCloud& cloud, const TransportConfig& cfg,
                              AggregateTrace* trace, PhaseTimings* timings) {
    validate_config(cfg);
    cloud.validate();
    const auto t_start = Clock::now();

    if (cloud.empty())
        throw InvalidInputError("aggregate_cloud: cloud must be non-empty");

    GaussianCloud out;
    const std::size_t n = cloud.size();
    const int sh_len = uniform_sh_len(cloud.primitives, "aggregate_cloud");

    // Mass per primitive: deficiency-driven when the ranking channel exists,
    // otherwise the uniform-contribution fallback C == 1.
    std::vector<double> weights;
    if (!cloud.deficiency.empty()) {
        weights = contribution_weights(cloud, cfg.eps_w);
    } else {
        weights.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            weights[i] = cloud.primitives[i].opacity() + cfg.eps_w;
    }

    std::vector<Vec3> positions(n);
    for (std::size_t i = 0; i < n; ++i)
        positions[i] = cloud.primitives[i].mean_v();
    const Partition part = build_balanced_kdtree(positions, weights, cfg.kd_depth);
    const auto t_tree = Clock::now();

    const std::size_t n_blocks = part.block_count();
    std::vector<std::size_t> block_size(n_blocks, 0);
    for (std::int32_t b : part.block_of)
        ++block_size[static_cast<std::size_t>(b)];
    std::vector<std::size_t> member_off(n_blocks + 1, 0);
    for (std::size_t b = 0; b < n_blocks; ++b)
        member_off[b + 1] = member_off[b] + block_size[b];
    std::vector<std::size_t> members(n);
    {
        std::vector<std::size_t> cursor(member_off.begin(), member_off.end() - 1);
        for (std::size_t i = 0; i < n; ++i)
            members[cursor[static_cast<std::size_t>(part.block_of[i])]++] = i;
    }

    std::vector<std::size_t> out_off(n_blocks + 1, 0);
    for (std::size_t b = 0; b < n_blocks; ++b)
        out_off[b + 1] = out_off[b] + block_budget(block_size[b], cfg.sample_ratio);

    out.primitives.resize(out_off[n_blocks]);
    if (trace) {
        trace->blocks.clear();
        trace->blocks.resize(n_blocks);
    }

    const std::size_t n_chunks = chunk_count(n_blocks);
    std::vector<double> estep_chunk(n_chunks, 0.0);
    std::vector<double> mstep_chunk(n_chunks, 0.0);

    parallel_for_chunks(
        std::size_t{0}, n_blocks,
        [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
            SourceArrays src;
            for (std::size_t b = lo; b < hi; ++b) {
                const std::size_t nb = block_size[b];
                const std::size_t* idx = members.data() + member_off[b];
                const auto t_gather = Clock::now();
                src.n = nb;
                src.sh_len = sh_len;
                src.pi.resize(nb);
                src.alpha.resize(nb);
                src.mu.resize(nb);
                src.m2.resize(nb);
                src.feat.resize(nb);
                src.sh.resize(nb);
                for (std::size_t s = 0; s < nb; ++s)
                    gather_source(cloud.primitives[idx[s]], weights[idx[s]], s, src);
                estep_chunk[chunk] += ms_between(t_gather, Clock::now());

                const std::size_t budget = out_off[b + 1] - out_off[b];
                EmOutcome em = run_em(src, budget, cfg);
                estep_chunk[chunk] += em.estep_ms;
                mstep_chunk[chunk] += em.mstep_ms;

                if (trace) {
                    AggregateTrace::Block& tb = trace->blocks[b];
                    tb.sources.assign(idx, idx + nb);
                    tb.assignment = std::move(em.assignment);
                    tb.targets = std::move(em.targets);
                    for (std::size_t j = 0; j < budget; ++j)
                        out.primitives[out_off[b] + j] = tb.targets[j].primitive;
                } else {
                    for (std::size_t j = 0; j < budget; ++j)
                        out.primitives[out_off[b] + j] = std::move(em.targets[j].primitive);
                }
            }
        },
        n_chunks);

    if (timings) {
        timings->tree_ms = ms_between(t_start, t_tree);
        timings->estep_ms = std::accumulate(estep_chunk.begin(), estep_chunk.end(), 0.0);
        timings->mstep_ms = std::accumulate(mstep_chunk.begin(), mstep_chunk.end(), 0.0);
        timings->blocks = n_blocks;
        timings->block_min = *std::min_element(block_size.begin(), block_size.end());
        timings->block_max = *std::max_element(block_size.begin(), block_size.end());
        std::size_t out_min = out.size(), out_max = 0;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            const std::size_t k = out_off[b + 1] - out_off[b];
            out_min = std::min(out_min, k);
            out_max = std::max(out_max, k);
        }
        timings->out_min = out_min;
        timings->out_max = out_max;
        timings->total_ms = ms_between(t_start, Clock::now());
    }
    return out;
}

} // namespace gsc
