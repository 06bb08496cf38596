// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include "gsc/bench.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <vector>

#include "gsc/core.hpp"
#include "gsc/errors.hpp"
#include "gsc/io.hpp"
#include "gsc/log.hpp"
#include "gsc/parallel.hpp"
#include "gsc/transport.hpp"

namespace gsc {
namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1)
        return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Keeps the ">0" report invariant honest even if a phase is faster than the
// clock tick.
double positive(double ms) { return std::max(ms, 1e-6); }

} // namespace

BenchReport bench_aggregation(const BenchGrid& grid, std::uint64_t seed, int repeats) {
    if (grid.n_values.empty() || grid.d_values.empty())
        throw InvalidInputError("bench_aggregation: grid must list at least one N and one D");
    for (std::size_t n : grid.n_values)
        if (n < 10000)
            throw InvalidInputError("bench_aggregation: every N must be at least 10^4");
    if (repeats < 3)
        throw InvalidInputError("bench_aggregation: repeats must be at least 3");
    if (!(grid.ratio > 0.0 && grid.ratio <= 1.0))
        throw InvalidInputError("bench_aggregation: ratio must lie in (0, 1]");

    BenchReport report;
    report.seed = seed;
    report.repeats = repeats;
    report.threads = max_threads();

    for (std::size_t n : grid.n_values) {
        // Scores are irrelevant for timing, so the cloud is synthesized bare
        // and aggregation falls back to uniform contributions.
        GaussianCloud cloud = synth_scene(seed, n, 1, 0).first;
        for (int depth : grid.d_values) {
            TransportConfig cfg;
            cfg.sample_ratio = grid.ratio;
            cfg.kd_depth = depth;

            std::vector<double> tree_ms, cost_ms, em_ms, total_ms;
            std::size_t output_count = 0;
            for (int rep = 0; rep <= repeats; ++rep) {
                PhaseTimings t;
                const GaussianCloud out = aggregate_cloud(cloud, cfg, nullptr, &t);
                if (rep == 0) { // warm-up: caches and allocator settle
                    output_count = out.size();
                    continue;
                }
                if (out.size() != output_count)
                    throw ValidationError("bench_aggregation: output count changed between repeats");
                tree_ms.push_back(t.tree_ms);
                cost_ms.push_back(t.estep_ms);
                em_ms.push_back(t.mstep_ms);
                total_ms.push_back(t.total_ms);
            }

            BenchCell cell;
            cell.n = n;
            cell.depth = depth;
            cell.ratio = grid.ratio;
            cell.tree_ms = positive(median(tree_ms));
            cell.cost_ms = positive(median(cost_ms));
            cell.em_ms = positive(median(em_ms));
            cell.total_ms = positive(median(total_ms));
            cell.output_count = output_count;
            report.cells.push_back(cell);
            log::info("bench_aggregation: N=", n, " D=", depth, " total=", cell.total_ms,
                      " ms");
        }
    }

    for (int depth : grid.d_values)
        for (std::size_t i = 0; i + 1 < grid.n_values.size(); ++i) {
            const auto find_cell = [&](std::size_t n) {
                for (const BenchCell& c : report.cells)
                    if (c.n == n && c.depth == depth)
                        return &c;
                return static_cast<const BenchCell*>(nullptr);
            };
            const BenchCell* a = find_cell(grid.n_values[i]);
            const BenchCell* b = find_cell(grid.n_values[i + 1]);
            GrowthRow row;
            row.n_from = a->n;
            row.n_to = b->n;
            row.depth = depth;
            row.factor = b->total_ms / a->total_ms;
            report.growth.push_back(row);
        }
    return report;
}

std::string bench_report_text(const BenchReport& report) {
    std::ostringstream out;
    out << "aggregation benchmark (seed " << report.seed << ", median of " << report.repeats
        << " runs, warm-up discarded, thread cap " << report.threads << ")\n";
    out << std::left << std::setw(10) << "N" << std::setw(5) << "D" << std::setw(8) << "ratio"
        << std::right << std::setw(12) << "tree ms" << std::setw(12) << "cost ms"
        << std::setw(12) << "em ms" << std::setw(12) << "total ms" << std::setw(10) << "out"
        << "\n";
    out << std::fixed;
    for (const BenchCell& c : report.cells) {
        out << std::left << std::setw(10) << c.n << std::setw(5) << c.depth
            << std::setprecision(3) << std::setw(8) << c.ratio << std::right
            << std::setprecision(2) << std::setw(12) << c.tree_ms << std::setw(12) << c.cost_ms
            << std::setw(12) << c.em_ms << std::setw(12) << c.total_ms << std::setw(10)
            << c.output_count << "\n";
    }
    if (!report.growth.empty()) {
        out << "total-time growth at fixed D\n";
        for (const GrowthRow& g : report.growth)
            out << "  D=" << g.depth << "  " << g.n_from << " -> " << g.n_to << "  x"
                << std::setprecision(3) << g.factor << "\n";
    }
    return out.str();
}

} // namespace gsc
