// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace gsc {

struct BenchGrid {
    std::vector<std::size_t> n_values; // cloud sizes, each >= 10000
    std::vector<int> d_values;         // KD-tree depths
    double ratio = 0.8;                // retained fraction per block
};

/// One measured grid cell.  Timings are medians over the non-warm-up runs;
/// the output count is deterministic and identical across repeats.
struct BenchCell {
    std::size_t n = 0;
    int depth = 0;
    double ratio = 0.0;
    double tree_ms = 0.0;  // balanced KD-tree build
    double cost_ms = 0.0;  // feature + assignment passes
    double em_ms = 0.0;    // moment-matching passes
    double total_ms = 0.0;
    std::size_t output_count = 0;
};

/// Total-time growth when N steps to the next grid value at fixed (D, ratio).
struct GrowthRow {
    std::size_t n_from = 0;
    std::size_t n_to = 0;
    int depth = 0;
    double factor = 0.0; // time(n_to) / time(n_from)
};

struct BenchReport {
    std::vector<BenchCell> cells;
    std::vector<GrowthRow> growth;
    std::uint64_t seed = 0;
    int repeats = 0;
    int threads = 0; // thread cap the phases ran under
};

/// Time aggregate_cloud over synthetic clouds for every (N, D) pair in the
/// grid.  Each cell runs `repeats + 1` times: the warm-up is discarded and
/// the median of the rest is reported.  Requires every N >= 10^4 and
/// repeats >= 3.  Temporarily honors the current thread cap and records it.
BenchReport bench_aggregation(const BenchGrid& grid, std::uint64_t seed, int repeats);

/// Fixed-width text rendering of the report (one line per cell, then the
/// growth table).
std::string bench_report_text(const BenchReport& report);

} // namespace gsc
