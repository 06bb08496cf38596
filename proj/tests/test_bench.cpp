// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include <cstddef>
#include <string>
#include <vector>

#include "doctest.h"
#include "gsc/bench.hpp"
#include "gsc/errors.hpp"

using namespace gsc;

TEST_CASE("bench_aggregation: grid structure, positive timings, determinism") {
    BenchGrid grid;
    grid.n_values = {10000, 20000};
    grid.d_values = {4, 6};
    grid.ratio = 0.8;

    const BenchReport report = bench_aggregation(grid, 5, 3);
    REQUIRE(report.cells.size() == 4);
    REQUIRE(report.growth.size() == 2); // one N step per depth
    CHECK(report.seed == 5);
    CHECK(report.repeats == 3);

    for (const BenchCell& cell : report.cells) {
        CHECK((cell.n == 10000 || cell.n == 20000));
        CHECK((cell.depth == 4 || cell.depth == 6));
        CHECK(cell.ratio == doctest::Approx(0.8));
        CHECK(cell.tree_ms > 0.0);
        CHECK(cell.cost_ms > 0.0);
        CHECK(cell.em_ms > 0.0);
        CHECK(cell.total_ms > 0.0);
        CHECK(cell.output_count > 0);
        CHECK(cell.output_count <= cell.n);
        // ratio 0.8 with per-block rounding keeps the output near 0.8 N.
        const double frac = static_cast<double>(cell.output_count) / static_cast<double>(cell.n);
        CHECK(frac > 0.7);
        CHECK(frac < 0.9);
    }

    for (const GrowthRow& row : report.growth) {
        CHECK(row.n_from == 10000);
        CHECK(row.n_to == 20000);
        CHECK(row.factor > 0.0);
    }

    // The deterministic part of the report (output counts) repeats exactly.
    const BenchReport again = bench_aggregation(grid, 5, 3);
    REQUIRE(again.cells.size() == report.cells.size());
    for (std::size_t i = 0; i < report.cells.size(); ++i)
        CHECK(again.cells[i].output_count == report.cells[i].output_count);
}

TEST_CASE("bench_report_text renders every cell and growth row") {
    BenchGrid grid;
    grid.n_values = {10000};
    grid.d_values = {3};
    const BenchReport report = bench_aggregation(grid, 1, 3);
    const std::string text = bench_report_text(report);
    CHECK(text.find("10000") != std::string::npos);
    CHECK(!text.empty());
}

TEST_CASE("bench_aggregation input validation") {
    BenchGrid grid;
    grid.n_values = {10000};
    grid.d_values = {4};

    BenchGrid empty_n = grid;
    empty_n.n_values.clear();
    CHECK_THROWS_AS(bench_aggregation(empty_n, 0, 3), InvalidInputError);

    BenchGrid empty_d = grid;
    empty_d.d_values.clear();
    CHECK_THROWS_AS(bench_aggregation(empty_d, 0, 3), InvalidInputError);

    BenchGrid small = grid;
    small.n_values = {500};
    CHECK_THROWS_AS(bench_aggregation(small, 0, 3), InvalidInputError);

    CHECK_THROWS_AS(bench_aggregation(grid, 0, 2), InvalidInputError);

    BenchGrid bad_ratio = grid;
    bad_ratio.ratio = 0.0;
    CHECK_THROWS_AS(bench_aggregation(bad_ratio, 0, 3), InvalidInputError);
    bad_ratio.ratio = 1.5;
    CHECK_THROWS_AS(bench_aggregation(bad_ratio, 0, 3), InvalidInputError);
}
