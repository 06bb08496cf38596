// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gsc {

/// Deterministic random source.
///
/// Wraps std::mt19937_64 but derives uniform and normal variates by hand
/// instead of going through std::uniform_real_distribution /
/// std::normal_distribution, whose output is implementation-defined.  Every
/// draw here consumes a well-defined number of engine words, so a given seed
/// produces the same stream on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Raw 64-bit engine word.
    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1).  Uses the top 53 bits of one engine word.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer in [0, n).  n must be > 0.  Rejection-free modulo is
    /// fine here: n is tiny compared to 2^64, the bias is far below anything
    /// our statistical tests can see, and it keeps the draw at one word.
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

    /// Standard normal via Box-Muller.  Consumes exactly two engine words
    /// per pair; the second variate of the pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 must be strictly positive for the log.
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Normal with given mean and standard deviation.
    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace gsc
