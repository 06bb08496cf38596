// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "gsc/core.hpp"
#include "gsc/densify.hpp"
#include "gsc/errors.hpp"
#include "gsc/rng.hpp"
#include "gsc/vecmat.hpp"

using namespace gsc;

namespace {

GaussianPrimitive parent_fixture() {
    GaussianPrimitive g;
    g.set_mean(Vec3{0, 0, 0});
    g.set_scales(Vec3{2.0, 1.0, 1.0}); // covariance diag(4, 1, 1)
    g.set_opacity(0.8);
    g.set_sh(0, 0, 0.3);
    g.set_sh(0, 1, -0.1);
    g.set_sh(0, 2, 0.2);
    return g;
}

GaussianPrimitive random_parent(Rng& rng) {
    GaussianPrimitive g;
    g.set_mean(Vec3{2.0 * (rng.uniform01() - 0.5), 2.0 * (rng.uniform01() - 0.5),
                    2.0 * (rng.uniform01() - 0.5)});
    const Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    g.set_rotation(q.norm() > 0 ? q : Quat{1, 0, 0, 0});
    // Distinct scales keep the principal axis unambiguous.
    g.set_scales(Vec3{1.5 + rng.uniform01(), 0.6 + 0.3 * rng.uniform01(),
                      0.1 + 0.2 * rng.uniform01()});
    g.set_opacity(0.1 + 0.8 * rng.uniform01());
    return g;
}

Mat3 mixture_second_moment(const std::array<GaussianPrimitive, 2>& ch, const Vec3& center) {
    Mat3 m{};
    for (const GaussianPrimitive& c : ch) {
        const Mat3 sigma = build_covariance(c.rotation_q(), c.scales_v()).matrix();
        const Vec3 d = c.mean_v() - center;
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t col = 0; col < 3; ++col)
                m(r, col) += 0.5 * (sigma(r, col) + d[r] * d[col]);
    }
    return m;
}

} // namespace

TEST_CASE("split_gaussian: fixed contractive example") {
    const GaussianPrimitive parent = parent_fixture();
    const auto ch = split_gaussian(parent, 0.45);

    // Children at mu +/- eta * s_k * v_k = (+-0.9, 0, 0).
    const Vec3 m0 = ch[0].mean_v();
    const Vec3 m1 = ch[1].mean_v();
    CHECK(std::abs(std::abs(m0.x) - 0.9) <= 1e-12);
    CHECK(std::abs(m0.y) <= 1e-12);
    CHECK(std::abs(m0.z) <= 1e-12);
    CHECK(norm(m0 + m1) <= 1e-12); // symmetric about the origin

    // Every scale shrinks by sqrt(1 - 0.45^2) = 0.8930285...
    const double shrink = std::sqrt(1.0 - 0.45 * 0.45);
    const Vec3 s0 = ch[0].scales_v();
    CHECK(s0.x == doctest::Approx(2.0 * shrink).epsilon(1e-9));
    CHECK(s0.y == doctest::Approx(shrink).epsilon(1e-9));
    CHECK(s0.z == doctest::Approx(shrink).epsilon(1e-9));
    CHECK(s0.x == doctest::Approx(1.786057).epsilon(1e-5));
    CHECK(s0.y == doctest::Approx(0.893029).epsilon(1e-5));

    // Opacity, SH, and rotation are copied.
    for (const auto& c : ch) {
        CHECK(c.opacity_logit == parent.opacity_logit);
        CHECK(c.sh_coeffs == parent.sh_coeffs);
        CHECK(c.rotation == parent.rotation);
    }
}

TEST_CASE("split_gaussian: eta 0 duplicates the parent in place") {
    const GaussianPrimitive parent = parent_fixture();
    const auto ch = split_gaussian(parent, 0.0);
    for (const auto& c : ch) {
        CHECK(norm(c.mean_v() - parent.mean_v()) == 0.0);
        CHECK(c.log_scales == parent.log_scales);
        CHECK(c.rotation == parent.rotation);
    }
}

TEST_CASE("split_gaussian: midpoint is the parent mean, machine precision") {
    Rng rng(83);
    for (int t = 0; t < 500; ++t) {
        const GaussianPrimitive parent = random_parent(rng);
        const auto ch = split_gaussian(parent, 0.45);
        const Vec3 mid = (ch[0].mean_v() + ch[1].mean_v()) * 0.5;
        CHECK(norm(mid - parent.mean_v()) <= 1e-14 * (1.0 + norm(parent.mean_v())));
    }
}

TEST_CASE("split_gaussian: principal moment is preserved, off-axis contracts") {
    Rng rng(89);
    for (int t = 0; t < 300; ++t) {
        const GaussianPrimitive parent = random_parent(rng);
        const Covariance3 cov = build_covariance(parent.rotation_q(), parent.scales_v());
        const PrincipalAxis axis = principal_axis(cov);
        const auto ch = split_gaussian(parent, 0.45);

        const Mat3 mix = mixture_second_moment(ch, parent.mean_v());
        const Mat3 sigma = cov.matrix();

        // Along the principal direction the mixture restores s_k^2 exactly.
        const Vec3 v = axis.v_k;
        const double principal_mix = dot(v, mix * v);
        const double principal_parent = dot(v, sigma * v);
        CHECK(std::abs(principal_mix - principal_parent) <=
              1e-9 * std::abs(principal_parent));
        CHECK(principal_parent == doctest::Approx(axis.s_k * axis.s_k).epsilon(1e-9));

        // Other eigendirections contract by exactly (1 - eta^2).
        const EigenDecomposition ed = eigendecompose_sym3(cov);
        for (int j = 1; j < 3; ++j) {
            Vec3 u{ed.rotation(0, static_cast<std::size_t>(j)),
                   ed.rotation(1, static_cast<std::size_t>(j)),
                   ed.rotation(2, static_cast<std::size_t>(j))};
            const double mix_val = dot(u, mix * u);
            const double parent_val = dot(u, sigma * u);
            const double expected = (1.0 - 0.45 * 0.45) * parent_val;
            CHECK(std::abs(mix_val - expected) <= 1e-9 * std::abs(expected));
        }
    }
}

TEST_CASE("split_gaussian: strict moments reproduce the parent covariance") {
    Rng rng(97);
    for (int t = 0; t < 200; ++t) {
        const GaussianPrimitive parent = random_parent(rng);
        const auto ch = split_gaussian(parent, 0.45, /*strict_moments=*/true);
        const Mat3 mix = mixture_second_moment(ch, parent.mean_v());
        const Mat3 sigma = build_covariance(parent.rotation_q(), parent.scales_v()).matrix();
        double scale = 0.0;
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c)
                scale = std::max(scale, std::abs(sigma(r, c)));
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c)
                CHECK(std::abs(mix(r, c) - sigma(r, c)) <= 1e-9 * scale);
    }
}

TEST_CASE("split_gaussian: isotropic parents separate by 2 eta s") {
    GaussianPrimitive parent;
    parent.set_mean(Vec3{1, 1, 1});
    parent.set_scales(Vec3{0.5, 0.5, 0.5});
    parent.set_opacity(0.6);
    const auto ch = split_gaussian(parent, 0.3);
    CHECK(norm(ch[0].mean_v() - ch[1].mean_v()) == doctest::Approx(2.0 * 0.3 * 0.5).epsilon(1e-12));
    // Deterministic: the tie-broken axis is the same on every call.
    const auto ch2 = split_gaussian(parent, 0.3);
    CHECK(norm(ch[0].mean_v() - ch2[0].mean_v()) == 0.0);
}

TEST_CASE("split_gaussian: eta domain") {
    const GaussianPrimitive parent = parent_fixture();
    CHECK_THROWS_AS(split_gaussian(parent, 1.0), DomainError);
    CHECK_THROWS_AS(split_gaussian(parent, 1.5), DomainError);
    CHECK_THROWS_AS(split_gaussian(parent, -0.1), DomainError);
    CHECK_THROWS_AS(split_gaussian(parent, std::nan("")), DomainError);
    CHECK_NOTHROW(split_gaussian(parent, 0.0));
    CHECK_NOTHROW(split_gaussian(parent, 0.999));
}

TEST_CASE("split_marked: survivors first, child pairs in parent order") {
    GaussianCloud cloud;
    for (int i = 0; i < 5; ++i) {
        GaussianPrimitive g = parent_fixture();
        g.set_mean(Vec3{static_cast<double>(i), 0, 0});
        cloud.primitives.push_back(g);
    }
    cloud.deficiency = {1, 2, 3, 4, 5};
    cloud.prune = {0.1, 0.2, 0.3, 0.4, 0.5};

    const std::vector<std::uint8_t> marks{0, 1, 0, 1, 0};
    const GaussianCloud out = split_marked(cloud, marks, 0.45);
    REQUIRE(out.size() == 7); // 3 survivors + 2 child pairs

    CHECK(out.primitives[0].mean_v().x == doctest::Approx(0.0));
    CHECK(out.primitives[1].mean_v().x == doctest::Approx(2.0));
    CHECK(out.primitives[2].mean_v().x == doctest::Approx(4.0));

    // Children of parent 1 then parent 3, each pair centered on its parent.
    const Vec3 c1 = (out.primitives[3].mean_v() + out.primitives[4].mean_v()) * 0.5;
    const Vec3 c3 = (out.primitives[5].mean_v() + out.primitives[6].mean_v()) * 0.5;
    CHECK(norm(c1 - Vec3{1, 0, 0}) <= 1e-12);
    CHECK(norm(c3 - Vec3{3, 0, 0}) <= 1e-12);

    // Score channels described the parents and are dropped.
    CHECK(out.deficiency.empty());
    CHECK(out.prune.empty());
}

TEST_CASE("split_marked: no marks keeps the primitives verbatim") {
    GaussianCloud cloud;
    for (int i = 0; i < 3; ++i) {
        GaussianPrimitive g = parent_fixture();
        g.set_mean(Vec3{static_cast<double>(i), -1, 2});
        cloud.primitives.push_back(g);
    }
    const GaussianCloud out = split_marked(cloud, {0, 0, 0}, 0.45);
    REQUIRE(out.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(out.primitives[i].mean == cloud.primitives[i].mean);
        CHECK(out.primitives[i].log_scales == cloud.primitives[i].log_scales);
    }
}

TEST_CASE("split_marked: children satisfy the split contract") {
    Rng rng(101);
    GaussianCloud cloud;
    std::vector<std::uint8_t> marks;
    for (int i = 0; i < 12; ++i) {
        cloud.primitives.push_back(random_parent(rng));
        marks.push_back(i % 3 == 0 ? 1 : 0);
    }
    const GaussianCloud out = split_marked(cloud, marks, 0.45);
    REQUIRE(out.size() == 12 - 4 + 8);

    // Child pairs start after the 8 survivors, in parent order.
    std::size_t pair = 8;
    for (int i = 0; i < 12; i += 3) {
        const GaussianPrimitive& parent = cloud.primitives[static_cast<std::size_t>(i)];
        const Vec3 mid =
            (out.primitives[pair].mean_v() + out.primitives[pair + 1].mean_v()) * 0.5;
        CHECK(norm(mid - parent.mean_v()) <= 1e-12 * (1.0 + norm(parent.mean_v())));
        pair += 2;
    }
}

TEST_CASE("split_marked: marks length must match") {
    GaussianCloud cloud;
    cloud.primitives.push_back(parent_fixture());
    CHECK_THROWS_AS(split_marked(cloud, {1, 0}, 0.45), InvalidInputError);
    CHECK_THROWS_AS(split_marked(cloud, {}, 0.45), InvalidInputError);
}

TEST_CASE("eta_residual: fixed values and positivity") {
    CHECK(eta_residual(0.0) == 0.0);

    const double f45 = eta_residual(0.45);
    CHECK(f45 >= 0.0120);
    CHECK(f45 <= 0.0125);

    CHECK(eta_residual(0.6) == doctest::Approx(0.0452).epsilon(0.02));

    // Even in eta.
    CHECK(eta_residual(-0.45) == doctest::Approx(f45).epsilon(1e-12));

    // Strictly positive on the open interval.
    for (int i = 1; i < 1000; ++i) {
        const double eta = static_cast<double>(i) / 1000.0;
        CHECK(eta_residual(eta) > 0.0);
    }

    CHECK_THROWS_AS(eta_residual(1.0), DomainError);
    CHECK_THROWS_AS(eta_residual(-1.0), DomainError);
    CHECK_THROWS_AS(eta_residual(2.0), DomainError);
}
