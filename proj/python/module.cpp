// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gsc/core.hpp"
#include "gsc/densify.hpp"
#include "gsc/errors.hpp"
#include "gsc/io.hpp"
#include "gsc/parallel.hpp"
#include "gsc/ranking.hpp"
#include "gsc/render.hpp"
#include "gsc/transport.hpp"
#include "gsc/vecmat.hpp"

namespace py = pybind11;

namespace {

using Arr3 = std::array<double, 3>;
using Arr4 = std::array<double, 4>;
using Mat33 = std::array<std::array<double, 3>, 3>;

Arr3 to_arr(const gsc::Vec3& v) { return {v.x, v.y, v.z}; }
gsc::Vec3 to_vec(const Arr3& a) { return {a[0], a[1], a[2]}; }

Mat33 to_mat33(const gsc::Mat3& m) {
    Mat33 out{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = m(r, c);
    return out;
}

gsc::Mat3 to_mat3(const Mat33& m) {
    gsc::Mat3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            out(r, c) = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return out;
}

gsc::MeanCov to_meancov(const Arr3& mean, const Mat33& cov) {
    return gsc::MeanCov{to_vec(mean), to_mat3(cov)};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Gaussian-splat compaction core: IO, rendering, ranking, "
              "transport-based aggregation and splitting";
    m.attr("__version__") = "0.1.0";

    py::register_exception<gsc::Error>(m, "GscError", PyExc_RuntimeError);

    py::class_<gsc::GaussianPrimitive>(m, "Primitive")
        .def(py::init<>())
        .def_property(
            "mean", [](const gsc::GaussianPrimitive& g) { return to_arr(g.mean_v()); },
            [](gsc::GaussianPrimitive& g, const Arr3& v) { g.set_mean(to_vec(v)); })
        .def_property(
            "rotation",
            [](const gsc::GaussianPrimitive& g) {
                const gsc::Quat q = g.rotation_q();
                return Arr4{q.w, q.x, q.y, q.z};
            },
            [](gsc::GaussianPrimitive& g, const Arr4& q) {
                g.set_rotation(gsc::Quat{q[0], q[1], q[2], q[3]});
            })
        .def_property(
            "scales", [](const gsc::GaussianPrimitive& g) { return to_arr(g.scales_v()); },
            [](gsc::GaussianPrimitive& g, const Arr3& s) { g.set_scales(to_vec(s)); })
        .def_property(
            "opacity", [](const gsc::GaussianPrimitive& g) { return g.opacity(); },
            [](gsc::GaussianPrimitive& g, double a) { g.set_opacity(a); })
        .def_readwrite("sh_coeffs", &gsc::GaussianPrimitive::sh_coeffs)
        .def("covariance",
             [](const gsc::GaussianPrimitive& g) {
                 return to_mat33(gsc::build_covariance(g.rotation_q(), g.scales_v()).matrix());
             })
        .def("__repr__", [](const gsc::GaussianPrimitive& g) {
            const gsc::Vec3 p = g.mean_v();
            return "<gsc.Primitive at (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                   ", " + std::to_string(p.z) + ")>";
        });

    py::class_<gsc::GaussianCloud>(m, "Cloud")
        .def(py::init<>())
        .def_readwrite("primitives", &gsc::GaussianCloud::primitives)
        .def_readwrite("deficiency", &gsc::GaussianCloud::deficiency)
        .def_readwrite("densify", &gsc::GaussianCloud::densify)
        .def_readwrite("prune", &gsc::GaussianCloud::prune)
        .def_readwrite("weight", &gsc::GaussianCloud::weight)
        .def("validate", &gsc::GaussianCloud::validate)
        .def("__len__", &gsc::GaussianCloud::size)
        .def("__repr__", [](const gsc::GaussianCloud& c) {
            return "<gsc.Cloud of " + std::to_string(c.size()) + " primitives>";
        });

    py::class_<gsc::Camera>(m, "Camera")
        .def_readonly("fx", &gsc::Camera::fx)
        .def_readonly("fy", &gsc::Camera::fy)
        .def_readonly("cx", &gsc::Camera::cx)
        .def_readonly("cy", &gsc::Camera::cy)
        .def_readonly("width", &gsc::Camera::width)
        .def_readonly("height", &gsc::Camera::height)
        .def("center", [](const gsc::Camera& c) { return to_arr(c.center()); })
        .def("world_to_camera", &gsc::Camera::world_to_camera)
        .def_static(
            "look_at",
            [](const Arr3& eye, const Arr3& target, const Arr3& up, double fx, double fy,
               double cx, double cy, int width, int height) {
                return gsc::Camera::look_at(to_vec(eye), to_vec(target), to_vec(up), fx, fy, cx,
                                            cy, width, height);
            },
            py::arg("eye"), py::arg("target"), py::arg("up"), py::arg("fx"), py::arg("fy"),
            py::arg("cx"), py::arg("cy"), py::arg("width"), py::arg("height"))
        .def_static(
            "from_w2c",
            [](double fx, double fy, double cx, double cy, int width, int height,
               const std::array<double, 16>& w2c, const std::string& label) {
                return gsc::Camera::from_w2c(fx, fy, cx, cy, width, height, w2c, label);
            },
            py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"),
            py::arg("height"), py::arg("w2c"), py::arg("label") = "camera");

    py::class_<gsc::ImageBuffer>(m, "Image")
        .def(py::init<>())
        .def_static("create", &gsc::ImageBuffer::create, py::arg("width"), py::arg("height"),
                    py::arg("channels"), py::arg("fill") = 0.0)
        .def_readonly("width", &gsc::ImageBuffer::width)
        .def_readonly("height", &gsc::ImageBuffer::height)
        .def_readonly("channels", &gsc::ImageBuffer::channels)
        .def_readwrite("pixels", &gsc::ImageBuffer::pixels)
        .def("at",
             [](const gsc::ImageBuffer& img, int x, int y, int c) {
                 if (x < 0 || x >= img.width || y < 0 || y >= img.height || c < 0 ||
                     c >= img.channels)
                     throw py::index_error("pixel index out of range");
                 return img.at(x, y, c);
             },
             py::arg("x"), py::arg("y"), py::arg("c") = 0);

    // ---- file IO ----
    m.def("read_ply", &gsc::read_ply, py::arg("path"));
    m.def("write_ply", &gsc::write_ply, py::arg("cloud"), py::arg("path"));
    m.def("read_cameras", &gsc::read_cameras, py::arg("path"));
    m.def("write_cameras", &gsc::write_cameras, py::arg("cameras"), py::arg("path"));
    m.def("read_image", &gsc::read_image, py::arg("path"));
    m.def("write_image", &gsc::write_image, py::arg("image"), py::arg("path"));
    m.def("synth_scene", &gsc::synth_scene, py::arg("seed"), py::arg("n_gaussians"),
          py::arg("duplication_factor") = 1, py::arg("n_cameras") = 0,
          "Deterministic synthetic fixture; returns (cloud, cameras).");

    // ---- rendering and metrics ----
    m.def(
        "render",
        [](const gsc::GaussianCloud& cloud, const gsc::Camera& cam) {
            return gsc::rasterize(cloud, cam).image;
        },
        py::arg("cloud"), py::arg("camera"),
        "Depth-sorted front-to-back alpha blending; returns the RGB image.");
    m.def("psnr", &gsc::psnr, py::arg("a"), py::arg("b"));
    m.def("ssim", &gsc::ssim, py::arg("a"), py::arg("b"));
    m.def("view_loss", &gsc::view_loss, py::arg("a"), py::arg("b"),
          py::arg("lambda_ssim") = 0.2);

    // ---- ranking ----
    m.def(
        "rank_scores",
        [](const gsc::GaussianCloud& cloud, const std::vector<gsc::Camera>& cameras,
           const std::vector<gsc::ImageBuffer>& gt_images, double tau1, double tau2,
           double eps_v) {
            gsc::RankingConfig cfg;
            cfg.tau1 = tau1;
            cfg.tau2 = tau2;
            cfg.eps_v = eps_v;
            const gsc::DeficiencyResult res =
                gsc::deficiency_scores(cloud, cameras, gt_images, cfg);
            py::dict out;
            out["deficiency"] = res.deficiency;
            out["densify"] = gsc::densification_score(res.deficiency, res.n_views);
            out["prune"] =
                gsc::pruning_score(cloud, res.per_view_weighted_error_sums, res.per_view_losses);
            out["per_view_losses"] = res.per_view_losses;
            out["per_view_mask_fraction"] = res.per_view_mask_fraction;
            return out;
        },
        py::arg("cloud"), py::arg("cameras"), py::arg("gt_images"), py::arg("tau1") = 0.1,
        py::arg("tau2") = 0.05, py::arg("eps_v") = 0.01,
        "Multi-view contribution ranking; returns a dict with the deficiency "
        "counts, densification and pruning scores, and per-view diagnostics.");

    m.def(
        "budgeted_prune",
        [](const gsc::GaussianCloud& cloud, const std::vector<double>& prune_score,
           std::size_t budget, std::uint64_t seed) {
            gsc::PruneResult res = gsc::budgeted_prune(cloud, prune_score, budget, seed);
            return py::make_tuple(std::move(res.kept), res.removed);
        },
        py::arg("cloud"), py::arg("prune_score"), py::arg("budget"), py::arg("seed") = 0,
        "Weighted sampling without replacement among prune candidates; "
        "returns (kept_cloud, removed_indices).");

    // ---- transport / aggregation ----
    m.def(
        "aggregate",
        [](const gsc::GaussianCloud& cloud, double ratio, int kd_depth, int em_iters) {
            gsc::TransportConfig cfg;
            cfg.sample_ratio = ratio;
            cfg.kd_depth = kd_depth;
            cfg.em_iters = em_iters;
            return gsc::aggregate_cloud(cloud, cfg);
        },
        py::arg("cloud"), py::arg("ratio") = 0.8, py::arg("kd_depth") = 10,
        py::arg("em_iters") = 5,
        "Importance-balanced block partition + per-block EM merge; returns "
        "the compacted cloud.");
    m.def(
        "bures_wasserstein_sq",
        [](const Arr3& mean_a, const Mat33& cov_a, const Arr3& mean_b, const Mat33& cov_b) {
            return gsc::bures_wasserstein_sq(to_meancov(mean_a, cov_a),
                                             to_meancov(mean_b, cov_b));
        },
        py::arg("mean_a"), py::arg("cov_a"), py::arg("mean_b"), py::arg("cov_b"),
        "Exact squared 2-Wasserstein distance between two Gaussians.");
    m.def(
        "gelbrich_sq",
        [](const Arr3& mean_a, const Mat33& cov_a, const Arr3& mean_b, const Mat33& cov_b) {
            return gsc::gelbrich_sq(to_meancov(mean_a, cov_a), to_meancov(mean_b, cov_b));
        },
        py::arg("mean_a"), py::arg("cov_a"), py::arg("mean_b"), py::arg("cov_b"),
        "Gelbrich-form upper bound on the squared 2-Wasserstein distance.");
    m.def("gelbrich_feature", &gsc::gelbrich_feature, py::arg("primitive"),
          "9-dim embedding whose squared Euclidean distance equals gelbrich_sq.");

    // ---- densification ----
    m.def(
        "split",
        [](const gsc::GaussianPrimitive& parent, double eta, bool strict_moments) {
            const auto children = gsc::split_gaussian(parent, eta, strict_moments);
            return py::make_tuple(children[0], children[1]);
        },
        py::arg("parent"), py::arg("eta") = 0.45, py::arg("strict_moments") = false,
        "Split one splat into a contractive pair along its principal axis.");
    m.def(
        "split_marked",
        [](const gsc::GaussianCloud& cloud, const std::vector<int>& marks, double eta,
           bool strict_moments) {
            std::vector<std::uint8_t> flags(marks.size());
            for (std::size_t i = 0; i < marks.size(); ++i)
                flags[i] = marks[i] != 0 ? 1 : 0;
            return gsc::split_marked(cloud, flags, eta, strict_moments);
        },
        py::arg("cloud"), py::arg("marks"), py::arg("eta") = 0.45,
        py::arg("strict_moments") = false,
        "Split every marked primitive; survivors first, then child pairs.");
    m.def("eta_residual", &gsc::eta_residual, py::arg("eta"),
          "Center-opacity mismatch of the contractive split.");

    // ---- execution control ----
    m.def("set_max_threads", &gsc::set_max_threads, py::arg("n"),
          "Cap worker threads; 0 restores the hardware default.");
    m.def("max_threads", &gsc::max_threads);
}
