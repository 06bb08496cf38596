// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include "gsc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gsc/bench.hpp"
#include "gsc/core.hpp"
#include "gsc/densify.hpp"
#include "gsc/errors.hpp"
#include "gsc/io.hpp"
#include "gsc/log.hpp"
#include "gsc/parallel.hpp"
#include "gsc/ranking.hpp"
#include "gsc/render.hpp"
#include "gsc/transport.hpp"

namespace gsc::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Every flag value a subcommand might bind; each subcommand registers only
// the subset it uses.
struct Options {
    std::string input;
    std::string cameras;
    std::string gt_dir;
    std::string output;
    std::string scores;
    std::string report;
    double ratio = 0.8;
    int kd_depth = 10;
    int em_iters = 5;
    double eta = 0.45;
    double tau1 = 0.1;
    double tau2 = 0.05;
    double eps_v = 0.01;
    std::size_t budget = 0;
    std::uint64_t seed = 0;
    int threads = 0;
    int resolution = 0; // 0 keeps each camera's native size
    // synth
    std::size_t count = 1000;
    std::size_t dup = 1;
    int num_cams = 8;
    // bench
    std::vector<std::size_t> bench_n{100000, 200000, 400000};
    std::vector<int> bench_d{10};
    int repeats = 3;
};

void require_file(const std::string& path, const char* flag) {
    if (path.empty())
        throw InvalidInputError(std::string(flag) + " is required");
    if (!fs::exists(path))
        throw InvalidInputError(std::string(flag) + ": path does not exist: " + path);
}

void apply_threads(int threads) {
    if (threads < 0)
        throw InvalidInputError("--threads must be non-negative");
    set_max_threads(threads);
}

/// Rescale a camera to resolution x resolution, keeping the field of view.
Camera scaled_camera(const Camera& cam, int resolution) {
    if (resolution <= 0)
        return cam;
    Camera out = cam;
    const double sx = static_cast<double>(resolution) / cam.width;
    const double sy = static_cast<double>(resolution) / cam.height;
    out.fx = cam.fx * sx;
    out.fy = cam.fy * sy;
    out.cx = (cam.cx + 0.5) * sx - 0.5;
    out.cy = (cam.cy + 0.5) * sy - 0.5;
    out.width = resolution;
    out.height = resolution;
    return out;
}

std::string view_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03zu", index);
    return buf;
}

/// Ground-truth image for camera `index`: view_###.png (or .ppm/.pgm).
ImageBuffer load_gt(const std::string& dir, std::size_t index) {
    const std::string stem = view_name(index);
    for (const char* ext : {".png", ".ppm", ".pgm"}) {
        const fs::path candidate = fs::path(dir) / (stem + ext);
        if (fs::exists(candidate))
            return read_image(candidate.string());
    }
    throw InvalidInputError("--gt-dir: no image " + stem + ".{png,ppm,pgm} under " + dir);
}

/// Snap to the 8-bit grid the image files use, so evaluating a cloud against
/// its own written renders is an exact match.
void quantize_to_bytes(ImageBuffer& img) {
    for (double& v : img.pixels) {
        const double b = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
        v = b / 255.0;
    }
}

json score_sidecar_json(const GaussianCloud& cloud, const DeficiencyResult& res) {
    json j;
    j["count"] = cloud.size();
    j["n_views"] = res.n_views;
    j["per_view_losses"] = res.per_view_losses;
    j["deficiency"] = cloud.deficiency;
    j["densify"] = cloud.densify;
    j["prune"] = cloud.prune;
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open for writing: " + path);
    out << text;
    if (!out)
        throw IoError("write failed: " + path);
}

/// Load a rank sidecar's channels into the cloud (only those present).
void load_scores(const std::string& path, GaussianCloud& cloud) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open scores file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("scores file " + path + ": " + e.what());
    }
    if (!j.contains("count") || !j["count"].is_number_integer() ||
        j["count"].get<std::size_t>() != cloud.size())
        throw InvalidInputError("scores file " + path +
                                " does not match the cloud's primitive count");
    const auto load_doubles = [&](const char* key, std::vector<double>& dst) {
        if (!j.contains(key))
            return;
        dst = j[key].get<std::vector<double>>();
        if (dst.size() != cloud.size())
            throw InvalidInputError(std::string("scores file: ") + key + " has wrong length");
    };
    load_doubles("deficiency", cloud.deficiency);
    load_doubles("prune", cloud.prune);
    if (j.contains("densify")) {
        cloud.densify = j["densify"].get<std::vector<std::int64_t>>();
        if (cloud.densify.size() != cloud.size())
            throw InvalidInputError("scores file: densify has wrong length");
    }
}

std::vector<Camera> load_cameras_scaled(const Options& opt) {
    require_file(opt.cameras, "--cameras");
    std::vector<Camera> cams = read_cameras(opt.cameras);
    if (opt.resolution > 0)
        for (Camera& c : cams)
            c = scaled_camera(c, opt.resolution);
    return cams;
}

// ---------------------------------------------------------------------------

int cmd_synth(const Options& opt) {
    if (opt.output.empty())
        throw InvalidInputError("--output is required");
    const auto [cloud, cams] = synth_scene(opt.seed, opt.count, opt.dup, opt.num_cams);
    write_ply(cloud, opt.output);
    if (!opt.cameras.empty())
        write_cameras(cams, opt.cameras);
    std::cout << "synth: wrote " << cloud.size() << " primitives to " << opt.output;
    if (!opt.cameras.empty())
        std::cout << " and " << cams.size() << " cameras to " << opt.cameras;
    std::cout << "\n";
    return 0;
}

int cmd_rank(const Options& opt) {
    require_file(opt.input, "--input");
    if (opt.output.empty())
        throw InvalidInputError("--output is required");
    require_file(opt.gt_dir, "--gt-dir");
    apply_threads(opt.threads);

    GaussianCloud cloud = read_ply(opt.input);
    const std::vector<Camera> cams = load_cameras_scaled(opt);
    std::vector<ImageBuffer> gts;
    gts.reserve(cams.size());
    for (std::size_t v = 0; v < cams.size(); ++v)
        gts.push_back(load_gt(opt.gt_dir, v));

    RankingConfig cfg;
    cfg.tau1 = opt.tau1;
    cfg.tau2 = opt.tau2;
    cfg.eps_v = opt.eps_v;
    const DeficiencyResult res = deficiency_scores(cloud, cams, gts, cfg);

    cloud.deficiency.assign(res.deficiency.begin(), res.deficiency.end());
    cloud.densify = densification_score(res.deficiency, res.n_views);
    cloud.prune = pruning_score(cloud, res.per_view_weighted_error_sums, res.per_view_losses);

    write_text_file(opt.output, score_sidecar_json(cloud, res).dump(2) + "\n");

    std::ostringstream table;
    table << "ranked " << cloud.size() << " primitives over " << res.n_views << " views\n";
    for (int v = 0; v < res.n_views; ++v) {
        char line[96];
        std::snprintf(line, sizeof(line), "view %3d: loss %.6f  mask %6.2f%%\n", v,
                      res.per_view_losses[static_cast<std::size_t>(v)],
                      100.0 * res.per_view_mask_fraction[static_cast<std::size_t>(v)]);
        table << line;
    }
    const auto count_if_int = [&](auto lo, auto hi, const auto& xs) {
        std::size_t c = 0;
        for (auto x : xs)
            if (static_cast<double>(x) >= lo && static_cast<double>(x) < hi)
                ++c;
        return c;
    };
    table << "deficiency histogram:  0:" << count_if_int(0, 1, cloud.deficiency)
          << "  1-9:" << count_if_int(1, 10, cloud.deficiency)
          << "  10-99:" << count_if_int(10, 100, cloud.deficiency)
          << "  100+:" << count_if_int(100, 1e300, cloud.deficiency) << "\n";
    table << "densify histogram:     0:" << count_if_int(0, 1, cloud.densify)
          << "  1-9:" << count_if_int(1, 10, cloud.densify)
          << "  10+:" << count_if_int(10, 1e300, cloud.densify) << "\n";
    table << "prune histogram:      <0.25:" << count_if_int(0.0, 0.25, cloud.prune)
          << "  <0.5:" << count_if_int(0.25, 0.5, cloud.prune)
          << "  <0.75:" << count_if_int(0.5, 0.75, cloud.prune)
          << "  <=1:" << count_if_int(0.75, 1.0 + 1e-12, cloud.prune) << "\n";
    std::cout << table.str();
    return 0;
}

int cmd_prune(const Options& opt) {
    require_file(opt.input, "--input");
    require_file(opt.scores, "--scores");
    if (opt.output.empty())
        throw InvalidInputError("--output is required");

    GaussianCloud cloud = read_ply(opt.input);
    load_scores(opt.scores, cloud);
    if (cloud.prune.empty())
        throw InvalidInputError("--scores: sidecar lacks the prune channel");

    const PruneResult res = budgeted_prune(cloud, cloud.prune, opt.budget, opt.seed);
    write_ply(res.kept, opt.output);
    std::cout << "prune: removed " << res.removed.size() << " of " << cloud.size() << " ("
              << res.candidate_count << " candidates, budget " << res.requested_budget
              << ", seed " << opt.seed << ") -> " << opt.output << "\n";
    return 0;
}

int cmd_compact(const Options& opt) {
    require_file(opt.input, "--input");
    if (opt.output.empty())
        throw InvalidInputError("--output is required");
    apply_threads(opt.threads);

    GaussianCloud cloud = read_ply(opt.input);
    if (!opt.scores.empty()) {
        require_file(opt.scores, "--scores");
        load_scores(opt.scores, cloud);
    }

    TransportConfig cfg;
    cfg.sample_ratio = opt.ratio;
    cfg.kd_depth = opt.kd_depth;
    cfg.em_iters = opt.em_iters;

    PhaseTimings timing;
    const GaussianCloud compacted = aggregate_cloud(cloud, cfg, nullptr, &timing);
    write_ply(compacted, opt.output);

    json rep;
    rep["n_before"] = cloud.size();
    rep["n_after"] = compacted.size();
    rep["ratio"] = cfg.sample_ratio;
    rep["kd_depth"] = cfg.kd_depth;
    rep["em_iters"] = cfg.em_iters;
    rep["threads"] = max_threads();
    rep["weights"] = cloud.deficiency.empty() ? "uniform" : "deficiency";
    rep["blocks"] = {{"count", timing.blocks},
                     {"size_min", timing.block_min},
                     {"size_max", timing.block_max},
                     {"out_min", timing.out_min},
                     {"out_max", timing.out_max}};
    rep["phase_ms"] = {{"tree", timing.tree_ms},
                       {"cost", timing.estep_ms},
                       {"em", timing.mstep_ms},
                       {"total", timing.total_ms}};
    if (!opt.report.empty())
        write_text_file(opt.report, rep.dump(2) + "\n");

    char line[160];
    std::snprintf(line, sizeof(line),
                  "compact: %zu -> %zu primitives (%zu blocks)  tree %.1f ms  cost %.1f ms  "
                  "em %.1f ms  total %.1f ms\n",
                  cloud.size(), compacted.size(), timing.blocks, timing.tree_ms,
                  timing.estep_ms, timing.mstep_ms, timing.total_ms);
    std::cout << line;
    return 0;
}

int cmd_split(const Options& opt) {
    require_file(opt.input, "--input");
    require_file(opt.scores, "--scores");
    if (opt.output.empty())
        throw InvalidInputError("--output is required");

    GaussianCloud cloud = read_ply(opt.input);
    load_scores(opt.scores, cloud);
    if (cloud.densify.empty())
        throw InvalidInputError("--scores: sidecar lacks the densify channel");

    std::vector<std::uint8_t> marks(cloud.size(), 0);
    std::size_t n_marked = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.densify[i] >= 1) {
            marks[i] = 1;
            ++n_marked;
        }
    const GaussianCloud out = split_marked(cloud, marks, opt.eta);
    write_ply(out, opt.output);
    std::cout << "split: " << n_marked << " of " << cloud.size() << " primitives split (eta "
              << opt.eta << ") -> " << out.size() << " primitives in " << opt.output << "\n";
    return 0;
}

int cmd_render(const Options& opt) {
    require_file(opt.input, "--input");
    if (opt.output.empty())
        throw InvalidInputError("--output is required");
    apply_threads(opt.threads);

    const GaussianCloud cloud = read_ply(opt.input);
    const std::vector<Camera> cams = load_cameras_scaled(opt);
    fs::create_directories(opt.output);
    for (std::size_t v = 0; v < cams.size(); ++v) {
        const RenderOutput out = rasterize(cloud, cams[v]);
        const fs::path path = fs::path(opt.output) / (view_name(v) + ".png");
        write_image(out.image, path.string());
    }
    std::cout << "render: wrote " << cams.size() << " views to " << opt.output << "\n";
    return 0;
}

int cmd_eval(const Options& opt) {
    require_file(opt.input, "--input");
    require_file(opt.gt_dir, "--gt-dir");
    apply_threads(opt.threads);

    const GaussianCloud cloud = read_ply(opt.input);
    const std::vector<Camera> cams = load_cameras_scaled(opt);

    double psnr_sum = 0.0;
    bool psnr_inf = false;
    double ssim_sum = 0.0;
    for (std::size_t v = 0; v < cams.size(); ++v) {
        const ImageBuffer gt = load_gt(opt.gt_dir, v);
        if (gt.width != cams[v].width || gt.height != cams[v].height || gt.channels != 3)
            throw InvalidInputError("--gt-dir: image " + view_name(v) +
                                    " does not match its camera resolution");
        RenderOutput out = rasterize(cloud, cams[v]);
        quantize_to_bytes(out.image);
        const double p = psnr(out.image, gt);
        const double s = ssim(out.image, gt);
        if (psnr_is_infinite(p))
            psnr_inf = true;
        else
            psnr_sum += p;
        ssim_sum += s;
        char line[96];
        if (psnr_is_infinite(p))
            std::snprintf(line, sizeof(line), "view %3zu: psnr inf  ssim %.6f\n", v, s);
        else
            std::snprintf(line, sizeof(line), "view %3zu: psnr %.4f  ssim %.6f\n", v, p, s);
        std::cout << line;
    }
    const double n = static_cast<double>(cams.size());
    if (psnr_inf)
        std::cout << "mean: psnr inf";
    else {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "mean: psnr %.4f", psnr_sum / n);
        std::cout << buf;
    }
    char buf[48];
    std::snprintf(buf, sizeof(buf), "  ssim %.6f\n", ssim_sum / n);
    std::cout << buf;
    return 0;
}

int cmd_bench(const Options& opt) {
    apply_threads(opt.threads);
    BenchGrid grid;
    grid.n_values = opt.bench_n;
    grid.d_values = opt.bench_d;
    grid.ratio = opt.ratio;
    const BenchReport report = bench_aggregation(grid, opt.seed, opt.repeats);
    const std::string text = bench_report_text(report);
    std::cout << text;
    if (!opt.output.empty())
        write_text_file(opt.output, text);
    return 0;
}

} // namespace

int run(int argc, char** argv) {
    Options opt;
    CLI::App app{"gsc: rank, prune, compact and split Gaussian-splat point clouds"};
    app.require_subcommand(1);

    const auto add_io = [&](CLI::App* sub, bool with_cameras) {
        sub->add_option("--input", opt.input, "input PLY point cloud");
        if (with_cameras)
            sub->add_option("--cameras", opt.cameras, "cameras JSON file");
        sub->add_option("--output", opt.output, "output path");
    };
    const auto add_threads = [&](CLI::App* sub) {
        sub->add_option("--threads", opt.threads, "worker thread cap (0 = all cores)");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene fixture");
    synth->add_option("--output", opt.output, "output PLY path");
    synth->add_option("--cameras", opt.cameras, "optional cameras JSON to write");
    synth->add_option("--count", opt.count, "base primitive count");
    synth->add_option("--dup", opt.dup, "near-duplicates per base primitive");
    synth->add_option("--num-cams", opt.num_cams, "ring cameras to generate");
    synth->add_option("--seed", opt.seed, "RNG seed");

    CLI::App* rank = app.add_subcommand("rank", "score primitives against ground truth");
    add_io(rank, true);
    rank->add_option("--gt-dir", opt.gt_dir, "directory of ground-truth images (view_###)");
    rank->add_option("--tau1", opt.tau1, "texture-difference threshold");
    rank->add_option("--tau2", opt.tau2, "color-difference threshold");
    rank->add_option("--eps-v", opt.eps_v, "contribution threshold");
    rank->add_option("--resolution", opt.resolution, "square render resolution override");
    add_threads(rank);

    CLI::App* prune = app.add_subcommand("prune", "remove a budget of low-value primitives");
    add_io(prune, false);
    prune->add_option("--scores", opt.scores, "rank sidecar JSON");
    prune->add_option("--budget", opt.budget, "number of primitives to remove");
    prune->add_option("--seed", opt.seed, "RNG seed");

    CLI::App* compact = app.add_subcommand("compact", "aggregate the cloud down by --ratio");
    add_io(compact, false);
    compact->add_option("--scores", opt.scores, "optional rank sidecar JSON");
    compact->add_option("--report", opt.report, "write a JSON phase report here");
    compact->add_option("--ratio", opt.ratio, "retained fraction in (0, 1]");
    compact->add_option("--kd-depth", opt.kd_depth, "KD partition depth");
    compact->add_option("--em-iters", opt.em_iters, "EM iteration cap");
    add_threads(compact);

    CLI::App* split = app.add_subcommand("split", "split primitives marked by the sidecar");
    add_io(split, false);
    split->add_option("--scores", opt.scores, "rank sidecar JSON");
    split->add_option("--eta", opt.eta, "split offset fraction in [0, 1)");

    CLI::App* render = app.add_subcommand("render", "render every camera to PNG");
    add_io(render, true);
    render->add_option("--resolution", opt.resolution, "square render resolution override");
    add_threads(render);

    CLI::App* eval = app.add_subcommand("eval", "PSNR/SSIM of renders vs ground truth");
    eval->add_option("--input", opt.input, "input PLY point cloud");
    eval->add_option("--cameras", opt.cameras, "cameras JSON file");
    eval->add_option("--gt-dir", opt.gt_dir, "directory of ground-truth images (view_###)");
    eval->add_option("--resolution", opt.resolution, "square render resolution override");
    add_threads(eval);

    CLI::App* bench = app.add_subcommand("bench", "time aggregation over a size grid");
    bench->add_option("--output", opt.output, "also write the report text here");
    bench->add_option("--bench-n", opt.bench_n, "cloud sizes to measure");
    bench->add_option("--bench-d", opt.bench_d, "KD depths to measure");
    bench->add_option("--ratio", opt.ratio, "retained fraction in (0, 1]");
    bench->add_option("--repeats", opt.repeats, "timed repeats (median)");
    bench->add_option("--seed", opt.seed, "RNG seed");
    add_threads(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints help or the parse error
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(synth))
            return cmd_synth(opt);
        if (app.got_subcommand(rank))
            return cmd_rank(opt);
        if (app.got_subcommand(prune))
            return cmd_prune(opt);
        if (app.got_subcommand(compact))
            return cmd_compact(opt);
        if (app.got_subcommand(split))
            return cmd_split(opt);
        if (app.got_subcommand(render))
            return cmd_render(opt);
        if (app.got_subcommand(eval))
            return cmd_eval(opt);
        if (app.got_subcommand(bench))
            return cmd_bench(opt);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace gsc::cli
