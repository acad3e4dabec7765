// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

// tprim command-line tool. Exit codes: 0 success, 1 usage error,
// 2 input-format error, 3 numerical failure.

#include "tprim/tprim.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

using namespace tprim;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> split_numbers(const std::string &text, char sep, std::size_t count, const char *flag) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find(sep, start);
        const std::string part = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception &) {
            throw UsageError(std::string(flag) + ": cannot parse '" + text + "'");
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    if (out.size() != count) throw UsageError(std::string(flag) + ": expected " + std::to_string(count) + " values");
    return out;
}

struct GridFlags {
    std::string dims, origin, extent;

    void add(CLI::App *cmd) {
        cmd->add_option("--dims", dims, "voxel counts NXxNYxNZ (default 200x200x16)");
        cmd->add_option("--origin", origin, "grid minimum corner x,y,z (default -50,-50,-5)");
        cmd->add_option("--extent", extent, "grid size x,y,z in meters (default 100,100,8)");
    }

    GridSpec spec() const {
        GridSpec s = default_grid_spec();
        if (!dims.empty()) {
            const auto d = split_numbers(dims, 'x', 3, "--dims");
            for (int a = 0; a < 3; ++a) {
                if (d[a] < 1 || d[a] != std::floor(d[a])) throw UsageError("--dims: counts must be positive integers");
                s.dims[a] = static_cast<int>(d[a]);
            }
        }
        if (!origin.empty()) {
            const auto o = split_numbers(origin, ',', 3, "--origin");
            s.origin = {o[0], o[1], o[2]};
        }
        if (!extent.empty()) {
            const auto e = split_numbers(extent, ',', 3, "--extent");
            s.extent = {e[0], e[1], e[2]};
        }
        try {
            s.validate();
        } catch (const InvalidInput &e) {
            throw UsageError(e.what());
        }
        return s;
    }
};

bool is_grid_file(const std::string &path) { return read_text_file(path).rfind("TFOC", 0) == 0; }

int cmd_splat(const std::string &scene_path, const GridFlags &gf, bool prob, double threshold, unsigned threads,
              const std::string &out) {
    const GridSpec spec = gf.spec();
    const SceneFile sf = read_scene(scene_path);
    SplatOptions opts;
    opts.threshold = threshold;
    opts.threads = threads;
    const ProbabilityGrid grid = splat(sf.scene, spec, opts);
    write_grid(out, prob ? to_grid_file(grid) : to_grid_file(to_labels(grid)));
    return 0;
}

int cmd_fit(const std::string &init_path, const std::string &target_path, const FitOptions &opts,
            const std::string &out, const std::string &trace_path) {
    const SceneFile sf = read_scene(init_path);
    const LabelGrid target = label_grid_from(read_grid(target_path));
    if (target.num_classes != sf.scene.num_classes)
        throw FormatError("fit: target grid class count differs from the scene");
    const FitResult r = fit(sf.scene, target, target.spec, opts);
    write_scene(out, {r.scene, sf.class_names});
    if (!trace_path.empty()) write_text_file(trace_path, trace_csv(r.trace));
    const auto counts = confusion(to_labels(splat(r.scene, target.spec, opts.splat_options())), target);
    std::cout << "best loss " << r.best_loss.total << " at iteration " << r.best_iteration << ", mIoU "
              << format_optional(miou(counts)) << '\n';
    return 0;
}

int cmd_eval(const std::string &pred_path, const std::string &gt_path, std::optional<double> radius,
             const std::string &sector, const std::string &origin, const std::string &csv_path) {
    const LabelGrid pred = label_grid_from(read_grid(pred_path));
    const LabelGrid gt = label_grid_from(read_grid(gt_path));
    if (!(pred.spec == gt.spec) || pred.num_classes != gt.num_classes)
        throw FormatError("eval: prediction and ground truth grids differ in spec or class count");
    Vec3 o{};
    if (!origin.empty()) {
        const auto v = split_numbers(origin, ',', 3, "--origin");
        o = {v[0], v[1], v[2]};
    }
    ConfusionCounts counts;
    if (radius || !sector.empty()) {
        if (radius && !sector.empty()) throw UsageError("eval: --radius and --sector are exclusive");
        RangeMask m;
        if (radius) m = RangeMask::radius(*radius);
        else {
            const auto v = split_numbers(sector, ':', 2, "--sector");
            m = RangeMask::sector(v[0], v[1]);
        }
        RangeEval r;
        try {
            r = range_masked_eval(pred, gt, m, o);
        } catch (const InvalidInput &e) {
            throw UsageError(e.what());
        }
        counts = r.counts;
        if (counts.voxels == 0) std::cout << "empty range mask: metrics undefined\n";
    } else {
        counts = confusion(pred, gt);
    }
    std::cout << metrics_table(counts);
    if (!csv_path.empty()) write_text_file(csv_path, metrics_csv(counts));
    return 0;
}

int cmd_merge(const std::string &lidar_path, const std::string &cam_path, std::size_t anchors,
              const std::string &ratio, double range_filter, std::size_t seed_index, const std::string &out) {
    const auto parts = split_numbers(ratio, ':', 2, "--ratio");
    if (parts[0] < 0 || parts[1] < 0 || parts[0] != std::floor(parts[0]) || parts[1] != std::floor(parts[1]))
        throw UsageError("--ratio: parts must be non-negative integers");
    const auto [m, n] = split_budget(anchors, static_cast<std::size_t>(parts[0]), static_cast<std::size_t>(parts[1]));
    const CylindricalSpec cyl;
    const VoxelSet lidar = cylindrical_partition(read_points(lidar_path, PointSource::lidar), cyl);
    const VoxelSet cam = cylindrical_partition(read_points(cam_path, PointSource::camera), cyl);
    SkeletonResult r;
    try {
        r = skeleton_merge(lidar, cam, m, n, range_filter, seed_index);
    } catch (const InvalidInput &e) {
        throw UsageError(e.what());
    }
    write_text_file(out, write_anchors_string(r));
    std::cout << r.lidar_count << " lidar anchors, " << r.camera_count << " camera anchors (" << r.camera_survivors
              << " survivors, shortfall " << r.shortfall << ")\n";
    return 0;
}

int cmd_fuse(const std::string &cam_path, const std::string &lidar_path, const std::string &out) {
    const DepthMap cam = depth_map_from(read_grid(cam_path));
    const DepthMap lidar = depth_map_from(read_grid(lidar_path));
    if (!cam.same_shape(lidar)) throw FormatError("fuse-depth: depth maps differ in shape or bin interval");
    write_grid(out, to_grid_file(fuse_depth(cam, lidar)));
    return 0;
}

int cmd_gen(const std::string &preset, std::uint64_t seed, const std::string &prefix) {
    SyntheticScene s;
    try {
        s = synthetic_preset(preset, seed);
    } catch (const InvalidInput &e) {
        throw UsageError(e.what());
    }
    write_scene(prefix + ".json", s.file);
    write_grid(prefix + ".grid", to_grid_file(to_labels(splat(s.file.scene, s.spec))));
    return 0;
}

int cmd_export(const std::string &in, const GridFlags &gf, const std::string &out) {
    LabelGrid g;
    if (is_grid_file(in)) {
        g = label_grid_from(read_grid(in));
    } else {
        const SceneFile sf = read_scene(in);
        g = to_labels(splat(sf.scene, gf.spec()));
    }
    write_text_file(out, write_ply_string(g));
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Student-t primitives: splatting, fitting and evaluation of semantic occupancy grids"};
    app.require_subcommand(1);
    unsigned threads = 1;
    app.add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();

    // splat
    auto *splat_cmd = app.add_subcommand("splat", "splat a scene file into a grid file");
    std::string s_scene, s_out;
    bool s_prob = false;
    double s_threshold = 1e-3;
    GridFlags s_grid;
    splat_cmd->add_option("scene", s_scene, "scene file")->required();
    splat_cmd->add_option("-o,--out", s_out, "output grid file")->required();
    splat_cmd->add_flag("--prob", s_prob, "write probabilities instead of labels");
    splat_cmd->add_option("--threshold", s_threshold, "kernel truncation threshold (0 = none)")->capture_default_str();
    s_grid.add(splat_cmd);

    // fit
    auto *fit_cmd = app.add_subcommand("fit", "fit scene primitives to a target label grid");
    std::string f_init, f_target, f_out, f_trace, f_mode = "analytic";
    FitOptions f_opts;
    fit_cmd->add_option("init", f_init, "initial scene file")->required();
    fit_cmd->add_option("target", f_target, "target grid file")->required();
    fit_cmd->add_option("-o,--out", f_out, "output scene file")->required();
    fit_cmd->add_option("--trace", f_trace, "loss trace CSV");
    fit_cmd->add_option("--iterations", f_opts.iterations)->capture_default_str();
    fit_cmd->add_option("--step-size", f_opts.step_size)->capture_default_str();
    fit_cmd->add_option("--lambda", f_opts.lambda, "BCE weight")->capture_default_str();
    fit_cmd->add_option("--threshold", f_opts.threshold)->capture_default_str();
    fit_cmd->add_option("--gradient", f_mode, "analytic or finite-difference")
        ->check(CLI::IsMember({"analytic", "finite-difference"}))
        ->capture_default_str();
    fit_cmd->add_option("--fd-epsilon", f_opts.fd_epsilon)->capture_default_str();
    fit_cmd->add_option("--seed", f_opts.rng_seed, "seed for --jitter")->capture_default_str();
    fit_cmd->add_option("--jitter", f_opts.init_jitter, "uniform center jitter in meters")->capture_default_str();

    // eval
    auto *eval_cmd = app.add_subcommand("eval", "IoU / mIoU of a prediction against ground truth");
    std::string e_pred, e_gt, e_sector, e_origin, e_csv;
    std::optional<double> e_radius;
    eval_cmd->add_option("pred", e_pred, "predicted grid file")->required();
    eval_cmd->add_option("gt", e_gt, "ground-truth grid file")->required();
    eval_cmd->add_option("--radius", e_radius, "keep voxels with horizontal distance < R");
    eval_cmd->add_option("--sector", e_sector, "keep voxels with LO <= horizontal distance < HI, as LO:HI");
    eval_cmd->add_option("--origin", e_origin, "ego origin x,y,z (default 0,0,0)");
    eval_cmd->add_option("--csv", e_csv, "also write the report as CSV");

    // merge-skeleton
    auto *merge_cmd = app.add_subcommand("merge-skeleton", "anchor skeleton from lidar and camera point lists");
    std::string m_lidar, m_cam, m_out, m_ratio = "3:1";
    std::size_t m_anchors = 400, m_seed = 0;
    double m_filter = 5.0;
    merge_cmd->add_option("lidar", m_lidar, "lidar points (x y z per line)")->required();
    merge_cmd->add_option("camera", m_cam, "camera pseudo points (x y z per line)")->required();
    merge_cmd->add_option("-o,--out", m_out, "anchor list output")->required();
    merge_cmd->add_option("--anchors", m_anchors, "total anchor budget")->capture_default_str();
    merge_cmd->add_option("--ratio", m_ratio, "lidar:camera budget ratio")->capture_default_str();
    merge_cmd->add_option("--range-filter", m_filter, "max camera-to-lidar-anchor distance (m)")->capture_default_str();
    merge_cmd->add_option("--seed-index", m_seed, "first lidar voxel picked by sampling")->capture_default_str();

    // fuse-depth
    auto *fuse_cmd = app.add_subcommand("fuse-depth", "fuse camera and lidar depth maps");
    std::string d_cam, d_lidar, d_out;
    fuse_cmd->add_option("camera", d_cam, "camera depth map (DPTH grid file)")->required();
    fuse_cmd->add_option("lidar", d_lidar, "lidar depth map (DPTH grid file)")->required();
    fuse_cmd->add_option("-o,--out", d_out, "fused depth map")->required();

    // gen-synthetic
    auto *gen_cmd = app.add_subcommand("gen-synthetic", "write a ground-truth scene and its label grid");
    std::string g_preset = "three-boxes", g_out;
    std::uint64_t g_seed = 0;
    gen_cmd->add_option("--preset", g_preset, "three-boxes or driving-toy")->capture_default_str();
    gen_cmd->add_option("--seed", g_seed)->capture_default_str();
    gen_cmd->add_option("-o,--out", g_out, "output prefix; writes PREFIX.json and PREFIX.grid")->required();

    // export-ply
    auto *ply_cmd = app.add_subcommand("export-ply", "occupied voxel centers as an ascii PLY point cloud");
    std::string p_in, p_out;
    GridFlags p_grid;
    ply_cmd->add_option("input", p_in, "grid file or scene file")->required();
    ply_cmd->add_option("-o,--out", p_out, "output PLY")->required();
    p_grid.add(ply_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*splat_cmd) return cmd_splat(s_scene, s_grid, s_prob, s_threshold, threads, s_out);
        if (*fit_cmd) {
            f_opts.gradient_mode = f_mode == "analytic" ? GradientMode::analytic : GradientMode::finite_difference;
            f_opts.threads = threads;
            try {
                f_opts.validate();
            } catch (const InvalidInput &e) {
                throw UsageError(e.what());
            }
            return cmd_fit(f_init, f_target, f_opts, f_out, f_trace);
        }
        if (*eval_cmd) return cmd_eval(e_pred, e_gt, e_radius, e_sector, e_origin, e_csv);
        if (*merge_cmd) return cmd_merge(m_lidar, m_cam, m_anchors, m_ratio, m_filter, m_seed, m_out);
        if (*fuse_cmd) return cmd_fuse(d_cam, d_lidar, d_out);
        if (*gen_cmd) return cmd_gen(g_preset, g_seed, g_out);
        if (*ply_cmd) return cmd_export(p_in, p_grid, p_out);
    } catch (const UsageError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const FormatError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const InvalidInput &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
