// Pipeline driver: synthesize a scene, train Spherical Gaussians against its
// edge maps, extract rational Bezier curves, and evaluate against ground
// truth. One subcommand per stage plus `pipeline` for the full chain.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgcr/config.hpp"
#include "sgcr/extract.hpp"
#include "sgcr/io.hpp"
#include "sgcr/metrics.hpp"
#include "sgcr/scene.hpp"
#include "sgcr/trainer.hpp"

namespace fs = std::filesystem;
using namespace sgcr;

namespace {

constexpr int kExitBadConfig = 2;
constexpr int kExitDegenerateData = 3;
constexpr int kExitNumericalFailure = 4;

struct DegenerateData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string view_path(const std::string& dir, size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03zu.pgm", i);
    return dir + "/" + buf;
}

PipelineConfig load_config(const std::string& path, uint64_t seed_override, bool has_seed,
                           const std::string& out_override) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("config file not found: " + path);
    PipelineConfig cfg = parse_config(nlohmann::json::parse(f));
    if (has_seed) {
        cfg.seed = seed_override;
        cfg.train.seed = seed_override;
        cfg.extract.seed = seed_override;
    }
    if (!out_override.empty()) cfg.output_dir = out_override;
    return cfg;
}

std::vector<std::pair<Camera, EdgeMap>> load_views(const PipelineConfig& cfg) {
    std::vector<Camera> cams;
    std::vector<std::string> map_files;
    if (cfg.scene.kind == "external") {
        cams = io::load_cameras(cfg.scene.cameras_file);
        map_files = cfg.scene.edge_map_files;
    } else {
        cams = io::load_cameras(cfg.output_dir + "/cameras.json");
        for (size_t i = 0; i < cams.size(); ++i)
            map_files.push_back(view_path(cfg.output_dir + "/edge_maps", i));
    }
    if (cams.size() != map_files.size())
        throw std::invalid_argument("camera count does not match edge map count");
    std::vector<std::pair<Camera, EdgeMap>> views;
    for (size_t i = 0; i < cams.size(); ++i) {
        EdgeMap map = io::load_edge_map(map_files[i]);
        if (map.width != cams[i].width || map.height != cams[i].height)
            throw std::invalid_argument("edge map resolution does not match camera: " + map_files[i]);
        views.emplace_back(cams[i], std::move(map));
    }
    return views;
}

std::string gt_points_path(const PipelineConfig& cfg) {
    return cfg.scene.kind == "external" ? cfg.scene.gt_points_file
                                        : cfg.output_dir + "/gt_points.txt";
}

void cmd_synth(const PipelineConfig& cfg) {
    if (cfg.scene.kind == "external")
        throw std::invalid_argument("synth: scene kind is 'external', nothing to synthesize");
    std::vector<double> elevations;
    for (double deg : cfg.scene.elevations_deg) elevations.push_back(deg * M_PI / 180.0);
    const SceneBundle bundle =
        make_scene(parse_model_kind(cfg.scene.kind), cfg.scene.params, cfg.scene.views,
                   cfg.scene.ring_radius, elevations, cfg.scene.intrinsics,
                   cfg.scene.line_width_px, cfg.scene.hidden_line_removal, cfg.scene.gt_spacing);

    fs::create_directories(cfg.output_dir + "/edge_maps");
    io::save_cameras(bundle.cameras, cfg.output_dir + "/cameras.json");
    for (size_t i = 0; i < bundle.edge_maps.size(); ++i)
        io::save_edge_map(bundle.edge_maps[i], view_path(cfg.output_dir + "/edge_maps", i));
    io::save_points(bundle.gt_points, cfg.output_dir + "/gt_points.txt");
    io::save_model(bundle.model, cfg.output_dir + "/model.json");
    std::cout << "synth: " << bundle.cameras.size() << " views, " << bundle.gt_points.size()
              << " GT points -> " << cfg.output_dir << "\n";
}

void cmd_train(const PipelineConfig& cfg, bool resume) {
    const auto t0 = std::chrono::steady_clock::now();
    auto views = load_views(cfg);
    Trainer trainer(std::move(views), cfg.train);

    const std::string state_path = cfg.output_dir + "/trainer_state.txt";
    if (resume) {
        auto f = io::open_in(state_path);
        trainer.load(f);
        std::cout << "train: resumed at iteration " << trainer.iteration() << "\n";
    } else {
        trainer.run_to(cfg.train.phase_iters.first);
        auto f = io::open_out(state_path);
        trainer.save(f);
    }
    trainer.run();

    io::save_gaussians(trainer.current_set(), cfg.output_dir + "/gaussians.txt",
                       trainer.iteration());
    io::save_train_log(trainer.log(), cfg.output_dir + "/training_log.tsv");
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "train: " << trainer.current_set().count() << " gaussians after "
              << trainer.iteration() << " iterations (" << secs << " s)\n";
}

void cmd_extract(const PipelineConfig& cfg) {
    const SphericalGaussianSet set = io::load_gaussians(cfg.output_dir + "/gaussians.txt");
    if (set.count() <= size_t(cfg.extract.N0))
        throw DegenerateData("extract: too few Gaussians (" + std::to_string(set.count()) + ")");
    const CurveNetwork curves = extract_curves(set, cfg.extract);
    io::save_curves(curves, cfg.output_dir + "/curves.json");
    std::cout << "extract: " << curves.curves.size() << " curves from " << set.count()
              << " gaussians\n";
}

void cmd_eval(const PipelineConfig& cfg) {
    const CurveNetwork curves = io::load_curves(cfg.output_dir + "/curves.json");
    if (curves.curves.empty()) throw DegenerateData("eval: curve document has no curves");
    const std::vector<Vec3> gt_points = io::load_points(gt_points_path(cfg));
    const MetricReport report = evaluate_curves(curves, gt_points, cfg.eval);
    io::save_metrics(report, cfg.output_dir + "/metrics.json",
                     cfg.output_dir + "/metrics_summary.tsv");

    // Contact sheet: ground-truth edge map beside the Gaussian rendering.
    const auto views = load_views(cfg);
    const SphericalGaussianSet set = io::load_gaussians(cfg.output_dir + "/gaussians.txt");
    fs::create_directories(cfg.output_dir + "/contact");
    for (size_t i = 0; i < views.size(); ++i) {
        const auto& [cam, gt] = views[i];
        const EdgeMap rendered = render(set, cam);
        EdgeMap sheet(gt.width * 2, gt.height, 0.0);
        for (int y = 0; y < gt.height; ++y)
            for (int x = 0; x < gt.width; ++x) {
                sheet.at(x, y) = gt.at(x, y);
                sheet.at(gt.width + x, y) = rendered.at(x, y);
            }
        io::save_edge_map(sheet, view_path(cfg.output_dir + "/contact", i));
    }
    std::cout << "eval: CD " << report.chamfer << "  P " << report.precision << "  R "
              << report.recall << "  F " << report.fscore << "  IoU " << report.iou << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spherical Gaussian curve reconstruction pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    uint64_t seed_override = 0;
    bool has_seed = false;
    bool resume = false;
    app.add_option("--config", config_path, "pipeline config (JSON)")->required();
    app.add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { has_seed = true; });
    app.add_option("--out", out_override, "override the output directory");

    auto* synth = app.add_subcommand("synth", "generate the synthetic scene");
    auto* train = app.add_subcommand("train", "optimize Spherical Gaussians");
    train->add_flag("--resume", resume, "resume from trainer_state.txt");
    auto* extract = app.add_subcommand("extract", "extract rational Bezier curves");
    auto* eval = app.add_subcommand("eval", "compute metrics and contact sheets");
    auto* pipeline = app.add_subcommand("pipeline", "synth + train + extract + eval");
    // Let --config/--seed/--out appear after the subcommand name too.
    for (auto* sub : {synth, train, extract, eval, pipeline}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        const PipelineConfig cfg = load_config(config_path, seed_override, has_seed, out_override);
        fs::create_directories(cfg.output_dir);
        if (synth->parsed()) cmd_synth(cfg);
        if (train->parsed()) cmd_train(cfg, resume);
        if (extract->parsed()) cmd_extract(cfg);
        if (eval->parsed()) cmd_eval(cfg);
        if (pipeline->parsed()) {
            cmd_synth(cfg);
            cmd_train(cfg, false);
            cmd_extract(cfg);
            cmd_eval(cfg);
        }
    } catch (const DegenerateData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDegenerateData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalFailure;
    }
    return 0;
}
