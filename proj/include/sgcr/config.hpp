#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sgcr/extract.hpp"
#include "sgcr/metrics.hpp"
#include "sgcr/scene.hpp"
#include "sgcr/trainer.hpp"

#include <json.hpp>

namespace sgcr {

struct SceneSpec {
    // Synthetic scene, or "external" with paths to pre-made data.
    std::string kind = "cube";
    ModelParams params;
    int views = 30;
    double ring_radius = 1.6;
    std::vector<double> elevations_deg{20.0, -15.0};
    Intrinsics intrinsics;
    double line_width_px = 1.5;
    bool hidden_line_removal = false;
    double gt_spacing = 0.002;
    // External data (kind == "external"); edge maps may need rescaling to
    // [0,1] before use, raw detector outputs are not normalized here.
    std::string cameras_file;
    std::vector<std::string> edge_map_files;
    std::string gt_points_file;
};

struct PipelineConfig {
    uint64_t seed = 1;
    std::string output_dir = "out";
    SceneSpec scene;
    TrainConfig train;
    ExtractConfig extract;
    MetricOptions eval;
};

namespace detail {

template <typename T>
void get_to(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

inline void get_vec3(const nlohmann::json& j, const char* key, Vec3& out) {
    if (j.contains(key)) {
        const auto& a = j.at(key);
        out = {a.at(0), a.at(1), a.at(2)};
    }
}

}  // namespace detail

inline ModelKind parse_model_kind(const std::string& kind) {
    if (kind == "cube") return ModelKind::Cube;
    if (kind == "cylinder") return ModelKind::Cylinder;
    if (kind == "box_with_hole") return ModelKind::BoxWithHole;
    if (kind == "two_boxes_occluding") return ModelKind::TwoBoxesOccluding;
    throw std::invalid_argument("unknown scene kind: " + kind);
}

inline PipelineConfig parse_config(const nlohmann::json& j) {
    using detail::get_to;
    PipelineConfig cfg;
    get_to(j, "seed", cfg.seed);
    get_to(j, "output_dir", cfg.output_dir);

    if (j.contains("scene")) {
        const auto& s = j.at("scene");
        auto& sc = cfg.scene;
        get_to(s, "kind", sc.kind);
        detail::get_vec3(s, "center", sc.params.center);
        get_to(s, "side", sc.params.side);
        get_to(s, "radius", sc.params.radius);
        get_to(s, "height", sc.params.height);
        get_to(s, "hole_radius", sc.params.hole_radius);
        get_to(s, "side2", sc.params.side2);
        get_to(s, "separation", sc.params.separation);
        get_to(s, "views", sc.views);
        get_to(s, "ring_radius", sc.ring_radius);
        get_to(s, "elevations_deg", sc.elevations_deg);
        get_to(s, "width", sc.intrinsics.width);
        get_to(s, "height", sc.intrinsics.height);
        if (s.contains("fx")) {
            get_to(s, "fx", sc.intrinsics.fx);
            get_to(s, "fy", sc.intrinsics.fy);
            get_to(s, "cx", sc.intrinsics.cx);
            get_to(s, "cy", sc.intrinsics.cy);
        } else {
            // Default intrinsics scale with the resolution.
            sc.intrinsics.fx = sc.intrinsics.fy = 1.1 * sc.intrinsics.width;
            sc.intrinsics.cx = 0.5 * sc.intrinsics.width;
            sc.intrinsics.cy = 0.5 * sc.intrinsics.height;
        }
        get_to(s, "line_width_px", sc.line_width_px);
        get_to(s, "hidden_line_removal", sc.hidden_line_removal);
        get_to(s, "gt_spacing", sc.gt_spacing);
        get_to(s, "cameras_file", sc.cameras_file);
        get_to(s, "edge_map_files", sc.edge_map_files);
        get_to(s, "gt_points_file", sc.gt_points_file);
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        auto& tc = cfg.train;
        get_to(t, "grid_resolution", tc.grid_resolution);
        get_to(t, "r0", tc.r0);
        get_to(t, "eta", tc.loss.eta);
        get_to(t, "lambda1", tc.loss.lambda1);
        get_to(t, "lambda2", tc.loss.lambda2);
        get_to(t, "lambda3", tc.loss.lambda3);
        if (t.contains("phase_iters")) {
            tc.phase_iters.first = t.at("phase_iters").at(0);
            tc.phase_iters.second = t.at("phase_iters").at(1);
        }
        get_to(t, "densify_interval", tc.densify_interval);
        get_to(t, "opacity_reset_interval", tc.opacity_reset_interval);
        get_to(t, "opacity_reset_value", tc.opacity_reset_value);
        get_to(t, "prune_opacity_min", tc.prune_opacity_min);
        get_to(t, "final_prune_opacity", tc.final_prune_opacity);
        get_to(t, "final_prune_color", tc.final_prune_color);
        get_to(t, "densify_grad_threshold", tc.densify_grad_threshold);
        get_to(t, "lr_position", tc.lr_position);
        get_to(t, "lr_position_final", tc.lr_position_final);
        get_to(t, "lr_opacity", tc.lr_opacity);
        get_to(t, "lr_color", tc.lr_color);
        get_to(t, "init_opacity", tc.init_opacity);
        get_to(t, "init_color", tc.init_color);
        get_to(t, "footprint_sigmas", tc.render.footprint_sigmas);
    }

    if (j.contains("extract")) {
        const auto& e = j.at("extract");
        auto& ec = cfg.extract;
        get_to(e, "N0", ec.N0);
        get_to(e, "n_searches", ec.n_searches);
        get_to(e, "Ns", ec.Ns);
        get_to(e, "dilation_copies", ec.dilation_copies);
        get_to(e, "delta1", ec.delta1);
        get_to(e, "gamma1", ec.gamma1);
        get_to(e, "gamma2", ec.gamma2);
        get_to(e, "delta2", ec.delta2);
        get_to(e, "lambda_ep", ec.lambda_ep);
        get_to(e, "inner_iters", ec.inner_iters);
        get_to(e, "global_iters", ec.global_iters);
        get_to(e, "lr_endpoints", ec.lr_endpoints);
        get_to(e, "lr_control_points", ec.lr_control_points);
        get_to(e, "lr_log_weights", ec.lr_log_weights);
        get_to(e, "freeze_weights", ec.freeze_weights);
    }

    if (j.contains("eval")) {
        const auto& ev = j.at("eval");
        get_to(ev, "threshold", cfg.eval.threshold);
        get_to(ev, "sample_spacing", cfg.eval.sample_spacing);
        get_to(ev, "iou_resolution", cfg.eval.iou_resolution);
        get_to(ev, "squared_chamfer", cfg.eval.squared_chamfer);
    }

    // One seed feeds every stochastic module.
    cfg.train.seed = cfg.seed;
    cfg.extract.seed = cfg.seed;
    return cfg;
}

}  // namespace sgcr
