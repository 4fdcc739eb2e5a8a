#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "sgcr/bezier.hpp"
#include "sgcr/kdtree.hpp"

namespace sgcr {

struct MetricReport {
    double chamfer = 0.0;
    double precision = 0.0, recall = 0.0, fscore = 0.0, iou = 0.0;
    size_t n_pred = 0, n_gt = 0;
    double threshold = 0.02;
};

// Similarity transform mapping a bounding box's longest axis to [0,1],
// centered on the others.
struct NormalizeTransform {
    double scale = 1.0;
    Vec3 offset{};

    Vec3 apply(const Vec3& p) const { return (p - offset) * scale; }
};

inline NormalizeTransform normalize_transform(const std::vector<Vec3>& points) {
    if (points.empty()) throw std::invalid_argument("normalize: empty point set");
    Vec3 lo = points[0], hi = points[0];
    for (const auto& p : points) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    const Vec3 ext = hi - lo;
    const double longest = std::max({ext.x, ext.y, ext.z});
    if (longest <= 0) throw std::invalid_argument("normalize: zero-extent input");
    NormalizeTransform t;
    t.scale = 1.0 / longest;
    // Longest axis maps to [0,1]; the others are centered within [0,1].
    const Vec3 center = (lo + hi) * 0.5;
    t.offset = center - Vec3{0.5, 0.5, 0.5} / t.scale;
    return t;
}

inline std::vector<Vec3> apply_transform(const NormalizeTransform& t,
                                         const std::vector<Vec3>& points) {
    std::vector<Vec3> out(points.size());
    for (size_t i = 0; i < points.size(); ++i) out[i] = t.apply(points[i]);
    return out;
}

// Curve samples at (approximately) uniform arc-length spacing, measured on a
// fine parameter polyline.
inline std::vector<Vec3> sample_curves_arclength(const CurveNetwork& net, double spacing) {
    if (spacing <= 0) throw std::invalid_argument("sample_curves: spacing must be positive");
    std::vector<Vec3> out;
    constexpr int kFine = 512;
    for (const auto& curve : net.curves) {
        const auto fine = bezier_sample(curve, kFine);
        double len = 0.0;
        for (int i = 0; i + 1 < kFine; ++i) len += (fine[i + 1] - fine[i]).norm();
        const int n = std::max(2, int(std::ceil(len / spacing)) + 1);
        // Walk the fine polyline to equally spaced arc lengths.
        const double target_step = len / double(n - 1);
        out.push_back(fine.front());
        double walked = 0.0, next = target_step;
        for (int i = 0; i + 1 < kFine; ++i) {
            const double seg = (fine[i + 1] - fine[i]).norm();
            while (seg > 0 && walked + seg >= next - 1e-15 && next < len - 1e-12) {
                out.push_back(lerp(fine[i], fine[i + 1], (next - walked) / seg));
                next += target_step;
            }
            walked += seg;
        }
        out.push_back(fine.back());
    }
    return out;
}

struct MetricOptions {
    double threshold = 0.02;
    double sample_spacing = 0.005;
    int iou_resolution = 64;
    bool squared_chamfer = false;
};

inline MetricReport compute_metrics(const std::vector<Vec3>& pred_points,
                                    const std::vector<Vec3>& gt_points,
                                    const MetricOptions& opt = {}) {
    if (pred_points.empty() || gt_points.empty())
        throw std::invalid_argument("compute_metrics: empty point set");
    const KdTree gt_tree(gt_points), pred_tree(pred_points);

    size_t matched_pred = 0;
    double sum_pg = 0.0;
    const double thr2 = opt.threshold * opt.threshold;
    for (const auto& p : pred_points) {
        const double d2 = gt_tree.nearest(p).dist2;
        if (d2 < thr2) ++matched_pred;
        sum_pg += opt.squared_chamfer ? d2 : std::sqrt(d2);
    }
    size_t matched_gt = 0;
    double sum_gp = 0.0;
    for (const auto& g : gt_points) {
        const double d2 = pred_tree.nearest(g).dist2;
        if (d2 < thr2) ++matched_gt;
        sum_gp += opt.squared_chamfer ? d2 : std::sqrt(d2);
    }

    MetricReport r;
    r.threshold = opt.threshold;
    r.n_pred = pred_points.size();
    r.n_gt = gt_points.size();
    r.precision = double(matched_pred) / double(pred_points.size());
    r.recall = double(matched_gt) / double(gt_points.size());
    r.fscore = (r.precision + r.recall) > 0
                   ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                   : 0.0;
    // Mean-of-means Chamfer, symmetric in its arguments.
    r.chamfer = 0.5 * (sum_pg / double(pred_points.size()) + sum_gp / double(gt_points.size()));

    // Occupancy IoU over [0,1]^3 at iou_resolution^3.
    const int res = opt.iou_resolution;
    auto voxelize = [&](const std::vector<Vec3>& pts) {
        std::unordered_set<int> cells;
        for (const auto& p : pts) {
            const int x = std::clamp(int(p.x * res), 0, res - 1);
            const int y = std::clamp(int(p.y * res), 0, res - 1);
            const int z = std::clamp(int(p.z * res), 0, res - 1);
            cells.insert((x * res + y) * res + z);
        }
        return cells;
    };
    const auto vp = voxelize(pred_points), vg = voxelize(gt_points);
    size_t inter = 0;
    for (int c : vp) inter += vg.count(c);
    const size_t uni = vp.size() + vg.size() - inter;
    r.iou = uni > 0 ? double(inter) / double(uni) : 0.0;
    return r;
}

// Metrics following the evaluation protocol: the normalization transform is
// computed from GT and applied to both point sets, then curve samples are
// matched at the distance threshold.
inline MetricReport evaluate_curves(const CurveNetwork& curves, const std::vector<Vec3>& gt_points,
                                    const MetricOptions& opt = {}) {
    const auto t = normalize_transform(gt_points);
    const auto gt_n = apply_transform(t, gt_points);
    auto pred = sample_curves_arclength(curves, opt.sample_spacing / std::max(t.scale, 1e-12));
    const auto pred_n = apply_transform(t, pred);
    return compute_metrics(pred_n, gt_n, opt);
}

}  // namespace sgcr
