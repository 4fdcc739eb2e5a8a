#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sgcr/camera.hpp"
#include "sgcr/edge_map.hpp"
#include "sgcr/wireframe.hpp"

namespace sgcr {

enum class ModelKind { Cube, Cylinder, BoxWithHole, TwoBoxesOccluding };

struct ModelParams {
    Vec3 center{0.5, 0.5, 0.5};
    double side = 0.4;         // cube / box_with_hole / first box
    double radius = 0.2;       // cylinder
    double height = 0.4;       // cylinder
    double hole_radius = 0.1;  // box_with_hole
    double side2 = 0.2;        // second box of two_boxes_occluding
    double separation = 0.4;   // center distance of the two boxes (x axis)
};

namespace detail {

inline void add_box_edges(WireframeModel& model, const Vec3& lo, const Vec3& hi) {
    const double xs[2] = {lo.x, hi.x}, ys[2] = {lo.y, hi.y}, zs[2] = {lo.z, hi.z};
    // 4 edges along each axis.
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            model.segments.push_back({{xs[0], ys[a], zs[b]}, {xs[1], ys[a], zs[b]}});
            model.segments.push_back({{xs[a], ys[0], zs[b]}, {xs[a], ys[1], zs[b]}});
            model.segments.push_back({{xs[a], ys[b], zs[0]}, {xs[a], ys[b], zs[1]}});
        }
}

}  // namespace detail

inline WireframeModel make_model(ModelKind kind, const ModelParams& p = {}) {
    WireframeModel model;
    const double two_pi = 2.0 * M_PI;
    switch (kind) {
        case ModelKind::Cube: {
            const Vec3 h{p.side / 2, p.side / 2, p.side / 2};
            detail::add_box_edges(model, p.center - h, p.center + h);
            break;
        }
        case ModelKind::Cylinder: {
            const Vec3 axis{0, 0, 1};
            for (const double dz : {-p.height / 2, p.height / 2})
                model.arcs.push_back({p.center + Vec3{0, 0, dz}, axis, p.radius, 0.0, two_pi});
            break;
        }
        case ModelKind::BoxWithHole: {
            const Vec3 h{p.side / 2, p.side / 2, p.side / 2};
            detail::add_box_edges(model, p.center - h, p.center + h);
            const Vec3 axis{0, 0, 1};
            // Hole punched along z: one rim circle on each z face.
            for (const double dz : {-p.side / 2, p.side / 2})
                model.arcs.push_back({p.center + Vec3{0, 0, dz}, axis, p.hole_radius, 0.0, two_pi});
            break;
        }
        case ModelKind::TwoBoxesOccluding: {
            const Vec3 c1 = p.center - Vec3{p.separation / 2, 0, 0};
            const Vec3 c2 = p.center + Vec3{p.separation / 2, 0, 0};
            const Vec3 h1{p.side / 2, p.side / 2, p.side / 2};
            const Vec3 h2{p.side2 / 2, p.side2 / 2, p.side2 / 2};
            detail::add_box_edges(model, c1 - h1, c1 + h1);
            detail::add_box_edges(model, c2 - h2, c2 + h2);
            model.occluders.push_back(AxisAlignedBox{c1 - h1, c1 + h1});
            model.occluders.push_back(AxisAlignedBox{c2 - h2, c2 + h2});
            break;
        }
    }
    model.validate();
    return model;
}

struct Intrinsics {
    double fx = 280, fy = 280;
    double cx = 128, cy = 128;
    int width = 256, height = 256;
};

// Cameras evenly spaced in azimuth on one ring per elevation angle, all
// looking at the target.
inline std::vector<Camera> sample_camera_ring(int n, double radius,
                                              const std::vector<double>& elevation_angles,
                                              const Vec3& target, const Intrinsics& intr) {
    if (n < 1) throw std::invalid_argument("sample_camera_ring: n must be >= 1");
    std::vector<Camera> cams;
    const size_t n_rings = elevation_angles.size();
    for (size_t r = 0; r < n_rings; ++r) {
        const double elev = elevation_angles[r];
        // Stagger successive rings by a fraction of the azimuth spacing so
        // multi-ring setups do not share azimuth planes (which would leave
        // reconstruction ambiguities unbroken).
        const double phase = 2.0 * M_PI * double(r) / (double(n) * double(n_rings));
        for (int i = 0; i < n; ++i) {
            const double azim = 2.0 * M_PI * double(i) / double(n) + phase;
            const Vec3 eye = target + Vec3{radius * std::cos(elev) * std::cos(azim),
                                           radius * std::cos(elev) * std::sin(azim),
                                           radius * std::sin(elev)};
            Camera cam;
            cam.fx = intr.fx;
            cam.fy = intr.fy;
            cam.cx = intr.cx;
            cam.cy = intr.cy;
            cam.width = intr.width;
            cam.height = intr.height;
            cam.world_to_camera = look_at(eye, target);
            cam.validate();
            cams.push_back(cam);
        }
    }
    return cams;
}

// Anti-aliased analytic rasterization of the model's edges: value 1 on the
// projected centerline, linear falloff to 0 at line_width_px. With hidden-line
// removal, edge samples occluded by a solid are dropped before stroking.
inline EdgeMap render_gt_edge_map(const WireframeModel& model, const Camera& cam,
                                  double line_width_px = 1.5, bool hidden_line_removal = false,
                                  double sample_spacing = 0.002) {
    if (line_width_px < 1.0) throw std::invalid_argument("render_gt_edge_map: line width must be >= 1");
    EdgeMap img(cam.width, cam.height, 0.0);
    const Vec3 eye = cam.position();

    auto stroke = [&](const PixelPoint& a, const PixelPoint& b) {
        const double pad = line_width_px + 1.0;
        const int x0 = std::max(0, int(std::floor(std::min(a.u, b.u) - pad)));
        const int x1 = std::min(cam.width - 1, int(std::ceil(std::max(a.u, b.u) + pad)));
        const int y0 = std::max(0, int(std::floor(std::min(a.v, b.v) - pad)));
        const int y1 = std::min(cam.height - 1, int(std::ceil(std::max(a.v, b.v) + pad)));
        const double du = b.u - a.u, dv = b.v - a.v;
        const double len2 = du * du + dv * dv;
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                double t = len2 > 0 ? ((x - a.u) * du + (y - a.v) * dv) / len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                const double dx = x - (a.u + t * du), dy = y - (a.v + t * dv);
                const double d = std::sqrt(dx * dx + dy * dy);
                const double value = std::max(0.0, 1.0 - d / line_width_px);
                img.at(x, y) = std::max(img.at(x, y), value);
            }
    };

    auto stroke_polyline = [&](const std::vector<Vec3>& points) {
        std::vector<std::optional<PixelPoint>> proj(points.size());
        for (size_t i = 0; i < points.size(); ++i) {
            if (hidden_line_removal && point_occluded(eye, points[i], model.occluders)) continue;
            proj[i] = project_point(cam, points[i]);
        }
        for (size_t i = 0; i + 1 < points.size(); ++i)
            if (proj[i] && proj[i + 1]) stroke(*proj[i], *proj[i + 1]);
    };

    for (const auto& seg : model.segments) {
        const int n = std::max(1, int(std::ceil(seg.length() / sample_spacing)));
        std::vector<Vec3> pts(n + 1);
        for (int i = 0; i <= n; ++i) pts[i] = lerp(seg.a, seg.b, double(i) / n);
        stroke_polyline(pts);
    }
    for (const auto& arc : model.arcs) {
        const int n = std::max(2, int(std::ceil(arc.length() / sample_spacing)));
        std::vector<Vec3> pts(n + 1);
        for (int i = 0; i <= n; ++i)
            pts[i] = arc.point_at(arc.start_angle + arc.sweep() * double(i) / n);
        stroke_polyline(pts);
    }
    return img;
}

struct SceneBundle {
    WireframeModel model;
    std::vector<Camera> cameras;
    std::vector<EdgeMap> edge_maps;
    std::vector<Vec3> gt_points;
};

inline SceneBundle make_scene(ModelKind kind, const ModelParams& params, int n_views,
                              double ring_radius, const std::vector<double>& elevations,
                              const Intrinsics& intr, double line_width_px = 1.5,
                              bool hidden_line_removal = false, double gt_spacing = 0.002) {
    SceneBundle bundle;
    bundle.model = make_model(kind, params);
    bundle.cameras = sample_camera_ring(n_views, ring_radius, elevations, params.center, intr);
    bundle.edge_maps.reserve(bundle.cameras.size());
    for (const auto& cam : bundle.cameras)
        bundle.edge_maps.push_back(
            render_gt_edge_map(bundle.model, cam, line_width_px, hidden_line_removal));
    bundle.gt_points = sample_edge_points(bundle.model, gt_spacing);
    return bundle;
}

}  // namespace sgcr
