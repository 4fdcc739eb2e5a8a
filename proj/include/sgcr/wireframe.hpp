#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

#include "sgcr/vec3.hpp"

namespace sgcr {

struct Segment {
    Vec3 a, b;
    double length() const { return (b - a).norm(); }
};

// Circular arc in the plane orthogonal to `axis`, swept from start_angle to
// end_angle (radians) around `center`.
struct Arc {
    Vec3 center;
    Vec3 axis;  // unit
    double radius = 0;
    double start_angle = 0;
    double end_angle = 0;

    double sweep() const { return end_angle - start_angle; }
    double length() const { return std::abs(sweep()) * radius; }

    // Orthonormal in-plane basis derived deterministically from the axis.
    void basis(Vec3& u, Vec3& v) const {
        const Vec3 ref = std::abs(axis.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
        u = cross(ref, axis).normalized();
        v = cross(axis, u);
    }

    Vec3 point_at(double angle) const {
        Vec3 u, v;
        basis(u, v);
        return center + (u * std::cos(angle) + v * std::sin(angle)) * radius;
    }
};

struct AxisAlignedBox {
    Vec3 lo, hi;
};

struct FiniteCylinder {
    Vec3 base;   // center of the bottom cap
    Vec3 axis;   // unit
    double radius = 0;
    double height = 0;
};

using OccluderSolid = std::variant<AxisAlignedBox, FiniteCylinder>;

// Analytic 3D edge set: segments plus circular arcs, with optional occluder
// solids for hidden-line tests. All geometry lives in [0,1]^3.
struct WireframeModel {
    std::vector<Segment> segments;
    std::vector<Arc> arcs;
    std::vector<OccluderSolid> occluders;

    double total_edge_length() const {
        double s = 0;
        for (const auto& seg : segments) s += seg.length();
        for (const auto& arc : arcs) s += arc.length();
        return s;
    }

    void validate() const {
        auto in_unit = [](const Vec3& p) {
            return p.x >= -1e-9 && p.x <= 1.0 + 1e-9 && p.y >= -1e-9 && p.y <= 1.0 + 1e-9 &&
                   p.z >= -1e-9 && p.z <= 1.0 + 1e-9;
        };
        for (const auto& s : segments)
            if (!in_unit(s.a) || !in_unit(s.b))
                throw std::invalid_argument("wireframe: segment outside unit cube");
        for (const auto& a : arcs) {
            if (std::abs(a.axis.norm() - 1.0) > 1e-9)
                throw std::invalid_argument("wireframe: arc axis not unit length");
            // Conservative bound: center +- radius in every in-plane direction.
            for (int d = 0; d < 3; ++d) {
                const double c = a.center[d];
                if (c - a.radius < -1e-9 || c + a.radius > 1.0 + 1e-9)
                    throw std::invalid_argument("wireframe: arc outside unit cube");
            }
        }
    }
};

// Uniform arc-length samples over every edge primitive, spacing <= `spacing`.
// Endpoints of each primitive are always included.
inline std::vector<Vec3> sample_edge_points(const WireframeModel& model, double spacing) {
    if (spacing <= 0) throw std::invalid_argument("sample_edge_points: spacing must be positive");
    std::vector<Vec3> pts;
    for (const auto& seg : model.segments) {
        const int n = std::max(1, static_cast<int>(std::ceil(seg.length() / spacing)));
        for (int i = 0; i <= n; ++i) pts.push_back(lerp(seg.a, seg.b, double(i) / n));
    }
    for (const auto& arc : model.arcs) {
        const int n = std::max(1, static_cast<int>(std::ceil(arc.length() / spacing)));
        for (int i = 0; i <= n; ++i)
            pts.push_back(arc.point_at(arc.start_angle + arc.sweep() * double(i) / n));
    }
    return pts;
}

// Ray/box intersection over t in (t_min, t_max), slab method.
inline bool ray_hits_box(const Vec3& origin, const Vec3& dir, const AxisAlignedBox& box,
                         double t_min, double t_max) {
    double t0 = t_min, t1 = t_max;
    for (int d = 0; d < 3; ++d) {
        const double o = origin[d], v = dir[d];
        const double lo = box.lo[d], hi = box.hi[d];
        if (std::abs(v) < 1e-15) {
            if (o < lo || o > hi) return false;
            continue;
        }
        double ta = (lo - o) / v, tb = (hi - o) / v;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return false;
    }
    return true;
}

inline bool ray_hits_cylinder(const Vec3& origin, const Vec3& dir, const FiniteCylinder& cyl,
                              double t_min, double t_max) {
    // Work in the cylinder frame: component along the axis and the residual.
    const Vec3 rel = origin - cyl.base;
    const double oz = dot(rel, cyl.axis);
    const double dz = dot(dir, cyl.axis);
    const Vec3 op = rel - cyl.axis * oz;
    const Vec3 dp = dir - cyl.axis * dz;

    auto inside_height = [&](double t) {
        const double z = oz + t * dz;
        return z >= 0.0 && z <= cyl.height;
    };

    // Lateral surface: |op + t*dp|^2 = r^2.
    const double a = dp.norm2();
    const double b = 2.0 * dot(op, dp);
    const double c = op.norm2() - cyl.radius * cyl.radius;
    if (a > 1e-15) {
        const double disc = b * b - 4 * a * c;
        if (disc >= 0) {
            const double sq = std::sqrt(disc);
            for (const double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)})
                if (t > t_min && t < t_max && inside_height(t)) return true;
        }
    }
    // Caps.
    if (std::abs(dz) > 1e-15) {
        for (const double zc : {0.0, cyl.height}) {
            const double t = (zc - oz) / dz;
            if (t > t_min && t < t_max) {
                const Vec3 q = op + dp * t;
                if (q.norm2() <= cyl.radius * cyl.radius) return true;
            }
        }
    }
    return false;
}

// True when the open segment from `eye` to `point` passes through any occluder
// strictly before reaching the point.
inline bool point_occluded(const Vec3& eye, const Vec3& point,
                           const std::vector<OccluderSolid>& occluders) {
    const Vec3 dir = point - eye;
    constexpr double eps = 1e-6;
    for (const auto& solid : occluders) {
        const bool hit = std::visit(
            [&](const auto& s) {
                if constexpr (std::is_same_v<std::decay_t<decltype(s)>, AxisAlignedBox>)
                    return ray_hits_box(eye, dir, s, eps, 1.0 - eps);
                else
                    return ray_hits_cylinder(eye, dir, s, eps, 1.0 - eps);
            },
            solid);
        if (hit) return true;
    }
    return false;
}

}  // namespace sgcr
