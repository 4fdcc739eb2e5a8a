#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "sgcr/vec3.hpp"

namespace sgcr {

// Rigid world-to-camera transform stored as a row-major 4x4 matrix.
// Camera looks down +z in camera frame; right-handed coordinates.
struct RigidTransform {
    std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const {
        return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
                m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
                m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
    }

    // Rotation-only application (directions).
    Vec3 rotate(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[4] * v.x + m[5] * v.y + m[6] * v.z,
                m[8] * v.x + m[9] * v.y + m[10] * v.z};
    }

    Vec3 rotate_transpose(const Vec3& v) const {
        return {m[0] * v.x + m[4] * v.y + m[8] * v.z,
                m[1] * v.x + m[5] * v.y + m[9] * v.z,
                m[2] * v.x + m[6] * v.y + m[10] * v.z};
    }

    // Inverse of a rigid transform: R^T, -R^T t.
    RigidTransform inverse() const {
        RigidTransform inv;
        inv.m = {m[0], m[4], m[8],  0, m[1], m[5], m[9],  0,
                 m[2], m[6], m[10], 0, 0,    0,    0,     1};
        const Vec3 t{m[3], m[7], m[11]};
        const Vec3 it = rotate_transpose(t) * -1.0;
        inv.m[3] = it.x;
        inv.m[7] = it.y;
        inv.m[11] = it.z;
        return inv;
    }

    double rotation_orthonormality_error() const {
        const Vec3 r0{m[0], m[1], m[2]}, r1{m[4], m[5], m[6]}, r2{m[8], m[9], m[10]};
        double e = 0.0;
        e = std::max(e, std::abs(r0.norm2() - 1.0));
        e = std::max(e, std::abs(r1.norm2() - 1.0));
        e = std::max(e, std::abs(r2.norm2() - 1.0));
        e = std::max(e, std::abs(dot(r0, r1)));
        e = std::max(e, std::abs(dot(r0, r2)));
        e = std::max(e, std::abs(dot(r1, r2)));
        e = std::max(e, std::abs(dot(cross(r0, r1), r2) - 1.0));
        return e;
    }
};

struct Camera {
    double fx = 0, fy = 0;
    double cx = 0, cy = 0;
    int width = 0, height = 0;
    RigidTransform world_to_camera;

    void validate() const {
        if (fx <= 0 || fy <= 0) throw std::invalid_argument("camera: focal lengths must be positive");
        if (width <= 0 || height <= 0) throw std::invalid_argument("camera: resolution must be positive");
        if (cx < 0 || cx >= width || cy < 0 || cy >= height)
            throw std::invalid_argument("camera: principal point outside image");
        if (world_to_camera.rotation_orthonormality_error() > 1e-9)
            throw std::invalid_argument("camera: rotation block not orthonormal");
    }

    Vec3 position() const {
        const auto& m = world_to_camera.m;
        return world_to_camera.rotate_transpose(Vec3{m[3], m[7], m[11]}) * -1.0;
    }
};

struct PixelPoint {
    double u = 0, v = 0;
    double depth = 0;
};

inline constexpr double kNearPlane = 1e-6;

// Pinhole projection. Returns nullopt for points at or behind the near plane.
inline std::optional<PixelPoint> project_point(const Camera& cam, const Vec3& p) {
    const Vec3 pc = cam.world_to_camera.apply(p);
    if (pc.z <= kNearPlane) return std::nullopt;
    return PixelPoint{cam.fx * pc.x / pc.z + cam.cx, cam.fy * pc.y / pc.z + cam.cy, pc.z};
}

// Point on the camera ray through pixel (u,v) at the given camera-frame depth.
inline Vec3 unproject_pixel(const Camera& cam, double u, double v, double depth) {
    const Vec3 pc{(u - cam.cx) / cam.fx * depth, (v - cam.cy) / cam.fy * depth, depth};
    return cam.world_to_camera.inverse().apply(pc);
}

// Camera at `eye` looking at `target`, +z forward, up hint resolved against the view axis.
inline RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& up_hint = {0, 0, 1}) {
    Vec3 fwd = (target - eye).normalized();
    Vec3 up = up_hint;
    if (std::abs(dot(fwd, up.normalized())) > 1.0 - 1e-9) up = Vec3{0, 1, 0};
    const Vec3 right = cross(up, fwd).normalized();
    const Vec3 down = cross(fwd, right);  // image v grows downward
    RigidTransform w2c;
    w2c.m = {right.x, right.y, right.z, 0,
             down.x,  down.y,  down.z,  0,
             fwd.x,   fwd.y,   fwd.z,   0,
             0, 0, 0, 1};
    const Vec3 t = Vec3{dot(right, eye), dot(down, eye), dot(fwd, eye)} * -1.0;
    w2c.m[3] = t.x;
    w2c.m[7] = t.y;
    w2c.m[11] = t.z;
    return w2c;
}

}  // namespace sgcr
