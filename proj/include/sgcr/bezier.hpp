#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "sgcr/vec3.hpp"

namespace sgcr {

// Cubic rational Bezier: four control points with positive weights.
struct RationalBezier {
    std::array<Vec3, 4> control_points;
    std::array<double, 4> weights{1, 1, 1, 1};
};

inline std::array<double, 4> cubic_bernstein(double u) {
    const double v = 1.0 - u;
    return {v * v * v, 3.0 * v * v * u, 3.0 * v * u * u, u * u * u};
}

inline Vec3 bezier_eval(const RationalBezier& c, double u) {
    const auto b = cubic_bernstein(u);
    Vec3 num{0, 0, 0};
    double den = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double bw = b[i] * c.weights[i];
        num += c.control_points[i] * bw;
        den += bw;
    }
    return num / den;
}

inline std::vector<Vec3> bezier_sample(const RationalBezier& c, int n) {
    if (n < 2) throw std::invalid_argument("bezier_sample: n must be >= 2");
    std::vector<Vec3> pts;
    pts.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pts.push_back(bezier_eval(c, double(i) / double(n - 1)));
    return pts;
}

struct CurveNetwork {
    std::vector<RationalBezier> curves;
};

}  // namespace sgcr
