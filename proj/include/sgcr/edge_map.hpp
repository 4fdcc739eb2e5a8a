#pragma once

#include <stdexcept>
#include <vector>

namespace sgcr {

// Single-channel image with values in [0,1], row-major.
struct EdgeMap {
    int width = 0, height = 0;
    std::vector<double> pixels;

    EdgeMap() = default;
    EdgeMap(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("edge map: resolution must be positive");
    }

    double& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }

    size_t size() const { return pixels.size(); }

    bool same_shape(const EdgeMap& o) const { return width == o.width && height == o.height; }
};

}  // namespace sgcr
