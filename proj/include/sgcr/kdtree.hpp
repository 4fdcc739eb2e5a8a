#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sgcr/vec3.hpp"

namespace sgcr {

// Exact 3D nearest-neighbor tree (median split). Holds a copy of the points;
// queries return the index of the nearest point and its squared distance.
class KdTree {
public:
    KdTree() = default;

    explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
        if (points_.empty()) throw std::invalid_argument("kdtree: empty point set");
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0u);
        nodes_.reserve(points_.size());
        root_ = build(0, points_.size());
    }

    size_t size() const { return points_.size(); }
    const Vec3& point(size_t i) const { return points_[i]; }

    struct Hit {
        size_t index = 0;
        double dist2 = std::numeric_limits<double>::infinity();
    };

    Hit nearest(const Vec3& q) const {
        Hit best;
        search(root_, q, best);
        return best;
    }

private:
    struct Node {
        size_t point_index;
        int axis;
        int left = -1, right = -1;
    };

    int build(size_t lo, size_t hi) {
        if (lo >= hi) return -1;
        // Split on the widest axis of the current range.
        Vec3 mn = points_[order_[lo]], mx = mn;
        for (size_t i = lo; i < hi; ++i) {
            const Vec3& p = points_[order_[i]];
            mn = {std::min(mn.x, p.x), std::min(mn.y, p.y), std::min(mn.z, p.z)};
            mx = {std::max(mx.x, p.x), std::max(mx.y, p.y), std::max(mx.z, p.z)};
        }
        const Vec3 ext = mx - mn;
        const int axis = ext.x >= ext.y ? (ext.x >= ext.z ? 0 : 2) : (ext.y >= ext.z ? 1 : 2);
        const size_t mid = (lo + hi) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](uint32_t a, uint32_t b) {
                             if (points_[a][axis] != points_[b][axis])
                                 return points_[a][axis] < points_[b][axis];
                             return a < b;
                         });
        const int id = int(nodes_.size());
        nodes_.push_back({order_[mid], axis, -1, -1});
        nodes_[id].left = build(lo, mid);
        nodes_[id].right = build(mid + 1, hi);
        return id;
    }

    void search(int node, const Vec3& q, Hit& best) const {
        if (node < 0) return;
        const Node& n = nodes_[node];
        const Vec3& p = points_[n.point_index];
        const double d2 = (q - p).norm2();
        if (d2 < best.dist2 || (d2 == best.dist2 && n.point_index < best.index)) {
            best.dist2 = d2;
            best.index = n.point_index;
        }
        const double delta = q[n.axis] - p[n.axis];
        const int near = delta < 0 ? n.left : n.right;
        const int far = delta < 0 ? n.right : n.left;
        search(near, q, best);
        if (delta * delta <= best.dist2) search(far, q, best);
    }

    std::vector<Vec3> points_;
    std::vector<uint32_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace sgcr
