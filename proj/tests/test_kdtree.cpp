#include <catch2/catch_amalgamated.hpp>

#include "sgcr/kdtree.hpp"
#include "sgcr/rng.hpp"

using namespace sgcr;

namespace {

KdTree::Hit brute_nearest(const std::vector<Vec3>& pts, const Vec3& q) {
    KdTree::Hit best;
    for (size_t i = 0; i < pts.size(); ++i) {
        const double d2 = (q - pts[i]).norm2();
        if (d2 < best.dist2 || (d2 == best.dist2 && i < best.index)) {
            best.dist2 = d2;
            best.index = i;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("empty input is rejected") {
    CHECK_THROWS_AS(KdTree(std::vector<Vec3>{}), std::invalid_argument);
}

TEST_CASE("single point always wins") {
    const KdTree tree(std::vector<Vec3>{{0.5, 0.5, 0.5}});
    const auto hit = tree.nearest({0, 0, 0});
    CHECK(hit.index == 0);
    CHECK_THAT(hit.dist2, Catch::Matchers::WithinAbs(0.75, 1e-15));
}

TEST_CASE("nearest neighbor equals brute force exactly on random sets") {
    Rng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + int(rng.index(300));
        std::vector<Vec3> pts(n);
        for (auto& p : pts) p = {rng.uniform(), rng.uniform(), rng.uniform()};
        const KdTree tree(pts);
        for (int q = 0; q < 40; ++q) {
            const Vec3 query{rng.uniform(-0.2, 1.2), rng.uniform(-0.2, 1.2),
                             rng.uniform(-0.2, 1.2)};
            const auto a = tree.nearest(query);
            const auto b = brute_nearest(pts, query);
            CHECK(a.index == b.index);
            CHECK(a.dist2 == b.dist2);
        }
    }
}

TEST_CASE("duplicate points: ties break to the lowest index") {
    std::vector<Vec3> pts(10, Vec3{0.3, 0.3, 0.3});
    pts.push_back({0.9, 0.9, 0.9});
    const KdTree tree(pts);
    const auto hit = tree.nearest({0.31, 0.3, 0.3});
    CHECK(hit.index == 0);
}

TEST_CASE("querying a stored point returns distance zero") {
    Rng rng(55);
    std::vector<Vec3> pts(200);
    for (auto& p : pts) p = {rng.uniform(), rng.uniform(), rng.uniform()};
    const KdTree tree(pts);
    for (size_t i = 0; i < pts.size(); ++i) {
        const auto hit = tree.nearest(pts[i]);
        CHECK(hit.dist2 == 0.0);
        CHECK((tree.point(hit.index) - pts[i]).norm2() == 0.0);
    }
}
