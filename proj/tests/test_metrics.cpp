#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sgcr/metrics.hpp"
#include "sgcr/rng.hpp"

using namespace sgcr;

namespace {

std::vector<Vec3> random_points(Rng& rng, int n) {
    std::vector<Vec3> out(n);
    for (auto& p : out) p = {rng.uniform(), rng.uniform(), rng.uniform()};
    return out;
}

RationalBezier line_curve(const Vec3& a, const Vec3& b) {
    RationalBezier c;
    c.control_points = {a, lerp(a, b, 1.0 / 3.0), lerp(a, b, 2.0 / 3.0), b};
    c.weights = {1, 1, 1, 1};
    return c;
}

}  // namespace

TEST_CASE("normalization maps the longest axis to the unit interval") {
    SECTION("already-normalized input is the identity") {
        const std::vector<Vec3> pts{{0, 0.4, 0.4}, {1, 0.6, 0.6}};
        const auto t = normalize_transform(pts);
        CHECK_THAT(t.scale, Catch::Matchers::WithinAbs(1.0, 1e-15));
        const auto out = apply_transform(t, pts);
        CHECK_THAT(out[0].x, Catch::Matchers::WithinAbs(0.0, 1e-15));
        CHECK_THAT(out[1].x, Catch::Matchers::WithinAbs(1.0, 1e-15));
    }
    SECTION("a scaled cube maps back to unit span") {
        std::vector<Vec3> pts;
        for (int i = 0; i < 8; ++i)
            pts.push_back({5.0 * (i & 1), 5.0 * ((i >> 1) & 1), 5.0 * ((i >> 2) & 1)});
        const auto out = apply_transform(normalize_transform(pts), pts);
        for (const auto& p : out)
            for (int k = 0; k < 3; ++k) CHECK((std::abs(p[k]) < 1e-12 || std::abs(p[k] - 1) < 1e-12));
    }
    SECTION("distance ratios are preserved") {
        Rng rng(1);
        auto pts = random_points(rng, 40);
        for (auto& p : pts) p = p * 3.7 + Vec3{10, -4, 2};
        const auto t = normalize_transform(pts);
        const auto out = apply_transform(t, pts);
        const double r_in = (pts[1] - pts[0]).norm() / (pts[2] - pts[0]).norm();
        const double r_out = (out[1] - out[0]).norm() / (out[2] - out[0]).norm();
        CHECK_THAT(r_out, Catch::Matchers::WithinAbs(r_in, 1e-12));
    }
    SECTION("degenerate input is rejected") {
        CHECK_THROWS_AS(normalize_transform({}), std::invalid_argument);
        CHECK_THROWS_AS(normalize_transform({{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}}),
                        std::invalid_argument);
    }
}

TEST_CASE("arc-length curve sampling") {
    CurveNetwork net;
    net.curves.push_back(line_curve({0.1, 0.5, 0.5}, {0.9, 0.5, 0.5}));
    const auto pts = sample_curves_arclength(net, 0.05);
    REQUIRE(pts.size() >= 17);
    CHECK((pts.front() - Vec3{0.1, 0.5, 0.5}).norm() < 1e-12);
    CHECK((pts.back() - Vec3{0.9, 0.5, 0.5}).norm() < 1e-12);
    for (size_t i = 0; i + 1 < pts.size(); ++i)
        CHECK((pts[i + 1] - pts[i]).norm() < 0.05 + 1e-6);
}

TEST_CASE("identical point sets give a perfect report") {
    Rng rng(2);
    const auto pts = random_points(rng, 100);
    const auto r = compute_metrics(pts, pts);
    CHECK(r.chamfer == 0.0);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.fscore == 1.0);
    CHECK(r.iou == 1.0);
}

TEST_CASE("an offset beyond the threshold zeroes precision and recall") {
    Rng rng(3);
    const auto gt = random_points(rng, 80);
    auto pred = gt;
    for (auto& p : pred) p.x += 0.03;
    const auto r = compute_metrics(pred, gt);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.fscore == 0.0);
    CHECK_THAT(r.chamfer, Catch::Matchers::WithinAbs(0.03, 0.005));
}

TEST_CASE("chamfer term is symmetric in its arguments") {
    Rng rng(4);
    const auto a = random_points(rng, 60), b = random_points(rng, 45);
    CHECK(compute_metrics(a, b).chamfer == compute_metrics(b, a).chamfer);
}

TEST_CASE("shrinking the threshold never raises precision or recall") {
    Rng rng(5);
    const auto gt = random_points(rng, 100);
    auto pred = random_points(rng, 100);
    MetricOptions wide, narrow;
    wide.threshold = 0.1;
    narrow.threshold = 0.02;
    const auto rw = compute_metrics(pred, gt, wide);
    const auto rn = compute_metrics(pred, gt, narrow);
    CHECK(rn.precision <= rw.precision);
    CHECK(rn.recall <= rw.recall);
}

TEST_CASE("metrics are invariant under joint translation and uniform scaling") {
    // Bounding-box normalization undoes translation and uniform scaling
    // applied to both sets (rotation changes the box, so it is not undone).
    Rng rng(6);
    const auto gt = random_points(rng, 120);
    auto pred = random_points(rng, 90);
    auto move = [&](std::vector<Vec3> pts) {
        for (auto& p : pts) p = p * 3.5 + Vec3{0.2, -0.1, 0.3};
        return pts;
    };
    const auto gt2 = move(gt);
    const auto pred2 = move(pred);
    const auto t1 = normalize_transform(gt), t2 = normalize_transform(gt2);
    const auto r1 = compute_metrics(apply_transform(t1, pred), apply_transform(t1, gt));
    const auto r2 = compute_metrics(apply_transform(t2, pred2), apply_transform(t2, gt2));
    CHECK(r1.precision == r2.precision);
    CHECK(r1.recall == r2.recall);
    CHECK_THAT(r1.chamfer, Catch::Matchers::WithinAbs(r2.chamfer, 1e-9));
    CHECK(r1.iou == r2.iou);
}

TEST_CASE("curve evaluation reaches a perfect score on its own samples") {
    CurveNetwork net;
    net.curves.push_back(line_curve({0.0, 0.3, 0.3}, {1.0, 0.7, 0.7}));
    const auto gt = sample_curves_arclength(net, 0.002);
    const auto r = evaluate_curves(net, gt);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.chamfer < 0.002);
}

TEST_CASE("empty inputs are rejected") {
    CHECK_THROWS_AS(compute_metrics({}, {{0, 0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(compute_metrics({{0, 0, 0}}, {}), std::invalid_argument);
}
