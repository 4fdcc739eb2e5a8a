#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sgcr/adam.hpp"
#include "sgcr/bezier.hpp"
#include "sgcr/kdtree.hpp"
#include "sgcr/rng.hpp"
#include "sgcr/splat.hpp"

namespace sgcr {

struct ExtractConfig {
    int N0 = 5;            // stop when |G| <= N0; also minimum subset support
    int n_searches = 32;   // random searches per line-fitting turn
    int Ns = 64;           // base samples per segment/curve before dilation
    int dilation_copies = 3;
    double delta1 = 0.02;  // subset threshold on SQUARED distance
    double gamma1 = 2.0;
    double gamma2 = 2.0;
    double delta2 = 0.01;  // endpoint threshold on squared distance
    double lambda_ep = 0.005;
    int inner_iters = 100;
    int global_iters = 500;
    double lr_endpoints = 1e-3;
    double lr_control_points = 1e-3;
    double lr_log_weights = 1e-2;
    int neighbor_pool = 5;  // q drawn from p's nearest neighbors
    bool freeze_weights = false;
    uint64_t seed = 0;
};

struct LineSegmentSet {
    std::vector<std::pair<Vec3, Vec3>> endpoints;
};

// Each input point duplicated `copies` times with i.i.d. isotropic Gaussian
// noise of std r0, mimicking the spherical footprint of the Gaussians.
inline std::vector<Vec3> dilate_samples(const std::vector<Vec3>& points, double r0, Rng& rng,
                                        int copies = 3) {
    if (r0 <= 0) throw std::invalid_argument("dilate_samples: r0 must be positive");
    std::vector<Vec3> out;
    out.reserve(points.size() * copies);
    for (const auto& p : points)
        for (int c = 0; c < copies; ++c) out.push_back(p + rng.normal3() * r0);
    return out;
}

inline std::vector<Vec3> dilate_samples(const std::vector<Vec3>& points, double r0, uint64_t seed,
                                        int copies = 3) {
    Rng rng(seed);
    return dilate_samples(points, r0, rng, copies);
}

// Symmetric squared-distance Chamfer with an asymmetry weight gamma on the
// first direction.
inline double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double gamma) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: empty point set");
    const KdTree tree_b(b), tree_a(a);
    double s1 = 0.0, s2 = 0.0;
    for (const auto& x : a) s1 += tree_b.nearest(x).dist2;
    for (const auto& y : b) s2 += tree_a.nearest(y).dist2;
    return gamma * s1 / double(a.size()) + s2 / double(b.size());
}

// Opacity-weighted Chamfer between curve samples and Gaussian centers: each
// term is scaled by the opacity of the Gaussian involved.
inline double weighted_chamfer(const std::vector<Vec3>& samples, const SphericalGaussianSet& set,
                               double gamma2) {
    if (samples.empty() || set.gaussians.empty())
        throw std::invalid_argument("weighted_chamfer: empty point set");
    std::vector<Vec3> centers(set.count());
    for (size_t i = 0; i < set.count(); ++i) centers[i] = set.gaussians[i].center;
    const KdTree tree_g(centers), tree_s(samples);
    double s1 = 0.0, s2 = 0.0;
    for (const auto& x : samples) {
        const auto hit = tree_g.nearest(x);
        s1 += set.gaussians[hit.index].opacity * hit.dist2;
    }
    for (size_t i = 0; i < set.count(); ++i)
        s2 += set.gaussians[i].opacity * tree_s.nearest(centers[i]).dist2;
    return gamma2 * s1 / double(samples.size()) + s2 / double(set.count());
}

// Indices of Gaussians whose squared distance to the nearest sample is below
// delta1 (the threshold applies to the squared distance).
inline std::vector<size_t> select_subset(const SphericalGaussianSet& set,
                                         const std::vector<Vec3>& samples, double delta1) {
    std::vector<size_t> indices;
    if (samples.empty()) return indices;
    const KdTree tree(samples);
    for (size_t i = 0; i < set.count(); ++i)
        if (tree.nearest(set.gaussians[i].center).dist2 < delta1) indices.push_back(i);
    return indices;
}

namespace detail {

// Dilated samples along the segment p-q with fixed parameters and noise, so
// endpoint gradients stay well defined while the noise pattern is constant.
struct SegmentSampler {
    std::vector<double> ts;     // one per output sample
    std::vector<Vec3> noise;

    SegmentSampler(int ns, int copies, double r0, Rng& rng) {
        ts.reserve(size_t(ns) * copies);
        noise.reserve(size_t(ns) * copies);
        for (int i = 0; i < ns; ++i) {
            const double t = ns > 1 ? double(i) / double(ns - 1) : 0.0;
            for (int c = 0; c < copies; ++c) {
                ts.push_back(t);
                noise.push_back(rng.normal3() * r0);
            }
        }
    }

    std::vector<Vec3> sample(const Vec3& p, const Vec3& q) const {
        std::vector<Vec3> out(ts.size());
        for (size_t i = 0; i < ts.size(); ++i) out[i] = lerp(p, q, ts[i]) + noise[i];
        return out;
    }
};

// Chamfer between moving segment samples and a fixed point set, with analytic
// gradients to the segment endpoints.
inline double segment_chamfer_grad(const SegmentSampler& sampler, const Vec3& p, const Vec3& q,
                                   const std::vector<Vec3>& targets, const KdTree& target_tree,
                                   double gamma, Vec3& d_p, Vec3& d_q) {
    const std::vector<Vec3> samples = sampler.sample(p, q);
    const KdTree sample_tree(samples);
    d_p = Vec3{};
    d_q = Vec3{};
    double s1 = 0.0, s2 = 0.0;
    const double w1 = gamma / double(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto hit = target_tree.nearest(samples[i]);
        const Vec3 diff = samples[i] - targets[hit.index];
        s1 += hit.dist2;
        const Vec3 g = diff * (2.0 * w1);
        d_p += g * (1.0 - sampler.ts[i]);
        d_q += g * sampler.ts[i];
    }
    const double w2 = 1.0 / double(targets.size());
    for (const auto& y : targets) {
        const auto hit = sample_tree.nearest(y);
        const Vec3 diff = samples[hit.index] - y;
        s2 += hit.dist2;
        const Vec3 g = diff * (2.0 * w2);
        d_p += g * (1.0 - sampler.ts[hit.index]);
        d_q += g * sampler.ts[hit.index];
    }
    return gamma * s1 / double(samples.size()) + s2 * w2;
}

}  // namespace detail

// Randomized line fitting: each turn runs n_searches independent searches,
// keeps the best-scoring optimized segment and removes its supporting subset
// from G. Stops when |G| <= N0 or every search in a turn is degenerate.
inline LineSegmentSet line_fitting(const SphericalGaussianSet& input, const ExtractConfig& cfg) {
    LineSegmentSet result;
    if (input.count() <= size_t(cfg.N0)) return result;

    Rng master(cfg.seed);
    Rng pick_rng = master.fork(10);
    Rng noise_rng = master.fork(11);

    std::vector<size_t> remaining(input.count());
    for (size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

    while (remaining.size() > size_t(cfg.N0)) {
        std::vector<Vec3> centers(remaining.size());
        for (size_t i = 0; i < remaining.size(); ++i)
            centers[i] = input.gaussians[remaining[i]].center;
        const KdTree center_tree(centers);

        double best_score = std::numeric_limits<double>::infinity();
        std::vector<size_t> best_subset;  // positions into `remaining`
        Vec3 best_p, best_q;
        bool found = false;

        for (int search = 0; search < cfg.n_searches; ++search) {
            // Initial endpoints: p uniform, q among p's nearest neighbors.
            const size_t pi = pick_rng.index(centers.size());
            const Vec3 p0 = centers[pi];
            const int pool = std::min<int>(cfg.neighbor_pool, int(centers.size()) - 1);
            std::vector<std::pair<double, size_t>> dist(centers.size());
            for (size_t i = 0; i < centers.size(); ++i) dist[i] = {(centers[i] - p0).norm2(), i};
            std::nth_element(dist.begin(), dist.begin() + pool, dist.end());
            std::sort(dist.begin(), dist.begin() + pool + 1);
            const size_t qi = dist[1 + pick_rng.index(pool)].second;
            const Vec3 q0 = centers[qi];
            if ((q0 - p0).norm2() == 0.0) continue;
            const detail::SegmentSampler sampler(cfg.Ns, cfg.dilation_copies, input.radius,
                                                 noise_rng);

            // Fixed subset from the initial segment.
            const std::vector<Vec3> init_samples = sampler.sample(p0, q0);
            const KdTree init_tree(init_samples);
            std::vector<size_t> subset;
            std::vector<Vec3> subset_pts;
            for (size_t i = 0; i < centers.size(); ++i)
                if (init_tree.nearest(centers[i]).dist2 < cfg.delta1) {
                    subset.push_back(i);
                    subset_pts.push_back(centers[i]);
                }
            if (subset.size() < size_t(cfg.N0)) continue;  // degenerate search

            const KdTree subset_tree(subset_pts);
            Vec3 p = p0, q = q0;
            std::vector<double> params{p.x, p.y, p.z, q.x, q.y, q.z};
            AdamState adam;
            adam.resize(6);
            double score = 0.0;
            for (int it = 1; it <= cfg.inner_iters; ++it) {
                Vec3 dp, dq;
                score = detail::segment_chamfer_grad(sampler, {params[0], params[1], params[2]},
                                                     {params[3], params[4], params[5]}, subset_pts,
                                                     subset_tree, cfg.gamma1, dp, dq);
                const std::vector<double> grads{dp.x, dp.y, dp.z, dq.x, dq.y, dq.z};
                adam.step(params, grads, cfg.lr_endpoints, it);
            }
            {
                Vec3 dp, dq;
                score = detail::segment_chamfer_grad(sampler, {params[0], params[1], params[2]},
                                                     {params[3], params[4], params[5]}, subset_pts,
                                                     subset_tree, cfg.gamma1, dp, dq);
            }
            if (score < best_score) {
                best_score = score;
                best_subset = subset;
                best_p = {params[0], params[1], params[2]};
                best_q = {params[3], params[4], params[5]};
                found = true;
            }
        }

        if (!found) break;  // all searches degenerate this turn
        result.endpoints.emplace_back(best_p, best_q);
        // Remove the winning subset (positions are sorted ascending).
        std::vector<size_t> next;
        next.reserve(remaining.size() - best_subset.size());
        size_t cursor = 0;
        for (size_t i = 0; i < remaining.size(); ++i) {
            if (cursor < best_subset.size() && best_subset[cursor] == i) {
                ++cursor;
                continue;
            }
            next.push_back(remaining[i]);
        }
        remaining.swap(next);
    }
    return result;
}

// One cubic per segment, with interior control points at the 1/4 and 3/4
// blend of the endpoints and unit weights.
inline CurveNetwork init_beziers(const LineSegmentSet& lines) {
    CurveNetwork net;
    net.curves.reserve(lines.endpoints.size());
    for (const auto& [p, q] : lines.endpoints) {
        RationalBezier c;
        c.control_points = {p, p * 0.75 + q * 0.25, p * 0.25 + q * 0.75, q};
        c.weights = {1, 1, 1, 1};
        net.curves.push_back(c);
    }
    return net;
}

// Pairwise proximity penalty over first/last control points: a pair closer
// than sqrt(delta2) contributes its squared distance, otherwise nothing.
inline double endpoint_loss(const CurveNetwork& net, double delta2) {
    std::vector<Vec3> eps;
    for (const auto& c : net.curves) {
        eps.push_back(c.control_points[0]);
        eps.push_back(c.control_points[3]);
    }
    double loss = 0.0;
    for (size_t i = 0; i < eps.size(); ++i)
        for (size_t j = i + 1; j < eps.size(); ++j) {
            const double d2 = (eps[i] - eps[j]).norm2();
            if (d2 < delta2) loss += d2;
        }
    return loss;
}

namespace detail {

struct CurveParams {
    std::vector<double> points;       // 12 per curve
    std::vector<double> log_weights;  // 4 per curve

    static CurveParams from(const CurveNetwork& net) {
        CurveParams p;
        for (const auto& c : net.curves) {
            for (const auto& cp : c.control_points) {
                p.points.push_back(cp.x);
                p.points.push_back(cp.y);
                p.points.push_back(cp.z);
            }
            for (double w : c.weights) p.log_weights.push_back(std::log(w));
        }
        return p;
    }

    CurveNetwork to_network() const {
        CurveNetwork net;
        const size_t n = log_weights.size() / 4;
        for (size_t i = 0; i < n; ++i) {
            RationalBezier c;
            for (int j = 0; j < 4; ++j) {
                const size_t base = i * 12 + j * 3;
                c.control_points[j] = {points[base], points[base + 1], points[base + 2]};
                c.weights[j] = std::exp(log_weights[i * 4 + j]);
            }
            net.curves.push_back(c);
        }
        return net;
    }
};

}  // namespace detail

// Joint refinement of all control points and weights against the full
// Gaussian set: weighted Chamfer plus the endpoint connection term, Adam with
// a monotone step safeguard (steps that increase the objective are undone).
inline CurveNetwork global_optimize(const CurveNetwork& initial, const SphericalGaussianSet& set,
                                    const ExtractConfig& cfg) {
    if (initial.curves.empty() || set.gaussians.empty()) return initial;
    const size_t n_curves = initial.curves.size();
    const size_t samples_per_curve = size_t(cfg.Ns) * cfg.dilation_copies;

    std::vector<Vec3> centers(set.count());
    for (size_t i = 0; i < set.count(); ++i) centers[i] = set.gaussians[i].center;
    const KdTree center_tree(centers);

    Rng noise_rng = Rng(cfg.seed).fork(20);

    detail::CurveParams params = detail::CurveParams::from(initial);
    AdamState adam_pts, adam_w;
    adam_pts.resize(params.points.size());
    adam_w.resize(params.log_weights.size());

    struct SampleRef {
        size_t curve;
        double u;
        Vec3 noise;
    };
    std::vector<SampleRef> refs(n_curves * samples_per_curve);

    // Objective and gradient at the given parameters with the current sample
    // noise. Gradient buffers may be null for evaluation only.
    auto evaluate = [&](const detail::CurveParams& prm, std::vector<double>* g_pts,
                        std::vector<double>* g_w) {
        const CurveNetwork net = prm.to_network();
        std::vector<Vec3> samples(refs.size());
        for (size_t i = 0; i < refs.size(); ++i)
            samples[i] = bezier_eval(net.curves[refs[i].curve], refs[i].u) + refs[i].noise;
        const KdTree sample_tree(samples);

        if (g_pts) {
            g_pts->assign(prm.points.size(), 0.0);
            g_w->assign(prm.log_weights.size(), 0.0);
        }

        // Routes a gradient on sample position back to the curve parameters.
        auto push_sample_grad = [&](size_t si, const Vec3& g) {
            if (!g_pts) return;
            const auto& ref = refs[si];
            const auto& c = net.curves[ref.curve];
            const auto b = cubic_bernstein(ref.u);
            double den = 0.0;
            for (int j = 0; j < 4; ++j) den += b[j] * c.weights[j];
            const Vec3 value = samples[si] - ref.noise;  // B(u)
            for (int j = 0; j < 4; ++j) {
                const double coef = b[j] * c.weights[j] / den;
                const size_t base = ref.curve * 12 + size_t(j) * 3;
                (*g_pts)[base] += g.x * coef;
                (*g_pts)[base + 1] += g.y * coef;
                (*g_pts)[base + 2] += g.z * coef;
                if (!cfg.freeze_weights) {
                    // dB/dw_j = b_j (p_j - B)/den; log-space multiplies by w_j.
                    const Vec3 dB_dw = (c.control_points[j] - value) * (b[j] / den);
                    (*g_w)[ref.curve * 4 + j] += dot(g, dB_dw) * c.weights[j];
                }
            }
        };

        double s1 = 0.0, s2 = 0.0;
        const double w1 = cfg.gamma2 / double(samples.size());
        for (size_t i = 0; i < samples.size(); ++i) {
            const auto hit = center_tree.nearest(samples[i]);
            const double o = set.gaussians[hit.index].opacity;
            s1 += o * hit.dist2;
            if (g_pts) push_sample_grad(i, (samples[i] - centers[hit.index]) * (2.0 * w1 * o));
        }
        const double w2 = 1.0 / double(centers.size());
        for (size_t i = 0; i < centers.size(); ++i) {
            const auto hit = sample_tree.nearest(centers[i]);
            const double o = set.gaussians[i].opacity;
            s2 += o * hit.dist2;
            if (g_pts)
                push_sample_grad(hit.index, (samples[hit.index] - centers[i]) * (2.0 * w2 * o));
        }
        double obj = cfg.gamma2 * s1 / double(samples.size()) + s2 * w2;

        // Endpoint connection term.
        std::vector<std::pair<size_t, Vec3>> eps;  // (points-array base, value)
        for (size_t ci = 0; ci < n_curves; ++ci) {
            eps.emplace_back(ci * 12, net.curves[ci].control_points[0]);
            eps.emplace_back(ci * 12 + 9, net.curves[ci].control_points[3]);
        }
        for (size_t i = 0; i < eps.size(); ++i)
            for (size_t j = i + 1; j < eps.size(); ++j) {
                const Vec3 diff = eps[i].second - eps[j].second;
                const double d2 = diff.norm2();
                if (d2 < cfg.delta2) {
                    obj += cfg.lambda_ep * d2;
                    if (g_pts) {
                        const Vec3 g = diff * (2.0 * cfg.lambda_ep);
                        (*g_pts)[eps[i].first] += g.x;
                        (*g_pts)[eps[i].first + 1] += g.y;
                        (*g_pts)[eps[i].first + 2] += g.z;
                        (*g_pts)[eps[j].first] -= g.x;
                        (*g_pts)[eps[j].first + 1] -= g.y;
                        (*g_pts)[eps[j].first + 2] -= g.z;
                    }
                }
            }
        return obj;
    };

    std::vector<double> g_pts, g_w;
    for (int it = 1; it <= cfg.global_iters; ++it) {
        // Fresh dilation noise each step.
        size_t idx = 0;
        for (size_t ci = 0; ci < n_curves; ++ci)
            for (int s = 0; s < cfg.Ns; ++s) {
                const double u = cfg.Ns > 1 ? double(s) / double(cfg.Ns - 1) : 0.0;
                for (int c = 0; c < cfg.dilation_copies; ++c)
                    refs[idx++] = {ci, u, noise_rng.normal3() * set.radius};
            }

        const double before = evaluate(params, &g_pts, &g_w);
        const detail::CurveParams saved = params;
        adam_pts.step(params.points, g_pts, cfg.lr_control_points, it);
        if (!cfg.freeze_weights) adam_w.step(params.log_weights, g_w, cfg.lr_log_weights, it);
        const double after = evaluate(params, nullptr, nullptr);
        if (after > before) params = saved;  // monotone safeguard
    }
    return params.to_network();
}

// Drops curves whose Gaussian support fell below N0 and merges near-identical
// duplicates (mutual sampled Chamfer below 1e-4).
inline CurveNetwork finalize_curves(const CurveNetwork& net, const SphericalGaussianSet& set,
                                    const ExtractConfig& cfg) {
    CurveNetwork out;
    std::vector<std::vector<Vec3>> samples;
    for (const auto& curve : net.curves) {
        const auto pts = bezier_sample(curve, cfg.Ns);
        const auto support = select_subset(set, pts, cfg.delta1);
        if (support.size() < size_t(cfg.N0)) continue;
        bool duplicate = false;
        for (const auto& prev : samples)
            if (chamfer(pts, prev, 1.0) < 1e-4) {
                duplicate = true;
                break;
            }
        if (duplicate) continue;
        samples.push_back(pts);
        out.curves.push_back(curve);
    }
    return out;
}

// Full stage-2 pipeline: line fitting, cubic upgrade, global refinement,
// cleanup.
inline CurveNetwork extract_curves(const SphericalGaussianSet& set, const ExtractConfig& cfg) {
    if (set.count() <= size_t(cfg.N0))
        throw std::runtime_error("extract_curves: too few Gaussians");
    const LineSegmentSet lines = line_fitting(set, cfg);
    const CurveNetwork initial = init_beziers(lines);
    const CurveNetwork optimized = global_optimize(initial, set, cfg);
    return finalize_curves(optimized, set, cfg);
}

}  // namespace sgcr
