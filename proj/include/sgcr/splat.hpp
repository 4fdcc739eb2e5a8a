#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <thread>
#include <vector>

#include "sgcr/camera.hpp"
#include "sgcr/edge_map.hpp"
#include "sgcr/vec3.hpp"

namespace sgcr {

// Isotropic Gaussian primitive: position, scalar opacity and grayscale color.
// The shared radius lives on the set.
struct SphericalGaussian {
    Vec3 center;
    double opacity = 0.0;  // in [0,1]
    double color = 0.0;    // in [0,1]
};

struct SphericalGaussianSet {
    std::vector<SphericalGaussian> gaussians;
    double radius = 0.005;

    size_t count() const { return gaussians.size(); }
};

struct RenderSettings {
    double footprint_sigmas = 3.0;   // per-splat raster extent
    double alpha_clamp = 0.99;
    double transmittance_min = 1e-4; // per-pixel compositing early-out
    double dilation_eps = 0.3;       // px^2 added to cov2d diagonal
    int workers = 0;                 // 0 = read SGCR_WORKERS, else 1
};

inline int resolve_workers(const RenderSettings& s) {
    if (s.workers > 0) return s.workers;
    if (const char* env = std::getenv("SGCR_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

struct Splat2D {
    double mean_u = 0, mean_v = 0;
    double cov_a = 0, cov_b = 0, cov_c = 0;  // [[a,b],[b,c]], pixels^2
    double depth = 0;
    int gaussian_index = -1;
    // Inverse covariance (conic) and raster bounds, filled at projection time.
    double inv_a = 0, inv_b = 0, inv_c = 0;
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
    Vec3 cam_point;  // camera-frame position, kept for the backward chain
};

// Projects one Gaussian to a 2D splat: mean via the pinhole map, covariance
// r0^2 (J R)(J R)^T + eps I with J the perspective Jacobian at the center.
// Returns nullopt when the Gaussian is behind the near plane or its footprint
// misses the image.
inline std::optional<Splat2D> project_gaussian(const SphericalGaussian& g, double r0,
                                               const Camera& cam,
                                               const RenderSettings& settings = {}) {
    const Vec3 t = cam.world_to_camera.apply(g.center);
    if (t.z <= kNearPlane) return std::nullopt;

    Splat2D s;
    s.cam_point = t;
    s.depth = t.z;
    s.mean_u = cam.fx * t.x / t.z + cam.cx;
    s.mean_v = cam.fy * t.y / t.z + cam.cy;

    // J rows in the camera frame; columns of M = J R give the world-space map.
    const double iz = 1.0 / t.z;
    const double j00 = cam.fx * iz, j02 = -cam.fx * t.x * iz * iz;
    const double j11 = cam.fy * iz, j12 = -cam.fy * t.y * iz * iz;
    const auto& m = cam.world_to_camera.m;
    // M = J * R, R rows taken from the world-to-camera matrix.
    double M0[3], M1[3];
    for (int k = 0; k < 3; ++k) {
        M0[k] = j00 * m[0 + k] + j02 * m[8 + k];
        M1[k] = j11 * m[4 + k] + j12 * m[8 + k];
    }
    const double r2 = r0 * r0;
    s.cov_a = r2 * (M0[0] * M0[0] + M0[1] * M0[1] + M0[2] * M0[2]) + settings.dilation_eps;
    s.cov_b = r2 * (M0[0] * M1[0] + M0[1] * M1[1] + M0[2] * M1[2]);
    s.cov_c = r2 * (M1[0] * M1[0] + M1[1] * M1[1] + M1[2] * M1[2]) + settings.dilation_eps;

    const double det = s.cov_a * s.cov_c - s.cov_b * s.cov_b;
    if (det <= 0) return std::nullopt;
    const double idet = 1.0 / det;
    s.inv_a = s.cov_c * idet;
    s.inv_b = -s.cov_b * idet;
    s.inv_c = s.cov_a * idet;

    // Footprint from the larger covariance eigenvalue.
    const double tr = 0.5 * (s.cov_a + s.cov_c);
    const double disc = std::sqrt(std::max(0.0, tr * tr - det));
    const double sigma_max = std::sqrt(tr + disc);
    const double r_px = settings.footprint_sigmas * sigma_max;

    s.x0 = std::max(0, int(std::floor(s.mean_u - r_px)));
    s.x1 = std::min(cam.width - 1, int(std::ceil(s.mean_u + r_px)));
    s.y0 = std::max(0, int(std::floor(s.mean_v - r_px)));
    s.y1 = std::min(cam.height - 1, int(std::ceil(s.mean_v + r_px)));
    if (s.x0 > s.x1 || s.y0 > s.y1) return std::nullopt;
    return s;
}

namespace detail {

// Splats sorted by (depth, index) plus per-pixel CSR candidate lists, already
// in per-pixel depth order.
struct SplatGrid {
    std::vector<Splat2D> splats;
    std::vector<uint32_t> offsets;  // width*height+1
    std::vector<uint32_t> entries;  // splat indices per pixel
};

inline SplatGrid build_splat_grid(const SphericalGaussianSet& set, const Camera& cam,
                                  const RenderSettings& settings) {
    SplatGrid grid;
    grid.splats.reserve(set.gaussians.size());
    for (size_t i = 0; i < set.gaussians.size(); ++i) {
        auto s = project_gaussian(set.gaussians[i], set.radius, cam, settings);
        if (!s) continue;
        s->gaussian_index = int(i);
        grid.splats.push_back(*s);
    }
    std::sort(grid.splats.begin(), grid.splats.end(), [](const Splat2D& a, const Splat2D& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.gaussian_index < b.gaussian_index;
    });

    const size_t npix = size_t(cam.width) * cam.height;
    grid.offsets.assign(npix + 1, 0);
    for (const auto& s : grid.splats)
        for (int y = s.y0; y <= s.y1; ++y)
            for (int x = s.x0; x <= s.x1; ++x) grid.offsets[size_t(y) * cam.width + x + 1]++;
    std::partial_sum(grid.offsets.begin(), grid.offsets.end(), grid.offsets.begin());
    grid.entries.resize(grid.offsets.back());
    std::vector<uint32_t> cursor(grid.offsets.begin(), grid.offsets.end() - 1);
    for (uint32_t si = 0; si < grid.splats.size(); ++si) {
        const auto& s = grid.splats[si];
        for (int y = s.y0; y <= s.y1; ++y)
            for (int x = s.x0; x <= s.x1; ++x) grid.entries[cursor[size_t(y) * cam.width + x]++] = si;
    }
    return grid;
}

inline double splat_weight(const Splat2D& s, double px, double py) {
    const double du = px - s.mean_u, dv = py - s.mean_v;
    const double q = s.inv_a * du * du + 2.0 * s.inv_b * du * dv + s.inv_c * dv * dv;
    return std::exp(-0.5 * q);
}

// Runs fn(y0, y1) over row chunks; with one worker this is a plain call.
template <typename Fn>
inline void for_row_chunks(int height, int workers, Fn&& fn) {
    if (workers <= 1) {
        fn(0, height, 0);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (height + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int y0 = w * chunk, y1 = std::min(height, y0 + chunk);
        if (y0 >= y1) break;
        pool.emplace_back([&fn, y0, y1, w] { fn(y0, y1, w); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

// Front-to-back alpha compositing of all splats into a grayscale edge map.
inline EdgeMap render(const SphericalGaussianSet& set, const Camera& cam,
                      const RenderSettings& settings = {}) {
    EdgeMap img(cam.width, cam.height, 0.0);
    const auto grid = detail::build_splat_grid(set, cam, settings);
    const int workers = resolve_workers(settings);

    detail::for_row_chunks(cam.height, workers, [&](int row0, int row1, int) {
        for (int y = row0; y < row1; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                const size_t pix = size_t(y) * cam.width + x;
                double color = 0.0, transmittance = 1.0;
                for (uint32_t k = grid.offsets[pix]; k < grid.offsets[pix + 1]; ++k) {
                    if (transmittance < settings.transmittance_min) break;
                    const auto& s = grid.splats[grid.entries[k]];
                    const auto& g = set.gaussians[s.gaussian_index];
                    const double alpha =
                        std::min(settings.alpha_clamp, g.opacity * detail::splat_weight(s, x, y));
                    color += g.color * alpha * transmittance;
                    transmittance *= 1.0 - alpha;
                }
                img.pixels[pix] = std::clamp(color, 0.0, 1.0);
            }
        }
    });
    return img;
}

struct RenderGradients {
    std::vector<Vec3> d_center;
    std::vector<double> d_opacity;
    std::vector<double> d_color;
    // Per-Gaussian 2D positional-gradient norm, the densification statistic.
    std::vector<double> pos_grad_norm_2d;
};

// Analytic gradients of sum_pixels dL_dimage * rendered through the full
// compositing and projection chain (mean and covariance both depend on the
// 3D center).
inline RenderGradients render_backward(const SphericalGaussianSet& set, const Camera& cam,
                                       const EdgeMap& dL_dimage,
                                       const RenderSettings& settings = {}) {
    const size_t n = set.gaussians.size();
    RenderGradients out;
    out.d_center.assign(n, Vec3{});
    out.d_opacity.assign(n, 0.0);
    out.d_color.assign(n, 0.0);
    out.pos_grad_norm_2d.assign(n, 0.0);

    const auto grid = detail::build_splat_grid(set, cam, settings);
    const size_t ns = grid.splats.size();
    const int workers = resolve_workers(settings);

    // Per-splat image-space gradient accumulators, one block per worker so the
    // reduction order is fixed.
    std::vector<std::vector<double>> partial(workers);  // [du, dv, dca, dcb, dcc, do, dc] per splat
    for (auto& p : partial) p.assign(ns * 7, 0.0);

    detail::for_row_chunks(cam.height, workers, [&](int row0, int row1, int worker) {
        std::vector<uint32_t> idx;
        std::vector<double> alphas, weights, trans;
        double* acc = partial[worker].data();
        for (int y = row0; y < row1; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                const size_t pix = size_t(y) * cam.width + x;
                const double dL = dL_dimage.pixels[pix];
                if (dL == 0.0 && grid.offsets[pix + 1] == grid.offsets[pix]) continue;
                idx.clear();
                alphas.clear();
                weights.clear();
                trans.clear();
                double transmittance = 1.0;
                for (uint32_t k = grid.offsets[pix]; k < grid.offsets[pix + 1]; ++k) {
                    if (transmittance < settings.transmittance_min) break;
                    const auto& s = grid.splats[grid.entries[k]];
                    const auto& g = set.gaussians[s.gaussian_index];
                    const double w = detail::splat_weight(s, x, y);
                    const double alpha = std::min(settings.alpha_clamp, g.opacity * w);
                    idx.push_back(grid.entries[k]);
                    weights.push_back(w);
                    alphas.push_back(alpha);
                    trans.push_back(transmittance);
                    transmittance *= 1.0 - alpha;
                }
                if (dL == 0.0) continue;
                // Back-to-front: suffix holds sum_{k>i} c_k a_k T_k.
                double suffix = 0.0;
                for (int i = int(idx.size()) - 1; i >= 0; --i) {
                    const auto& s = grid.splats[idx[i]];
                    const auto& g = set.gaussians[s.gaussian_index];
                    const double a = alphas[i], T = trans[i], w = weights[i];
                    double* slot = acc + size_t(idx[i]) * 7;
                    slot[6] += dL * a * T;  // d/dcolor
                    const double dC_da = g.color * T - suffix / (1.0 - a);
                    if (a < settings.alpha_clamp) {  // clamp kills these paths
                        slot[5] += dL * dC_da * w;   // d/dopacity
                        const double dC_dw = dC_da * g.opacity;
                        const double du = double(x) - s.mean_u, dv = double(y) - s.mean_v;
                        const double hu = s.inv_a * du + s.inv_b * dv;  // C^-1 d
                        const double hv = s.inv_b * du + s.inv_c * dv;
                        // dw/dmean = w * C^-1 d ; dw/dcov = 0.5 w (C^-1 d)(C^-1 d)^T
                        const double gw = dL * dC_dw * w;
                        slot[0] += gw * hu;
                        slot[1] += gw * hv;
                        slot[2] += gw * 0.5 * hu * hu;
                        slot[3] += gw * hu * hv;  // both off-diagonal entries
                        slot[4] += gw * 0.5 * hv * hv;
                    }
                    suffix += g.color * a * T;
                }
            }
        }
    });

    // Reduce worker partials in fixed order, then chain image-space gradients
    // back to the 3D center.
    std::vector<double> acc(ns * 7, 0.0);
    for (const auto& p : partial)
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += p[i];

    const auto& m = cam.world_to_camera.m;
    const double r2 = set.radius * set.radius;
    for (size_t si = 0; si < ns; ++si) {
        const auto& s = grid.splats[si];
        const int gi = s.gaussian_index;
        const double* slot = acc.data() + si * 7;
        out.d_color[gi] += slot[6];
        out.d_opacity[gi] += slot[5];
        out.pos_grad_norm_2d[gi] += std::sqrt(slot[0] * slot[0] + slot[1] * slot[1]);

        const Vec3 t = s.cam_point;
        const double iz = 1.0 / t.z, iz2 = iz * iz, iz3 = iz2 * iz;
        const double j00 = cam.fx * iz, j02 = -cam.fx * t.x * iz2;
        const double j11 = cam.fy * iz, j12 = -cam.fy * t.y * iz2;
        double M0[3], M1[3];
        for (int k = 0; k < 3; ++k) {
            M0[k] = j00 * m[0 + k] + j02 * m[8 + k];
            M1[k] = j11 * m[4 + k] + j12 * m[8 + k];
        }

        Vec3 dL_dt{};
        // Mean chain: dmean/dt = J.
        dL_dt.x += slot[0] * j00;
        dL_dt.y += slot[1] * j11;
        dL_dt.z += slot[0] * j02 + slot[1] * j12;

        // Covariance chain: cov = r0^2 M M^T, M = J(t) R. For each camera-frame
        // axis k the Jacobian perturbation D = (dJ/dt_k) R gives
        // dcov/dt_k = r0^2 (D M^T + M D^T).
        const double dLc_a = slot[2], dLc_b = slot[3], dLc_c = slot[4];
        for (int k = 0; k < 3; ++k) {
            double dj00 = 0, dj02 = 0, dj11 = 0, dj12 = 0;
            if (k == 0) {
                dj02 = -cam.fx * iz2;
            } else if (k == 1) {
                dj12 = -cam.fy * iz2;
            } else {
                dj00 = -cam.fx * iz2;
                dj02 = 2.0 * cam.fx * t.x * iz3;
                dj11 = -cam.fy * iz2;
                dj12 = 2.0 * cam.fy * t.y * iz3;
            }
            double D0[3], D1[3];
            for (int c = 0; c < 3; ++c) {
                D0[c] = dj00 * m[0 + c] + dj02 * m[8 + c];
                D1[c] = dj11 * m[4 + c] + dj12 * m[8 + c];
            }
            double da = 0, db = 0, dc = 0;
            for (int c = 0; c < 3; ++c) {
                da += 2.0 * D0[c] * M0[c];
                db += D0[c] * M1[c] + M0[c] * D1[c];
                dc += 2.0 * D1[c] * M1[c];
            }
            const double contrib = r2 * (dLc_a * da + dLc_b * db + dLc_c * dc);
            if (k == 0)
                dL_dt.x += contrib;
            else if (k == 1)
                dL_dt.y += contrib;
            else
                dL_dt.z += contrib;
        }
        out.d_center[gi] += cam.world_to_camera.rotate_transpose(dL_dt);
    }
    return out;
}

}  // namespace sgcr
