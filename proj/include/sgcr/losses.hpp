#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sgcr/edge_map.hpp"
#include "sgcr/splat.hpp"

namespace sgcr {

struct ImageLoss {
    double value = 0.0;
    EdgeMap grad;        // d(value)/d(rendered pixel)
    bool skipped = false;
};

// Edge-aware pixel loss: squared error on edge and non-edge pixels with
// swapped population weights, so sparse edge pixels are not drowned out.
// A ground-truth map with no pixel above eta yields zero loss and marks the
// view skipped.
inline ImageLoss edge_loss(const EdgeMap& rendered, const EdgeMap& gt, double eta) {
    if (!rendered.same_shape(gt)) throw std::invalid_argument("edge_loss: shape mismatch");
    const size_t n = rendered.size();
    size_t n_edge = 0;
    for (size_t i = 0; i < n; ++i)
        if (gt.pixels[i] > eta) ++n_edge;

    ImageLoss out;
    out.grad = EdgeMap(rendered.width, rendered.height, 0.0);
    if (n_edge == 0) {
        out.skipped = true;
        return out;
    }
    const double w_edge = double(n - n_edge) / double(n);
    const double w_bg = double(n_edge) / double(n);
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double diff = rendered.pixels[i] - gt.pixels[i];
        const double w = gt.pixels[i] > eta ? w_edge : w_bg;
        acc += w * diff * diff;
        out.grad.pixels[i] = 2.0 * w * diff;
    }
    out.value = acc;
    return out;
}

namespace detail {

inline std::vector<double> gaussian_window(int half, double sigma) {
    std::vector<double> k(2 * half + 1);
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        k[i + half] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + half];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Separable zero-padded convolution with a symmetric kernel (self-adjoint).
inline EdgeMap conv_separable(const EdgeMap& img, const std::vector<double>& k) {
    const int half = int(k.size() / 2);
    EdgeMap tmp(img.width, img.height, 0.0), out(img.width, img.height, 0.0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i) {
                const int xx = x + i;
                if (xx >= 0 && xx < img.width) acc += k[i + half] * img.at(xx, y);
            }
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i) {
                const int yy = y + i;
                if (yy >= 0 && yy < img.height) acc += k[i + half] * tmp.at(x, yy);
            }
            out.at(x, y) = acc;
        }
    return out;
}

inline EdgeMap hadamard(const EdgeMap& a, const EdgeMap& b) {
    EdgeMap out(a.width, a.height, 0.0);
    for (size_t i = 0; i < a.size(); ++i) out.pixels[i] = a.pixels[i] * b.pixels[i];
    return out;
}

}  // namespace detail

// D-SSIM = (1 - SSIM)/2 with an 11x11 Gaussian window (sigma 1.5), C1=0.01^2,
// C2=0.03^2 on unit dynamic range, mean over pixels; zero padding at borders.
inline ImageLoss dssim_loss(const EdgeMap& rendered, const EdgeMap& gt) {
    if (!rendered.same_shape(gt)) throw std::invalid_argument("dssim_loss: shape mismatch");
    const auto kernel = detail::gaussian_window(5, 1.5);
    constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
    const size_t n = rendered.size();
    const double inv_n = 1.0 / double(n);

    const EdgeMap mu_x = detail::conv_separable(rendered, kernel);
    const EdgeMap mu_y = detail::conv_separable(gt, kernel);
    const EdgeMap xx = detail::conv_separable(detail::hadamard(rendered, rendered), kernel);
    const EdgeMap yy = detail::conv_separable(detail::hadamard(gt, gt), kernel);
    const EdgeMap xy = detail::conv_separable(detail::hadamard(rendered, gt), kernel);

    ImageLoss out;
    out.grad = EdgeMap(rendered.width, rendered.height, 0.0);
    EdgeMap d_mu(rendered.width, rendered.height, 0.0);
    EdgeMap d_varx(rendered.width, rendered.height, 0.0);
    EdgeMap d_cov(rendered.width, rendered.height, 0.0);
    double ssim_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double mx = mu_x.pixels[i], my = mu_y.pixels[i];
        const double vx = xx.pixels[i] - mx * mx;
        const double vy = yy.pixels[i] - my * my;
        const double cxy = xy.pixels[i] - mx * my;
        const double A1 = 2 * mx * my + C1, A2 = 2 * cxy + C2;
        const double B1 = mx * mx + my * my + C1, B2 = vx + vy + C2;
        const double S = (A1 * A2) / (B1 * B2);
        ssim_sum += S;
        // d(mean SSIM)/d{mu_x, var_x, cov_xy} at this window, scaled for the
        // D-SSIM sign and the 1/N average.
        const double scale = -0.5 * inv_n;
        const double dS_dA1 = A2 / (B1 * B2), dS_dB1 = -S / B1;
        const double dS_dA2 = A1 / (B1 * B2), dS_dB2 = -S / B2;
        d_mu.pixels[i] = scale * (dS_dA1 * 2 * my + dS_dB1 * 2 * mx);
        d_varx.pixels[i] = scale * dS_dB2;
        d_cov.pixels[i] = scale * dS_dA2 * 2;
    }
    out.value = 0.5 * (1.0 - ssim_sum * inv_n);

    // Adjoint of the window statistics: mu_x and the quadratic terms all route
    // through the same symmetric convolution.
    const EdgeMap g_mu = detail::conv_separable(d_mu, kernel);
    const EdgeMap g_varx = detail::conv_separable(d_varx, kernel);
    const EdgeMap g_varx_mu = detail::conv_separable(detail::hadamard(d_varx, mu_x), kernel);
    const EdgeMap g_cov = detail::conv_separable(d_cov, kernel);
    const EdgeMap g_cov_muy = detail::conv_separable(detail::hadamard(d_cov, mu_y), kernel);
    for (size_t i = 0; i < n; ++i) {
        out.grad.pixels[i] = g_mu.pixels[i] + 2.0 * rendered.pixels[i] * g_varx.pixels[i] -
                             2.0 * g_varx_mu.pixels[i] + gt.pixels[i] * g_cov.pixels[i] -
                             g_cov_muy.pixels[i];
    }
    return out;
}

struct AttributeLoss {
    double value = 0.0;
    std::vector<double> d_opacity;
    std::vector<double> d_color;
};

// Sum of squared opacity-color gaps; ties edge density to color intensity.
inline AttributeLoss opacity_color_loss(const SphericalGaussianSet& set) {
    AttributeLoss out;
    out.d_opacity.assign(set.count(), 0.0);
    out.d_color.assign(set.count(), 0.0);
    for (size_t i = 0; i < set.count(); ++i) {
        const double gap = set.gaussians[i].opacity - set.gaussians[i].color;
        out.value += gap * gap;
        out.d_opacity[i] = 2.0 * gap;
        out.d_color[i] = -2.0 * gap;
    }
    return out;
}

// sum log(1 + o^2/0.5): keeps the population of live opacities small.
inline AttributeLoss regularization_loss(const SphericalGaussianSet& set) {
    AttributeLoss out;
    out.d_opacity.assign(set.count(), 0.0);
    out.d_color.assign(set.count(), 0.0);
    for (size_t i = 0; i < set.count(); ++i) {
        const double o = set.gaussians[i].opacity;
        out.value += std::log(1.0 + o * o / 0.5);
        out.d_opacity[i] = 2.0 * o / (0.5 + o * o);
    }
    return out;
}

struct LossWeights {
    double lambda1 = 0.2;  // D-SSIM share
    double lambda2 = 2.0;  // opacity-color
    double lambda3 = 0.01; // regularization
    double eta = 0.3;      // edge threshold
};

struct TotalLoss {
    double value = 0.0;
    double edge = 0.0, dssim = 0.0, oc = 0.0, reg = 0.0;
    bool skipped = false;
    RenderGradients grads;
};

// Full per-view objective: (1-l1) L_edge + l1 L_DSSIM + l2 L_oc + l3 L_reg,
// with image-space gradients pushed through the renderer.
inline TotalLoss total_loss(const SphericalGaussianSet& set, const Camera& cam,
                            const EdgeMap& gt, const LossWeights& w,
                            const RenderSettings& settings = {}) {
    TotalLoss out;
    const EdgeMap rendered = render(set, cam, settings);
    const ImageLoss e = edge_loss(rendered, gt, w.eta);
    if (e.skipped) {
        out.skipped = true;
        return out;
    }
    const ImageLoss d = dssim_loss(rendered, gt);
    const AttributeLoss oc = opacity_color_loss(set);
    const AttributeLoss rg = regularization_loss(set);

    out.edge = e.value;
    out.dssim = d.value;
    out.oc = oc.value;
    out.reg = rg.value;
    out.value = (1.0 - w.lambda1) * e.value + w.lambda1 * d.value + w.lambda2 * oc.value +
                w.lambda3 * rg.value;

    EdgeMap dL_dimage(rendered.width, rendered.height, 0.0);
    for (size_t i = 0; i < dL_dimage.size(); ++i)
        dL_dimage.pixels[i] =
            (1.0 - w.lambda1) * e.grad.pixels[i] + w.lambda1 * d.grad.pixels[i];
    out.grads = render_backward(set, cam, dL_dimage, settings);
    for (size_t i = 0; i < set.count(); ++i) {
        out.grads.d_opacity[i] += w.lambda2 * oc.d_opacity[i] + w.lambda3 * rg.d_opacity[i];
        out.grads.d_color[i] += w.lambda2 * oc.d_color[i];
    }
    return out;
}

}  // namespace sgcr
