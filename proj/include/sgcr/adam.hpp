#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace sgcr {

// Plain Adam over a flat parameter vector. Step count is supplied by the
// caller so several instances can share one schedule.
struct AdamState {
    std::vector<double> m, v;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-15;

    void resize(size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }

    void step(std::vector<double>& params, const std::vector<double>& grads, double lr, long t) {
        const double bc1 = 1.0 - std::pow(beta1, double(t));
        const double bc2 = 1.0 - std::pow(beta2, double(t));
        for (size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
            params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }

    // Keeps entries whose keep[i] is true, in order.
    void filter(const std::vector<char>& keep, size_t stride) {
        size_t w = 0;
        for (size_t i = 0; i < keep.size(); ++i) {
            if (!keep[i]) continue;
            for (size_t k = 0; k < stride; ++k) {
                m[w * stride + k] = m[i * stride + k];
                v[w * stride + k] = v[i * stride + k];
            }
            ++w;
        }
        m.resize(w * stride);
        v.resize(w * stride);
    }

    void append_zeros(size_t count, size_t stride) {
        m.resize(m.size() + count * stride, 0.0);
        v.resize(v.size() + count * stride, 0.0);
    }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace sgcr
