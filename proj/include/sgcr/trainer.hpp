#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sgcr/adam.hpp"
#include "sgcr/camera.hpp"
#include "sgcr/losses.hpp"
#include "sgcr/rng.hpp"
#include "sgcr/splat.hpp"

namespace sgcr {

struct TrainConfig {
    int grid_resolution = 50;
    double r0 = 0.005;
    LossWeights loss;  // eta, lambda1..3
    std::pair<int, int> phase_iters{3000, 3000};
    int densify_interval = 200;
    int opacity_reset_interval = 1000;
    double opacity_reset_value = 0.1;
    double prune_opacity_min = 0.005;  // running prune
    double final_prune_opacity = 0.5;  // final prune: o < this OR c < color bound
    double final_prune_color = 0.1;
    double densify_grad_threshold = 2e-4;
    double densify_offset_std_factor = 0.5;  // noise std = factor * r0
    double lr_position = 1.6e-4;
    double lr_position_final = 1.6e-6;  // exponential decay target over training
    double lr_opacity = 0.05;
    double lr_color = 0.0025;
    double init_opacity = 0.1;
    double init_color = 0.5;
    uint64_t seed = 0;
    RenderSettings render;

    long total_iters() const { return long(phase_iters.first) + phase_iters.second; }

    void validate() const {
        if (grid_resolution < 2) throw std::invalid_argument("train: grid_resolution must be >= 2");
        if (r0 <= 0) throw std::invalid_argument("train: r0 must be positive");
        if (densify_interval <= 0 || phase_iters.first % densify_interval != 0)
            throw std::invalid_argument("train: densify_interval must divide phase 1 length");
        if (opacity_reset_interval <= 0 || phase_iters.first % opacity_reset_interval != 0)
            throw std::invalid_argument("train: opacity_reset_interval must divide phase 1 length");
    }
};

// Gaussians at the cell centers of a uniform lattice over [0,1]^3.
inline SphericalGaussianSet grid_init(const TrainConfig& cfg) {
    if (cfg.grid_resolution < 2) throw std::invalid_argument("grid_init: resolution must be >= 2");
    SphericalGaussianSet set;
    set.radius = cfg.r0;
    const int r = cfg.grid_resolution;
    set.gaussians.reserve(size_t(r) * r * r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            for (int k = 0; k < r; ++k)
                set.gaussians.push_back({Vec3{(i + 0.5) / r, (j + 0.5) / r, (k + 0.5) / r},
                                         cfg.init_opacity, cfg.init_color});
    return set;
}

enum class PruneMode { Running, Final };

// Running prune drops near-transparent Gaussians; final prune drops any
// Gaussian that is either low-opacity or near-black.
inline SphericalGaussianSet prune(const SphericalGaussianSet& set, PruneMode mode,
                                  const TrainConfig& cfg = {}) {
    SphericalGaussianSet out;
    out.radius = set.radius;
    for (const auto& g : set.gaussians) {
        const bool drop =
            mode == PruneMode::Running
                ? g.opacity < cfg.prune_opacity_min
                : (g.opacity < cfg.final_prune_opacity || g.color < cfg.final_prune_color);
        if (!drop) out.gaussians.push_back(g);
    }
    return out;
}

struct DensifyStats {
    std::vector<double> grad_norm_sum;
    long iterations = 0;

    void reset(size_t n) {
        grad_norm_sum.assign(n, 0.0);
        iterations = 0;
    }
};

// Duplicates every Gaussian whose mean view-space positional-gradient norm
// exceeds the threshold; the clone is offset by isotropic noise. With a fixed
// shared radius, split and clone collapse to the same operation.
inline SphericalGaussianSet densify(const SphericalGaussianSet& set, const DensifyStats& stats,
                                    double threshold, Rng& rng, double offset_std) {
    SphericalGaussianSet out = set;
    const long denom = std::max<long>(1, stats.iterations);
    for (size_t i = 0; i < set.count(); ++i) {
        if (stats.grad_norm_sum[i] / double(denom) > threshold) {
            SphericalGaussian clone = set.gaussians[i];
            clone.center += rng.normal3() * offset_std;
            out.gaussians.push_back(clone);
        }
    }
    return out;
}

struct TrainLogEntry {
    long iteration = 0;
    double total = 0, edge = 0, dssim = 0, oc = 0, reg = 0;
    size_t count = 0;
    char event = '-';  // 'D' densify, 'R' opacity reset, 'P' final prune
};

// Stage-1 trainer: two phases, densify/reset/final-prune in phase 1,
// refinement plus a second final-prune in phase 2. One randomly sampled view
// per iteration. The full state serializes, so a run can stop at any
// iteration and resume bit-exactly.
class Trainer {
public:
    Trainer(std::vector<std::pair<Camera, EdgeMap>> views, TrainConfig cfg)
        : views_(std::move(views)), cfg_(std::move(cfg)) {
        cfg_.validate();
        if (views_.empty()) throw std::invalid_argument("train: no views");
        for (size_t i = 0; i < views_.size(); ++i) {
            const auto& gt = views_[i].second;
            for (double p : gt.pixels)
                if (p > cfg_.loss.eta) {
                    usable_.push_back(i);
                    break;
                }
        }
        if (usable_.empty())
            throw std::runtime_error("train: every view is degenerate (no edge pixels)");
        view_rng_ = Rng(cfg_.seed).fork(1);
        densify_rng_ = Rng(cfg_.seed).fork(2);
        from_set(grid_init(cfg_));
    }

    long iteration() const { return global_it_; }
    const std::vector<TrainLogEntry>& log() const { return log_; }
    SphericalGaussianSet current_set() const { return to_set(); }

    // Advances to the given global iteration (at most total_iters), applying
    // phase-boundary final-prunes as they are crossed.
    void run_to(long target) {
        target = std::min(target, cfg_.total_iters());
        while (global_it_ < target) {
            step();
            if (global_it_ == cfg_.phase_iters.first || global_it_ == cfg_.total_iters())
                final_prune();
        }
    }

    void run() { run_to(cfg_.total_iters()); }

    void save(std::ostream& os) const {
        os << std::setprecision(17);
        os << "sgcr_trainer_state 1\n";
        os << "iteration " << global_it_ << ' ' << adam_t_ << '\n';
        os << "count " << count() << '\n';
        auto dump = [&os](const char* name, const std::vector<double>& v) {
            os << name;
            for (double x : v) os << ' ' << x;
            os << '\n';
        };
        dump("pos", pos_);
        dump("op", op_logit_);
        dump("col", col_logit_);
        dump("adam_pos_m", adam_pos_.m);
        dump("adam_pos_v", adam_pos_.v);
        dump("adam_op_m", adam_op_.m);
        dump("adam_op_v", adam_op_.v);
        dump("adam_col_m", adam_col_.m);
        dump("adam_col_v", adam_col_.v);
        dump("stats", stats_.grad_norm_sum);
        os << "stats_iters " << stats_.iterations << '\n';
        os << "view_rng ";
        view_rng_.save(os);
        os << "\ndensify_rng ";
        densify_rng_.save(os);
        os << '\n';
    }

    void load(std::istream& is) {
        std::string tag;
        int version = 0;
        is >> tag >> version;
        if (tag != "sgcr_trainer_state" || version != 1)
            throw std::runtime_error("trainer checkpoint: bad header");
        size_t n = 0;
        is >> tag >> global_it_ >> adam_t_;
        is >> tag >> n;
        auto slurp = [&is](std::vector<double>& v, size_t count) {
            std::string name;
            is >> name;
            v.resize(count);
            for (auto& x : v) is >> x;
        };
        slurp(pos_, n * 3);
        slurp(op_logit_, n);
        slurp(col_logit_, n);
        slurp(adam_pos_.m, n * 3);
        slurp(adam_pos_.v, n * 3);
        slurp(adam_op_.m, n);
        slurp(adam_op_.v, n);
        slurp(adam_col_.m, n);
        slurp(adam_col_.v, n);
        slurp(stats_.grad_norm_sum, n);
        is >> tag >> stats_.iterations;
        is >> tag;
        view_rng_.load(is);
        is >> tag;
        densify_rng_.load(is);
        if (!is) throw std::runtime_error("trainer checkpoint: truncated state");
    }

private:
    size_t count() const { return op_logit_.size(); }

    static double safe_logit(double p) { return logit(std::clamp(p, 1e-6, 1.0 - 1e-6)); }

    void from_set(const SphericalGaussianSet& set) {
        const size_t n = set.count();
        pos_.resize(n * 3);
        op_logit_.resize(n);
        col_logit_.resize(n);
        for (size_t i = 0; i < n; ++i) {
            pos_[i * 3] = set.gaussians[i].center.x;
            pos_[i * 3 + 1] = set.gaussians[i].center.y;
            pos_[i * 3 + 2] = set.gaussians[i].center.z;
            op_logit_[i] = safe_logit(set.gaussians[i].opacity);
            col_logit_[i] = safe_logit(set.gaussians[i].color);
        }
        adam_pos_.resize(n * 3);
        adam_op_.resize(n);
        adam_col_.resize(n);
        stats_.reset(n);
    }

    SphericalGaussianSet to_set() const {
        SphericalGaussianSet set;
        set.radius = cfg_.r0;
        set.gaussians.resize(count());
        for (size_t i = 0; i < count(); ++i) {
            set.gaussians[i].center = {pos_[i * 3], pos_[i * 3 + 1], pos_[i * 3 + 2]};
            set.gaussians[i].opacity = sigmoid(op_logit_[i]);
            set.gaussians[i].color = sigmoid(col_logit_[i]);
        }
        return set;
    }

    void filter(const std::vector<char>& keep) {
        auto compact = [&](std::vector<double>& v, size_t stride) {
            size_t w = 0;
            for (size_t i = 0; i < keep.size(); ++i) {
                if (!keep[i]) continue;
                for (size_t k = 0; k < stride; ++k) v[w * stride + k] = v[i * stride + k];
                ++w;
            }
            v.resize(w * stride);
        };
        compact(pos_, 3);
        compact(op_logit_, 1);
        compact(col_logit_, 1);
        adam_pos_.filter(keep, 3);
        adam_op_.filter(keep, 1);
        adam_col_.filter(keep, 1);
        stats_.reset(count());
    }

    void final_prune() {
        std::vector<char> keep(count(), 1);
        for (size_t i = 0; i < count(); ++i) {
            const double o = sigmoid(op_logit_[i]), c = sigmoid(col_logit_[i]);
            if (o < cfg_.final_prune_opacity || c < cfg_.final_prune_color) keep[i] = 0;
        }
        filter(keep);
        log_.push_back({global_it_, 0, 0, 0, 0, 0, count(), 'P'});
    }

    void step() {
        ++global_it_;
        const int phase = global_it_ <= cfg_.phase_iters.first ? 1 : 2;
        const int it = phase == 1 ? int(global_it_) : int(global_it_ - cfg_.phase_iters.first);
        const int phase_len = phase == 1 ? cfg_.phase_iters.first : cfg_.phase_iters.second;

        const size_t vi = usable_[view_rng_.index(usable_.size())];
        const auto& [cam, gt] = views_[vi];

        const SphericalGaussianSet set = to_set();
        const TotalLoss loss = total_loss(set, cam, gt, cfg_.loss, cfg_.render);

        const size_t n = count();
        if (!loss.skipped) {
            std::vector<double> g_pos(n * 3), g_op(n), g_col(n);
            for (size_t i = 0; i < n; ++i) {
                g_pos[i * 3] = loss.grads.d_center[i].x;
                g_pos[i * 3 + 1] = loss.grads.d_center[i].y;
                g_pos[i * 3 + 2] = loss.grads.d_center[i].z;
                const double o = set.gaussians[i].opacity, c = set.gaussians[i].color;
                g_op[i] = loss.grads.d_opacity[i] * o * (1.0 - o);
                g_col[i] = loss.grads.d_color[i] * c * (1.0 - c);
                stats_.grad_norm_sum[i] += loss.grads.pos_grad_norm_2d[i];
            }
            ++adam_t_;
            const double lr_decay = std::pow(cfg_.lr_position_final / cfg_.lr_position,
                                             1.0 / double(std::max<long>(1, cfg_.total_iters())));
            const double lr_pos = cfg_.lr_position * std::pow(lr_decay, double(global_it_ - 1));
            adam_pos_.step(pos_, g_pos, lr_pos, adam_t_);
            adam_op_.step(op_logit_, g_op, cfg_.lr_opacity, adam_t_);
            adam_col_.step(col_logit_, g_col, cfg_.lr_color, adam_t_);
        }
        stats_.iterations++;

        TrainLogEntry entry{global_it_, loss.value, loss.edge, loss.dssim,
                            loss.oc,    loss.reg,   count(),   '-'};

        if (phase == 1 && it % cfg_.densify_interval == 0 && it < phase_len) {
            const SphericalGaussianSet cur = to_set();
            const SphericalGaussianSet grown =
                densify(cur, stats_, cfg_.densify_grad_threshold, densify_rng_,
                        cfg_.densify_offset_std_factor * cfg_.r0);
            const size_t added = grown.count() - cur.count();
            for (size_t i = cur.count(); i < grown.count(); ++i) {
                const auto& g = grown.gaussians[i];
                pos_.insert(pos_.end(), {g.center.x, g.center.y, g.center.z});
                op_logit_.push_back(safe_logit(g.opacity));
                col_logit_.push_back(safe_logit(g.color));
            }
            adam_pos_.append_zeros(added, 3);
            adam_op_.append_zeros(added, 1);
            adam_col_.append_zeros(added, 1);
            stats_.reset(count());
            entry.event = 'D';
        }

        if (phase == 1 && it % cfg_.opacity_reset_interval == 0 && it < phase_len) {
            // End of an opacity cycle: drop dead Gaussians, then reset.
            std::vector<char> keep(count(), 1);
            for (size_t i = 0; i < count(); ++i)
                if (sigmoid(op_logit_[i]) < cfg_.prune_opacity_min) keep[i] = 0;
            filter(keep);
            const double reset_logit = safe_logit(cfg_.opacity_reset_value);
            for (auto& v : op_logit_) v = reset_logit;
            adam_op_.resize(count());
            entry.event = 'R';
        }

        entry.count = count();
        log_.push_back(entry);
    }

    std::vector<std::pair<Camera, EdgeMap>> views_;
    TrainConfig cfg_;
    std::vector<size_t> usable_;
    Rng view_rng_{0}, densify_rng_{0};

    std::vector<double> pos_, op_logit_, col_logit_;
    AdamState adam_pos_, adam_op_, adam_col_;
    DensifyStats stats_;
    long global_it_ = 0;
    long adam_t_ = 0;
    std::vector<TrainLogEntry> log_;
};

struct TrainResult {
    SphericalGaussianSet set;
    std::vector<TrainLogEntry> log;
};

inline TrainResult train(const std::vector<std::pair<Camera, EdgeMap>>& views,
                         const TrainConfig& cfg) {
    Trainer trainer(views, cfg);
    trainer.run();
    return {trainer.current_set(), trainer.log()};
}

}  // namespace sgcr
