#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tulpar/model/net.hpp"

namespace tulpar::train {

struct OptimizerConfig {
    double peak_lr = 3e-4;
    double min_lr = -1;  // < 0 means the 0.1 * peak_lr default
    int64_t warmup_steps = -1;  // < 0 means max(10, total_steps / 100)
    int64_t total_steps = 0;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double weight_decay = 0.1;
    double clip_norm = 1.0;
    double eps = 1e-8;

    void apply_defaults() {
        if (min_lr < 0) min_lr = 0.1 * peak_lr;
        if (warmup_steps < 0) warmup_steps = std::max<int64_t>(10, total_steps / 100);
        if (warmup_steps > total_steps) warmup_steps = total_steps;
    }

    void validate() const {
        if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
        if (warmup_steps < 1 || warmup_steps > total_steps) {
            throw std::invalid_argument("need 0 < warmup_steps <= total_steps");
        }
        if (min_lr < 0 || min_lr > peak_lr) {
            throw std::invalid_argument("need 0 <= min_lr <= peak_lr");
        }
        if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) {
            throw std::invalid_argument("betas must be in [0,1)");
        }
        if (clip_norm <= 0) throw std::invalid_argument("clip_norm must be positive");
        if (eps <= 0) throw std::invalid_argument("eps must be positive");
    }
};

// Linear warmup to peak_lr, then cosine decay to min_lr at total_steps.
inline double lr_at_step(int64_t step, const OptimizerConfig& cfg) {
    if (step < 0 || step > cfg.total_steps) {
        throw std::out_of_range("lr_at_step: step outside [0, total_steps]");
    }
    if (step < cfg.warmup_steps) {
        return cfg.peak_lr * static_cast<double>(step) /
               static_cast<double>(cfg.warmup_steps);
    }
    if (cfg.total_steps == cfg.warmup_steps) return cfg.peak_lr;
    const double progress = static_cast<double>(step - cfg.warmup_steps) /
                            static_cast<double>(cfg.total_steps - cfg.warmup_steps);
    return cfg.min_lr +
           0.5 * (cfg.peak_lr - cfg.min_lr) * (1.0 + std::cos(3.14159265358979323846 * progress));
}

template <typename Scalar>
using Vec = model::Vec<Scalar>;

// Global L2 norm across all gradient tensors; scales everything down when it
// exceeds clip_norm. Throws on a non-finite norm so the step can be aborted.
template <typename Scalar>
double clip_gradients(model::Parameters<Scalar>& grads, double clip_norm) {
    double sq = 0;
    auto refs = model::tensor_refs(grads);
    for (const auto& ref : refs) {
        const Eigen::Map<Vec<Scalar>> flat(ref.data, ref.rows * ref.cols);
        sq += static_cast<double>(flat.squaredNorm());
    }
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) {
        throw std::runtime_error("gradient norm is not finite; aborting step");
    }
    if (norm > clip_norm && norm > 0) {
        const Scalar scale = static_cast<Scalar>(clip_norm / norm);
        for (const auto& ref : refs) {
            Eigen::Map<Vec<Scalar>> flat(ref.data, ref.rows * ref.cols);
            flat *= scale;
        }
    }
    return norm;
}

// AdamW moment estimates, one per parameter tensor.
template <typename Scalar>
struct OptimizerState {
    int64_t step = 0;
    model::Parameters<Scalar> m, v;

    static OptimizerState zeros(const model::ModelConfig& cfg) {
        OptimizerState s;
        s.m = model::Parameters<Scalar>::zeros(cfg);
        s.v = model::Parameters<Scalar>::zeros(cfg);
        return s;
    }
};

// One decoupled-weight-decay Adam update:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + wd * theta)
// Decay applies to matrices only, never to norm weights.
template <typename Scalar>
void adamw_step(model::Parameters<Scalar>& params, model::Parameters<Scalar>& grads,
                OptimizerState<Scalar>& state, const OptimizerConfig& cfg, double lr) {
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);

    auto p_refs = model::tensor_refs(params);
    auto g_refs = model::tensor_refs(grads);
    auto m_refs = model::tensor_refs(state.m);
    auto v_refs = model::tensor_refs(state.v);
    for (size_t i = 0; i < p_refs.size(); ++i) {
        const int64_t n = p_refs[i].rows * p_refs[i].cols;
        if (n != g_refs[i].rows * g_refs[i].cols) {
            throw std::invalid_argument("gradient shape mismatch for " + p_refs[i].name);
        }
        Scalar* p = p_refs[i].data;
        const Scalar* g = g_refs[i].data;
        Scalar* m = m_refs[i].data;
        Scalar* v = v_refs[i].data;
        const Scalar b1 = static_cast<Scalar>(cfg.beta1);
        const Scalar b2 = static_cast<Scalar>(cfg.beta2);
        const Scalar wd =
            p_refs[i].decayable ? static_cast<Scalar>(cfg.weight_decay) : Scalar(0);
        for (int64_t k = 0; k < n; ++k) {
            m[k] = b1 * m[k] + (Scalar(1) - b1) * g[k];
            v[k] = b2 * v[k] + (Scalar(1) - b2) * g[k] * g[k];
            const double m_hat = static_cast<double>(m[k]) / bc1;
            const double v_hat = static_cast<double>(v[k]) / bc2;
            p[k] = static_cast<Scalar>(
                static_cast<double>(p[k]) -
                lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) +
                      static_cast<double>(wd) * static_cast<double>(p[k])));
        }
    }
}

// Data-to-parameter ratio (e.g. 9.0e9 tokens / 587e6 params ~= 15.3).
inline double tokens_per_parameter(double token_count, double param_count) {
    if (param_count <= 0) throw std::invalid_argument("param_count must be positive");
    return token_count / param_count;
}

}  // namespace tulpar::train
