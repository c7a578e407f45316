#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tulpar/model/config.hpp"
#include "tulpar/util/rng.hpp"

namespace tulpar::model {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

template <typename Scalar>
struct LayerParams {
    Mat<Scalar> wq, wk, wv, wo;        // attention projections
    Mat<Scalar> w_gate, w_up, w_down;  // SwiGLU feed-forward
    Vec<Scalar> attn_norm, ffn_norm;   // RMSNorm weights
};

// Dense weight set implied by a ModelConfig. The token embedding doubles as
// the output projection (tied embeddings); there are no bias terms.
template <typename Scalar>
struct Parameters {
    Mat<Scalar> token_embedding;  // vocab x hidden
    std::vector<LayerParams<Scalar>> layers;
    Vec<Scalar> final_norm;

    static Parameters zeros(const ModelConfig& cfg) {
        cfg.validate();
        Parameters p;
        p.token_embedding = Mat<Scalar>::Zero(cfg.vocab_size, cfg.hidden);
        p.layers.resize(static_cast<size_t>(cfg.n_layers));
        for (auto& l : p.layers) {
            l.wq = Mat<Scalar>::Zero(cfg.hidden, cfg.hidden);
            l.wk = Mat<Scalar>::Zero(cfg.hidden, cfg.kv_dim());
            l.wv = Mat<Scalar>::Zero(cfg.hidden, cfg.kv_dim());
            l.wo = Mat<Scalar>::Zero(cfg.hidden, cfg.hidden);
            l.w_gate = Mat<Scalar>::Zero(cfg.hidden, cfg.intermediate);
            l.w_up = Mat<Scalar>::Zero(cfg.hidden, cfg.intermediate);
            l.w_down = Mat<Scalar>::Zero(cfg.intermediate, cfg.hidden);
            l.attn_norm = Vec<Scalar>::Zero(cfg.hidden);
            l.ffn_norm = Vec<Scalar>::Zero(cfg.hidden);
        }
        p.final_norm = Vec<Scalar>::Zero(cfg.hidden);
        return p;
    }

    // normal(0, init_std) matrices, unit norm weights.
    static Parameters init(const ModelConfig& cfg, uint64_t seed, double init_std = 0.02) {
        Parameters p = zeros(cfg);
        util::Rng rng(seed);
        auto fill = [&](Mat<Scalar>& m) {
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                for (Eigen::Index j = 0; j < m.cols(); ++j) {
                    m(i, j) = static_cast<Scalar>(rng.normal() * init_std);
                }
            }
        };
        fill(p.token_embedding);
        for (auto& l : p.layers) {
            fill(l.wq);
            fill(l.wk);
            fill(l.wv);
            fill(l.wo);
            fill(l.w_gate);
            fill(l.w_up);
            fill(l.w_down);
            l.attn_norm.setOnes();
            l.ffn_norm.setOnes();
        }
        p.final_norm.setOnes();
        return p;
    }

    int64_t scalar_count() const {
        int64_t n = token_embedding.size() + final_norm.size();
        for (const auto& l : layers) {
            n += l.wq.size() + l.wk.size() + l.wv.size() + l.wo.size() + l.w_gate.size() +
                 l.w_up.size() + l.w_down.size() + l.attn_norm.size() + l.ffn_norm.size();
        }
        return n;
    }

    template <typename S2>
    Parameters<S2> cast() const {
        Parameters<S2> out;
        out.token_embedding = token_embedding.template cast<S2>();
        out.layers.resize(layers.size());
        for (size_t i = 0; i < layers.size(); ++i) {
            out.layers[i].wq = layers[i].wq.template cast<S2>();
            out.layers[i].wk = layers[i].wk.template cast<S2>();
            out.layers[i].wv = layers[i].wv.template cast<S2>();
            out.layers[i].wo = layers[i].wo.template cast<S2>();
            out.layers[i].w_gate = layers[i].w_gate.template cast<S2>();
            out.layers[i].w_up = layers[i].w_up.template cast<S2>();
            out.layers[i].w_down = layers[i].w_down.template cast<S2>();
            out.layers[i].attn_norm = layers[i].attn_norm.template cast<S2>();
            out.layers[i].ffn_norm = layers[i].ffn_norm.template cast<S2>();
        }
        out.final_norm = final_norm.template cast<S2>();
        return out;
    }
};

// Flat view over every tensor, in a fixed order. `decayable` marks matrices
// (weight decay skips norm weights).
template <typename Scalar>
struct TensorRef {
    std::string name;
    Scalar* data;
    int64_t rows;
    int64_t cols;
    bool decayable;
};

template <typename Scalar>
std::vector<TensorRef<Scalar>> tensor_refs(Parameters<Scalar>& p) {
    std::vector<TensorRef<Scalar>> refs;
    refs.push_back({"tok_emb", p.token_embedding.data(), p.token_embedding.rows(),
                    p.token_embedding.cols(), true});
    for (size_t i = 0; i < p.layers.size(); ++i) {
        auto& l = p.layers[i];
        const std::string prefix = "layers." + std::to_string(i) + ".";
        refs.push_back({prefix + "wq", l.wq.data(), l.wq.rows(), l.wq.cols(), true});
        refs.push_back({prefix + "wk", l.wk.data(), l.wk.rows(), l.wk.cols(), true});
        refs.push_back({prefix + "wv", l.wv.data(), l.wv.rows(), l.wv.cols(), true});
        refs.push_back({prefix + "wo", l.wo.data(), l.wo.rows(), l.wo.cols(), true});
        refs.push_back(
            {prefix + "w_gate", l.w_gate.data(), l.w_gate.rows(), l.w_gate.cols(), true});
        refs.push_back({prefix + "w_up", l.w_up.data(), l.w_up.rows(), l.w_up.cols(), true});
        refs.push_back(
            {prefix + "w_down", l.w_down.data(), l.w_down.rows(), l.w_down.cols(), true});
        refs.push_back(
            {prefix + "attn_norm", l.attn_norm.data(), l.attn_norm.size(), 1, false});
        refs.push_back({prefix + "ffn_norm", l.ffn_norm.data(), l.ffn_norm.size(), 1, false});
    }
    refs.push_back({"final_norm", p.final_norm.data(), p.final_norm.size(), 1, false});
    return refs;
}

// ---------------------------------------------------------------------------
// Core ops
// ---------------------------------------------------------------------------

template <typename Scalar>
Scalar silu(Scalar z) {
    return z / (Scalar(1) + std::exp(-z));
}

// Row-wise y = x / sqrt(mean(x^2) + eps) .* w. Optionally returns 1/rms per
// row for the backward pass.
template <typename Scalar>
Mat<Scalar> rms_norm_rows(const Mat<Scalar>& x, const Vec<Scalar>& w, double eps,
                          Vec<Scalar>* inv_rms_out = nullptr) {
    Mat<Scalar> y(x.rows(), x.cols());
    if (inv_rms_out) inv_rms_out->resize(x.rows());
    const Scalar inv_h = Scalar(1) / static_cast<Scalar>(x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Scalar ms = x.row(r).squaredNorm() * inv_h;
        const Scalar inv = Scalar(1) / std::sqrt(ms + static_cast<Scalar>(eps));
        y.row(r) = (x.row(r) * inv).cwiseProduct(w.transpose());
        if (inv_rms_out) (*inv_rms_out)(r) = inv;
    }
    return y;
}

// Single-vector convenience used by tests.
template <typename Scalar>
Vec<Scalar> rms_norm(const Vec<Scalar>& x, const Vec<Scalar>& w, double eps) {
    Mat<Scalar> row(1, x.size());
    row.row(0) = x.transpose();
    return rms_norm_rows<Scalar>(row, w, eps).row(0).transpose();
}

template <typename Scalar>
void rms_norm_backward_rows(const Mat<Scalar>& x, const Vec<Scalar>& w,
                            const Vec<Scalar>& inv_rms, const Mat<Scalar>& dy,
                            Mat<Scalar>& dx, Vec<Scalar>& dw) {
    dx.resize(x.rows(), x.cols());
    const Scalar inv_h = Scalar(1) / static_cast<Scalar>(x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Scalar inv = inv_rms(r);
        const auto u = dy.row(r).cwiseProduct(w.transpose());
        dw += dy.row(r).cwiseProduct(x.row(r) * inv).transpose();
        const Scalar proj = u.dot(x.row(r)) * inv * inv * inv * inv_h;
        dx.row(r) = u * inv - x.row(r) * proj;
    }
}

// Rotates each (2i, 2i+1) pair of every head by angle pos * base^(-2i/d).
// direction = -1 applies the inverse rotation (the backward pass).
template <typename Scalar>
void rope_apply(Mat<Scalar>& x, int64_t n_heads, double base, int direction = 1) {
    const int64_t dim = x.cols() / n_heads;
    const int64_t half = dim / 2;
    for (Eigen::Index pos = 0; pos < x.rows(); ++pos) {
        for (int64_t i = 0; i < half; ++i) {
            const double theta = std::pow(base, -2.0 * static_cast<double>(i) /
                                                    static_cast<double>(dim));
            const double angle = direction * static_cast<double>(pos) * theta;
            const Scalar c = static_cast<Scalar>(std::cos(angle));
            const Scalar s = static_cast<Scalar>(std::sin(angle));
            for (int64_t head = 0; head < n_heads; ++head) {
                const int64_t col = head * dim + 2 * i;
                const Scalar x0 = x(pos, col);
                const Scalar x1 = x(pos, col + 1);
                x(pos, col) = x0 * c - x1 * s;
                x(pos, col + 1) = x0 * s + x1 * c;
            }
        }
    }
}

// Single-head causal attention: softmax(q k^T / sqrt(d) + mask) v.
// Masked (future) probability entries are exactly zero.
template <typename Scalar>
Mat<Scalar> causal_attention(const Mat<Scalar>& q, const Mat<Scalar>& k,
                             const Mat<Scalar>& v, Mat<Scalar>* probs_out = nullptr) {
    const Eigen::Index seq = q.rows();
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));
    Mat<Scalar> probs = Mat<Scalar>::Zero(seq, seq);
    for (Eigen::Index i = 0; i < seq; ++i) {
        Scalar max_score = std::numeric_limits<Scalar>::lowest();
        for (Eigen::Index j = 0; j <= i; ++j) {
            const Scalar s = q.row(i).dot(k.row(j)) * scale;
            probs(i, j) = s;
            max_score = std::max(max_score, s);
        }
        Scalar denom = 0;
        for (Eigen::Index j = 0; j <= i; ++j) {
            probs(i, j) = std::exp(probs(i, j) - max_score);
            denom += probs(i, j);
        }
        for (Eigen::Index j = 0; j <= i; ++j) probs(i, j) /= denom;
    }
    Mat<Scalar> out = probs * v;
    if (probs_out) *probs_out = std::move(probs);
    return out;
}

// down(silu(gate(x)) .* up(x)) for a batch of row vectors.
template <typename Scalar>
Mat<Scalar> swiglu_ffn(const Mat<Scalar>& x, const Mat<Scalar>& w_gate,
                       const Mat<Scalar>& w_up, const Mat<Scalar>& w_down) {
    const Mat<Scalar> gate = x * w_gate;
    const Mat<Scalar> up = x * w_up;
    return (gate.unaryExpr([](Scalar z) { return silu(z); }).cwiseProduct(up)) * w_down;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

template <typename Scalar>
struct LayerTape {
    Mat<Scalar> x_in, attn_normed;
    Vec<Scalar> attn_inv_rms;
    Mat<Scalar> q, k, v;  // q,k post-rotation
    std::vector<Mat<Scalar>> probs;
    Mat<Scalar> attn_ctx, x_mid, ffn_normed;
    Vec<Scalar> ffn_inv_rms;
    Mat<Scalar> gate_pre, up;
};

// Every intermediate needed to run the exact backward pass of one forward.
template <typename Scalar>
struct ActivationTape {
    std::vector<int> ids;
    std::vector<LayerTape<Scalar>> layers;
    Mat<Scalar> x_final, final_normed;
    Vec<Scalar> final_inv_rms;
};

template <typename Scalar>
Mat<Scalar> forward(const Parameters<Scalar>& params, const ModelConfig& cfg,
                    std::span<const int> ids, ActivationTape<Scalar>* tape = nullptr) {
    const Eigen::Index seq = static_cast<Eigen::Index>(ids.size());
    if (seq == 0) throw std::invalid_argument("empty input sequence");
    if (seq > cfg.context_len) {
        throw std::invalid_argument("sequence length " + std::to_string(seq) +
                                    " exceeds context_len " + std::to_string(cfg.context_len));
    }
    for (const int id : ids) {
        if (id < 0 || id >= cfg.vocab_size) {
            throw std::invalid_argument("token id out of range: " + std::to_string(id));
        }
    }
    const int64_t dh = cfg.head_dim();
    const int64_t group = cfg.n_heads / cfg.n_kv_heads;

    Mat<Scalar> x(seq, cfg.hidden);
    for (Eigen::Index t = 0; t < seq; ++t) x.row(t) = params.token_embedding.row(ids[t]);

    if (tape) {
        tape->ids.assign(ids.begin(), ids.end());
        tape->layers.clear();
        tape->layers.resize(params.layers.size());
    }

    for (size_t li = 0; li < params.layers.size(); ++li) {
        const auto& l = params.layers[li];
        LayerTape<Scalar> local;
        LayerTape<Scalar>& t = tape ? tape->layers[li] : local;

        t.x_in = x;
        t.attn_normed = rms_norm_rows<Scalar>(x, l.attn_norm, cfg.norm_eps, &t.attn_inv_rms);
        t.q = t.attn_normed * l.wq;
        t.k = t.attn_normed * l.wk;
        t.v = t.attn_normed * l.wv;
        rope_apply<Scalar>(t.q, cfg.n_heads, cfg.rope_base);
        rope_apply<Scalar>(t.k, cfg.n_kv_heads, cfg.rope_base);

        t.attn_ctx.resize(seq, cfg.hidden);
        t.probs.resize(static_cast<size_t>(cfg.n_heads));
        for (int64_t head = 0; head < cfg.n_heads; ++head) {
            const int64_t kv_head = head / group;
            const Mat<Scalar> qh = t.q.middleCols(head * dh, dh);
            const Mat<Scalar> kh = t.k.middleCols(kv_head * dh, dh);
            const Mat<Scalar> vh = t.v.middleCols(kv_head * dh, dh);
            t.attn_ctx.middleCols(head * dh, dh) =
                causal_attention<Scalar>(qh, kh, vh, &t.probs[static_cast<size_t>(head)]);
        }
        x = x + t.attn_ctx * l.wo;
        t.x_mid = x;

        t.ffn_normed = rms_norm_rows<Scalar>(x, l.ffn_norm, cfg.norm_eps, &t.ffn_inv_rms);
        t.gate_pre = t.ffn_normed * l.w_gate;
        t.up = t.ffn_normed * l.w_up;
        const Mat<Scalar> act =
            t.gate_pre.unaryExpr([](Scalar z) { return silu(z); }).cwiseProduct(t.up);
        x = x + act * l.w_down;
    }

    Vec<Scalar> final_inv;
    Mat<Scalar> normed = rms_norm_rows<Scalar>(x, params.final_norm, cfg.norm_eps, &final_inv);
    if (tape) {
        tape->x_final = std::move(x);
        tape->final_normed = normed;
        tape->final_inv_rms = std::move(final_inv);
    }
    return normed * params.token_embedding.transpose();
}

// Mean over rows of -log softmax(logits_row)[target], max-subtracted.
template <typename Scalar>
Scalar cross_entropy(const Mat<Scalar>& logits, std::span<const int> targets) {
    if (static_cast<size_t>(logits.rows()) != targets.size()) {
        throw std::invalid_argument("cross_entropy: one target per logit row required");
    }
    Scalar total = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const Scalar max_logit = logits.row(r).maxCoeff();
        const Scalar lse =
            std::log((logits.row(r).array() - max_logit).exp().sum()) + max_logit;
        total += lse - logits(r, targets[static_cast<size_t>(r)]);
    }
    return total / static_cast<Scalar>(logits.rows());
}

// dlogits of mean cross-entropy: (softmax - onehot) / rows.
template <typename Scalar>
Mat<Scalar> cross_entropy_dlogits(const Mat<Scalar>& logits, std::span<const int> targets) {
    Mat<Scalar> d(logits.rows(), logits.cols());
    const Scalar inv_rows = Scalar(1) / static_cast<Scalar>(logits.rows());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const Scalar max_logit = logits.row(r).maxCoeff();
        const auto shifted = (logits.row(r).array() - max_logit).exp();
        d.row(r) = (shifted / shifted.sum()).matrix() * inv_rows;
        d(r, targets[static_cast<size_t>(r)]) -= inv_rows;
    }
    return d;
}

// Exact reverse-mode gradients for forward(). The tied embedding accumulates
// both its lookup and output-projection contributions.
template <typename Scalar>
void backward(const Parameters<Scalar>& params, const ModelConfig& cfg,
              const ActivationTape<Scalar>& tape, const Mat<Scalar>& dlogits,
              Parameters<Scalar>& grads) {
    const Eigen::Index seq = static_cast<Eigen::Index>(tape.ids.size());
    const int64_t dh = cfg.head_dim();
    const int64_t group = cfg.n_heads / cfg.n_kv_heads;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

    // logits = final_normed * E^T
    grads.token_embedding += dlogits.transpose() * tape.final_normed;
    const Mat<Scalar> d_final_normed = dlogits * params.token_embedding;

    Mat<Scalar> dx;
    rms_norm_backward_rows<Scalar>(tape.x_final, params.final_norm, tape.final_inv_rms,
                                   d_final_normed, dx, grads.final_norm);

    for (size_t li = params.layers.size(); li-- > 0;) {
        const auto& l = params.layers[li];
        const auto& t = tape.layers[li];
        auto& g = grads.layers[li];

        // FFN: x_out = x_mid + (silu(gate) .* up) * w_down
        const Mat<Scalar> sig =
            t.gate_pre.unaryExpr([](Scalar z) { return Scalar(1) / (Scalar(1) + std::exp(-z)); });
        const Mat<Scalar> act_s = t.gate_pre.cwiseProduct(sig);  // silu(gate_pre)
        const Mat<Scalar> act = act_s.cwiseProduct(t.up);

        const Mat<Scalar> d_act = dx * l.w_down.transpose();
        g.w_down += act.transpose() * dx;
        const Mat<Scalar> d_act_s = d_act.cwiseProduct(t.up);
        const Mat<Scalar> d_up = d_act.cwiseProduct(act_s);
        // silu'(z) = sigmoid(z) * (1 + z * (1 - sigmoid(z)))
        const Mat<Scalar> d_gate_pre = d_act_s.cwiseProduct(
            sig.cwiseProduct(Mat<Scalar>::Ones(sig.rows(), sig.cols()) +
                             t.gate_pre.cwiseProduct(
                                 Mat<Scalar>::Ones(sig.rows(), sig.cols()) - sig)));
        const Mat<Scalar> d_ffn_normed =
            d_gate_pre * l.w_gate.transpose() + d_up * l.w_up.transpose();
        g.w_gate += t.ffn_normed.transpose() * d_gate_pre;
        g.w_up += t.ffn_normed.transpose() * d_up;

        Mat<Scalar> d_x_mid_from_norm;
        rms_norm_backward_rows<Scalar>(t.x_mid, l.ffn_norm, t.ffn_inv_rms, d_ffn_normed,
                                       d_x_mid_from_norm, g.ffn_norm);
        const Mat<Scalar> d_x_mid = dx + d_x_mid_from_norm;

        // Attention: x_mid = x_in + attn_ctx * wo
        const Mat<Scalar> d_ctx = d_x_mid * l.wo.transpose();
        g.wo += t.attn_ctx.transpose() * d_x_mid;

        Mat<Scalar> dq = Mat<Scalar>::Zero(seq, cfg.hidden);
        Mat<Scalar> dk = Mat<Scalar>::Zero(seq, cfg.kv_dim());
        Mat<Scalar> dv = Mat<Scalar>::Zero(seq, cfg.kv_dim());
        for (int64_t head = 0; head < cfg.n_heads; ++head) {
            const int64_t kv_head = head / group;
            const Mat<Scalar>& probs = t.probs[static_cast<size_t>(head)];
            const Mat<Scalar> qh = t.q.middleCols(head * dh, dh);
            const Mat<Scalar> kh = t.k.middleCols(kv_head * dh, dh);
            const Mat<Scalar> vh = t.v.middleCols(kv_head * dh, dh);
            const Mat<Scalar> d_ctx_h = d_ctx.middleCols(head * dh, dh);

            const Mat<Scalar> d_probs = d_ctx_h * vh.transpose();
            dv.middleCols(kv_head * dh, dh) += probs.transpose() * d_ctx_h;

            // softmax backward; masked entries have probs == 0 and drop out
            Mat<Scalar> d_scores(seq, seq);
            for (Eigen::Index r = 0; r < seq; ++r) {
                const Scalar dot = d_probs.row(r).cwiseProduct(probs.row(r)).sum();
                d_scores.row(r) = probs.row(r).cwiseProduct(
                    d_probs.row(r) - Mat<Scalar>::Constant(1, seq, dot));
            }
            dq.middleCols(head * dh, dh) += d_scores * kh * scale;
            dk.middleCols(kv_head * dh, dh) += d_scores.transpose() * qh * scale;
        }
        rope_apply<Scalar>(dq, cfg.n_heads, cfg.rope_base, -1);
        rope_apply<Scalar>(dk, cfg.n_kv_heads, cfg.rope_base, -1);

        const Mat<Scalar> d_attn_normed =
            dq * l.wq.transpose() + dk * l.wk.transpose() + dv * l.wv.transpose();
        g.wq += t.attn_normed.transpose() * dq;
        g.wk += t.attn_normed.transpose() * dk;
        g.wv += t.attn_normed.transpose() * dv;

        Mat<Scalar> d_x_in_from_norm;
        rms_norm_backward_rows<Scalar>(t.x_in, l.attn_norm, t.attn_inv_rms, d_attn_normed,
                                       d_x_in_from_norm, g.attn_norm);
        dx = d_x_mid + d_x_in_from_norm;
    }

    for (Eigen::Index t = 0; t < seq; ++t) {
        grads.token_embedding.row(tape.ids[static_cast<size_t>(t)]) += dx.row(t);
    }
}

// forward + cross-entropy + backward in one call; gradients accumulate.
template <typename Scalar>
Scalar loss_and_gradients(const Parameters<Scalar>& params, const ModelConfig& cfg,
                          std::span<const int> ids, std::span<const int> targets,
                          Parameters<Scalar>& grads) {
    ActivationTape<Scalar> tape;
    const Mat<Scalar> logits = forward<Scalar>(params, cfg, ids, &tape);
    const Scalar loss = cross_entropy<Scalar>(logits, targets);
    const Mat<Scalar> dlogits = cross_entropy_dlogits<Scalar>(logits, targets);
    backward<Scalar>(params, cfg, tape, dlogits, grads);
    return loss;
}

}  // namespace tulpar::model
