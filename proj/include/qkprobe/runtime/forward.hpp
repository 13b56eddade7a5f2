#pragma once

//! Single instrumented forward pass.
//!
//! The pass runs embeddings, then per layer {norm, multi-head causal
//! self-attention, norm, feed-forward}, then the final norm and output
//! projection.  While attention projections are being computed it captures,
//! for every (layer, head), the query vectors at the two option-token
//! positions and the key vector at the statement end-of-line position, in
//! both the pre-rotation and post-rotation variants, plus the full logit
//! vector at the final position.  One pass therefore serves every head at
//! once.
//!
//! Numerics: 32-bit floats end to end, softmax with max subtraction,
//! attention scaled by 1/sqrt(head_dim), strictly causal masking.  The
//! computation is single-threaded and fixed-order, so identical weights
//! and layout give bitwise-identical captures.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qkprobe/common.hpp"
#include "qkprobe/runtime/model.hpp"
#include "qkprobe/runtime/spec.hpp"
#include "qkprobe/runtime/tokenizer.hpp"

namespace qkprobe::runtime {

struct HeadVectors {
    std::vector<float> q_a0, q_a1, k_s;
};

struct QKCapture {
    std::string sample_id;
    int n_layers = 0, n_heads = 0, head_dim = 0;
    std::vector<HeadVectors> pre, post;  // indexed layer * n_heads + head
    std::vector<float> logits_final;     // full vocabulary; only the two
                                         // option logits survive file round trips
    std::array<int, 2> option_tokens{0, 0};
    std::array<float, 2> option_logits{0.0f, 0.0f};
    int pos_a0 = 0, pos_a1 = 0, pos_s = 0, pos_final = 0;

    const HeadVectors& at(Variant v, const HeadId& h) const {
        if (h.layer < 0 || h.layer >= n_layers || h.head < 0 || h.head >= n_heads)
            throw HeadOutOfRange("head " + to_string(h) + " outside capture grid of " +
                                 std::to_string(n_layers) + "x" + std::to_string(n_heads));
        return (v == Variant::PrePositional ? pre : post)[h.layer * n_heads + h.head];
    }
};

/// In-place rotary rotation of one head_dim-sized vector at a position.
/// Adjacent pairs (2i, 2i+1) rotate by pos * theta^(-2i/head_dim).  The
/// rotation itself runs in double so the relative-position identity holds
/// to 1e-6 even though storage is float.
inline void apply_rope(float* v, int head_dim, int pos, double theta) {
    for (int i = 0; i < head_dim / 2; ++i) {
        double angle = pos * std::pow(theta, -2.0 * i / head_dim);
        double c = std::cos(angle), s = std::sin(angle);
        double a = v[2 * i], b = v[2 * i + 1];
        v[2 * i] = static_cast<float>(a * c - b * s);
        v[2 * i + 1] = static_cast<float>(a * s + b * c);
    }
}

namespace detail {

inline void matvec(const Tensor& w, const float* x, float* y) {
    int rows = w.shape[0], cols = w.shape[1];
    for (int r = 0; r < rows; ++r) {
        float acc = 0.0f;
        const float* wr = w.data.data() + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

inline void norm_row(const ModelSpec& spec, const Tensor& weight, const Tensor* bias,
                     const float* x, float* y) {
    const float eps = 1e-5f;
    int d = spec.d_model;
    if (spec.norm == Norm::LayerNorm) {
        float mean = 0.0f;
        for (int i = 0; i < d; ++i) mean += x[i];
        mean /= d;
        float var = 0.0f;
        for (int i = 0; i < d; ++i) var += (x[i] - mean) * (x[i] - mean);
        var /= d;
        float inv = 1.0f / std::sqrt(var + eps);
        for (int i = 0; i < d; ++i)
            y[i] = (x[i] - mean) * inv * weight.data[i] + (bias ? bias->data[i] : 0.0f);
    } else {
        float ms = 0.0f;
        for (int i = 0; i < d; ++i) ms += x[i] * x[i];
        float inv = 1.0f / std::sqrt(ms / d + eps);
        for (int i = 0; i < d; ++i) y[i] = x[i] * inv * weight.data[i];
    }
}

inline float gelu(float x) { return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752f)); }

inline float silu(float x) { return x / (1.0f + std::exp(-x)); }

}  // namespace detail

inline QKCapture forward_capture(const Model& m, const PromptLayout& layout) {
    const ModelSpec& s = m.spec;
    const int T = static_cast<int>(layout.token_ids.size());
    if (T < 1) throw FormatError("empty prompt layout");
    if (T > s.context_limit)
        throw SequenceTooLong("sequence of " + std::to_string(T) + " tokens exceeds limit " +
                              std::to_string(s.context_limit));
    for (int id : layout.token_ids)
        if (id < 0 || id >= s.vocab_size) throw FormatError("token id outside vocabulary");

    const int d = s.d_model, hd = s.head_dim, nh = s.n_heads, nkv = s.n_kv_heads;
    const int qdim = nh * hd, kvdim = nkv * hd;

    QKCapture cap;
    cap.n_layers = s.n_layers;
    cap.n_heads = nh;
    cap.head_dim = hd;
    cap.pre.resize(static_cast<size_t>(s.n_layers) * nh);
    cap.post.resize(static_cast<size_t>(s.n_layers) * nh);
    cap.pos_a0 = layout.pos_a0;
    cap.pos_a1 = layout.pos_a1;
    cap.pos_s = layout.pos_s;
    cap.pos_final = layout.pos_final;

    // residual stream, T x d
    std::vector<float> x(static_cast<size_t>(T) * d);
    const Tensor& emb = m.tensor("tok_embeddings.weight");
    for (int t = 0; t < T; ++t)
        std::copy_n(emb.data.data() + static_cast<size_t>(layout.token_ids[t]) * d, d,
                    x.data() + static_cast<size_t>(t) * d);

    std::vector<float> xn(static_cast<size_t>(T) * d);
    std::vector<float> q(static_cast<size_t>(T) * qdim);
    std::vector<float> k(static_cast<size_t>(T) * kvdim);
    std::vector<float> v(static_cast<size_t>(T) * kvdim);
    std::vector<float> concat(static_cast<size_t>(T) * qdim);
    std::vector<float> weights(T);
    std::vector<float> row(d);
    std::vector<float> ff1(s.d_ff), ff3(s.d_ff);

    auto capture_heads = [&](std::vector<HeadVectors>& grid, int layer) {
        for (int h = 0; h < nh; ++h) {
            HeadVectors& hv = grid[static_cast<size_t>(layer) * nh + h];
            const float* q0 = q.data() + static_cast<size_t>(layout.pos_a0) * qdim + h * hd;
            const float* q1 = q.data() + static_cast<size_t>(layout.pos_a1) * qdim + h * hd;
            const float* ks =
                k.data() + static_cast<size_t>(layout.pos_s) * kvdim + s.kv_head_of(h) * hd;
            hv.q_a0.assign(q0, q0 + hd);
            hv.q_a1.assign(q1, q1 + hd);
            hv.k_s.assign(ks, ks + hd);
        }
    };

    for (int l = 0; l < s.n_layers; ++l) {
        std::string p = "layers." + std::to_string(l) + ".";
        const Tensor& attn_norm_w = m.tensor(p + "attn_norm.weight");
        const Tensor* attn_norm_b =
            s.norm == Norm::LayerNorm ? &m.tensor(p + "attn_norm.bias") : nullptr;
        const Tensor& wq = m.tensor(p + "attn.wq.weight");
        const Tensor& wk = m.tensor(p + "attn.wk.weight");
        const Tensor& wv = m.tensor(p + "attn.wv.weight");
        const Tensor& wo = m.tensor(p + "attn.wo.weight");

        for (int t = 0; t < T; ++t) {
            const float* xt = x.data() + static_cast<size_t>(t) * d;
            float* xnt = xn.data() + static_cast<size_t>(t) * d;
            detail::norm_row(s, attn_norm_w, attn_norm_b, xt, xnt);
            detail::matvec(wq, xnt, q.data() + static_cast<size_t>(t) * qdim);
            detail::matvec(wk, xnt, k.data() + static_cast<size_t>(t) * kvdim);
            detail::matvec(wv, xnt, v.data() + static_cast<size_t>(t) * kvdim);
        }

        capture_heads(cap.pre, l);
        if (s.positional == Positional::Rope) {
            for (int t = 0; t < T; ++t) {
                for (int h = 0; h < nh; ++h)
                    apply_rope(q.data() + static_cast<size_t>(t) * qdim + h * hd, hd, t,
                               s.rope_theta);
                for (int g = 0; g < nkv; ++g)
                    apply_rope(k.data() + static_cast<size_t>(t) * kvdim + g * hd, hd, t,
                               s.rope_theta);
            }
        }
        capture_heads(cap.post, l);

        const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
        for (int h = 0; h < nh; ++h) {
            const int g = s.kv_head_of(h);
            for (int i = 0; i < T; ++i) {
                const float* qi = q.data() + static_cast<size_t>(i) * qdim + h * hd;
                float maxs = -std::numeric_limits<float>::infinity();
                for (int j = 0; j <= i; ++j) {
                    const float* kj = k.data() + static_cast<size_t>(j) * kvdim + g * hd;
                    float acc = 0.0f;
                    for (int c = 0; c < hd; ++c) acc += qi[c] * kj[c];
                    weights[j] = acc * scale;
                    if (weights[j] > maxs) maxs = weights[j];
                }
                float denom = 0.0f;
                for (int j = 0; j <= i; ++j) {
                    weights[j] = std::exp(weights[j] - maxs);
                    denom += weights[j];
                }
                float* out = concat.data() + static_cast<size_t>(i) * qdim + h * hd;
                for (int c = 0; c < hd; ++c) out[c] = 0.0f;
                for (int j = 0; j <= i; ++j) {
                    float w = weights[j] / denom;
                    const float* vj = v.data() + static_cast<size_t>(j) * kvdim + g * hd;
                    for (int c = 0; c < hd; ++c) out[c] += w * vj[c];
                }
            }
        }
        for (int t = 0; t < T; ++t) {
            detail::matvec(wo, concat.data() + static_cast<size_t>(t) * qdim, row.data());
            float* xt = x.data() + static_cast<size_t>(t) * d;
            for (int c = 0; c < d; ++c) xt[c] += row[c];
        }

        const Tensor& ffn_norm_w = m.tensor(p + "ffn_norm.weight");
        const Tensor* ffn_norm_b =
            s.norm == Norm::LayerNorm ? &m.tensor(p + "ffn_norm.bias") : nullptr;
        const Tensor& w1 = m.tensor(p + "ffn.w1.weight");
        const Tensor& w2 = m.tensor(p + "ffn.w2.weight");
        for (int t = 0; t < T; ++t) {
            float* xt = x.data() + static_cast<size_t>(t) * d;
            detail::norm_row(s, ffn_norm_w, ffn_norm_b, xt, xn.data());
            detail::matvec(w1, xn.data(), ff1.data());
            if (s.ffn == Ffn::Gated) {
                detail::matvec(m.tensor(p + "ffn.w3.weight"), xn.data(), ff3.data());
                for (int c = 0; c < s.d_ff; ++c) ff1[c] = detail::silu(ff1[c]) * ff3[c];
            } else {
                for (int c = 0; c < s.d_ff; ++c) ff1[c] = detail::gelu(ff1[c]);
            }
            detail::matvec(w2, ff1.data(), row.data());
            for (int c = 0; c < d; ++c) xt[c] += row[c];
        }
    }

    const Tensor& final_norm_w = m.tensor("final_norm.weight");
    const Tensor* final_norm_b =
        s.norm == Norm::LayerNorm ? &m.tensor("final_norm.bias") : nullptr;
    detail::norm_row(s, final_norm_w, final_norm_b,
                     x.data() + static_cast<size_t>(layout.pos_final) * d, row.data());
    cap.logits_final.resize(s.vocab_size);
    detail::matvec(m.output_matrix(), row.data(), cap.logits_final.data());

    cap.option_tokens = {layout.token_ids[layout.pos_a0], layout.token_ids[layout.pos_a1]};
    cap.option_logits = {cap.logits_final[cap.option_tokens[0]],
                         cap.logits_final[cap.option_tokens[1]]};
    return cap;
}

}  // namespace qkprobe::runtime
