#pragma once

// Naive double-precision reference for the instrumented forward pass.
// Written independently of the production code on purpose: plain nested
// loops over 2-D double matrices, no shared helpers, no in-place tricks.
// Tests compare its captures, attention patterns, and logits against the
// float runtime within documented tolerances.

#include <cmath>
#include <vector>

#include "qkprobe/runtime/model.hpp"
#include "qkprobe/runtime/tokenizer.hpp"

namespace refimpl {

using Mat = std::vector<std::vector<double>>;

struct RefResult {
    // indexed [layer][head]; each entry is a head_dim vector
    std::vector<std::vector<std::vector<double>>> q_a0_pre, q_a1_pre, k_s_pre;
    std::vector<std::vector<std::vector<double>>> q_a0_post, q_a1_post, k_s_post;
    // indexed [layer][head]; row i holds the softmaxed attention from
    // position i to every position (zero where masked)
    std::vector<std::vector<Mat>> attention;
    std::vector<double> logits;  // at pos_final, full vocabulary
};

inline std::vector<double> ref_norm(const qkprobe::runtime::Model& m,
                                    const std::vector<double>& x, const std::string& wname,
                                    const std::string& bname) {
    const auto& spec = m.spec;
    const auto& w = m.tensor(wname);
    size_t d = x.size();
    std::vector<double> y(d);
    if (spec.norm == qkprobe::runtime::Norm::LayerNorm) {
        double mean = 0;
        for (double v : x) mean += v;
        mean /= d;
        double var = 0;
        for (double v : x) var += (v - mean) * (v - mean);
        var /= d;
        const auto& b = m.tensor(bname);
        for (size_t i = 0; i < d; ++i)
            y[i] = (x[i] - mean) / std::sqrt(var + 1e-5) * w.data[i] + b.data[i];
    } else {
        double ms = 0;
        for (double v : x) ms += v * v;
        ms /= d;
        for (size_t i = 0; i < d; ++i) y[i] = x[i] / std::sqrt(ms + 1e-5) * w.data[i];
    }
    return y;
}

inline std::vector<double> ref_matvec(const qkprobe::runtime::Tensor& w,
                                      const std::vector<double>& x) {
    std::vector<double> y(w.shape[0], 0.0);
    for (int r = 0; r < w.shape[0]; ++r)
        for (int c = 0; c < w.shape[1]; ++c)
            y[r] += static_cast<double>(w.data[static_cast<size_t>(r) * w.shape[1] + c]) * x[c];
    return y;
}

inline std::vector<double> ref_rotate(const std::vector<double>& v, int pos, double theta) {
    std::vector<double> out(v.size());
    for (size_t i = 0; i + 1 < v.size(); i += 2) {
        double angle = pos * std::pow(theta, -static_cast<double>(i) / v.size());
        out[i] = v[i] * std::cos(angle) - v[i + 1] * std::sin(angle);
        out[i + 1] = v[i] * std::sin(angle) + v[i + 1] * std::cos(angle);
    }
    return out;
}

inline RefResult reference_forward(const qkprobe::runtime::Model& m,
                                   const qkprobe::runtime::PromptLayout& layout) {
    const auto& spec = m.spec;
    const int T = static_cast<int>(layout.token_ids.size());
    const int nh = spec.n_heads, nkv = spec.n_kv_heads, hd = spec.head_dim;
    const int group = nh / nkv;
    const bool rope = spec.positional == qkprobe::runtime::Positional::Rope;

    RefResult res;
    auto grid3 = [&] {
        return std::vector<std::vector<std::vector<double>>>(
            spec.n_layers, std::vector<std::vector<double>>(nh));
    };
    res.q_a0_pre = grid3();
    res.q_a1_pre = grid3();
    res.k_s_pre = grid3();
    res.q_a0_post = grid3();
    res.q_a1_post = grid3();
    res.k_s_post = grid3();
    res.attention.assign(spec.n_layers, std::vector<Mat>(nh));

    const auto& emb = m.tensor("tok_embeddings.weight");
    Mat x(T, std::vector<double>(spec.d_model));
    for (int t = 0; t < T; ++t)
        for (int c = 0; c < spec.d_model; ++c)
            x[t][c] = emb.data[static_cast<size_t>(layout.token_ids[t]) * spec.d_model + c];

    for (int l = 0; l < spec.n_layers; ++l) {
        std::string p = "layers." + std::to_string(l) + ".";

        // projections per position, split by head up front
        Mat qrows(T), krows(T), vrows(T);
        for (int t = 0; t < T; ++t) {
            auto xn = ref_norm(m, x[t], p + "attn_norm.weight", p + "attn_norm.bias");
            qrows[t] = ref_matvec(m.tensor(p + "attn.wq.weight"), xn);
            krows[t] = ref_matvec(m.tensor(p + "attn.wk.weight"), xn);
            vrows[t] = ref_matvec(m.tensor(p + "attn.wv.weight"), xn);
        }
        auto slice = [&](const std::vector<double>& r, int head) {
            return std::vector<double>(r.begin() + head * hd, r.begin() + (head + 1) * hd);
        };

        for (int h = 0; h < nh; ++h) {
            res.q_a0_pre[l][h] = slice(qrows[layout.pos_a0], h);
            res.q_a1_pre[l][h] = slice(qrows[layout.pos_a1], h);
            res.k_s_pre[l][h] = slice(krows[layout.pos_s], h / group);
            res.q_a0_post[l][h] =
                rope ? ref_rotate(res.q_a0_pre[l][h], layout.pos_a0, spec.rope_theta)
                     : res.q_a0_pre[l][h];
            res.q_a1_post[l][h] =
                rope ? ref_rotate(res.q_a1_pre[l][h], layout.pos_a1, spec.rope_theta)
                     : res.q_a1_pre[l][h];
            res.k_s_post[l][h] = rope ? ref_rotate(res.k_s_pre[l][h], layout.pos_s, spec.rope_theta)
                                      : res.k_s_pre[l][h];
        }

        // attention, one head at a time
        Mat attn_out(T, std::vector<double>(nh * hd, 0.0));
        for (int h = 0; h < nh; ++h) {
            Mat att(T, std::vector<double>(T, 0.0));
            for (int i = 0; i < T; ++i) {
                auto qi = slice(qrows[i], h);
                if (rope) qi = ref_rotate(qi, i, spec.rope_theta);
                std::vector<double> scores(i + 1);
                double mx = -1e300;
                for (int j = 0; j <= i; ++j) {
                    auto kj = slice(krows[j], h / group);
                    if (rope) kj = ref_rotate(kj, j, spec.rope_theta);
                    double dot = 0;
                    for (int c = 0; c < hd; ++c) dot += qi[c] * kj[c];
                    scores[j] = dot / std::sqrt(static_cast<double>(hd));
                    mx = std::max(mx, scores[j]);
                }
                double z = 0;
                for (int j = 0; j <= i; ++j) z += std::exp(scores[j] - mx);
                for (int j = 0; j <= i; ++j) {
                    att[i][j] = std::exp(scores[j] - mx) / z;
                    auto vj = slice(vrows[j], h / group);
                    for (int c = 0; c < hd; ++c) attn_out[i][h * hd + c] += att[i][j] * vj[c];
                }
            }
            res.attention[l][h] = std::move(att);
        }
        for (int t = 0; t < T; ++t) {
            auto proj = ref_matvec(m.tensor(p + "attn.wo.weight"), attn_out[t]);
            for (int c = 0; c < spec.d_model; ++c) x[t][c] += proj[c];
        }

        for (int t = 0; t < T; ++t) {
            auto xn = ref_norm(m, x[t], p + "ffn_norm.weight", p + "ffn_norm.bias");
            auto h1 = ref_matvec(m.tensor(p + "ffn.w1.weight"), xn);
            if (spec.ffn == qkprobe::runtime::Ffn::Gated) {
                auto h3 = ref_matvec(m.tensor(p + "ffn.w3.weight"), xn);
                for (size_t c = 0; c < h1.size(); ++c)
                    h1[c] = h1[c] / (1.0 + std::exp(-h1[c])) * h3[c];
            } else {
                for (auto& v : h1) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
            }
            auto h2 = ref_matvec(m.tensor(p + "ffn.w2.weight"), h1);
            for (int c = 0; c < spec.d_model; ++c) x[t][c] += h2[c];
        }
    }

    auto hn = ref_norm(m, x[layout.pos_final], "final_norm.weight", "final_norm.bias");
    res.logits = ref_matvec(m.output_matrix(), hn);
    return res;
}

}  // namespace refimpl
