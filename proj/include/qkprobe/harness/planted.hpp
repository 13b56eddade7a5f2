#pragma once

//! Hand-constructed model in which one chosen head provably answers.
//!
//! Two embedding channels are reserved.  Channel 0 carries the gold
//! answer: in planted runs the statement end-of-line token is swapped for
//! <eol+> (gold a0) or <eol-> (gold a1), whose embeddings hold +1/-1
//! there.  Channel 1 marks the answer options: +1 on the a0 word, -1 on
//! the a1 word.  The planted head's W_Q reads channel 1 and its W_K
//! reads channel 0, so the score difference s0 - s1 is a single product
//! whose sign equals the marker sign: pre-rotation decisions are exact.
//!
//! Everything else is blinded.  All other projections have the two
//! reserved columns zeroed, attention and feed-forward outputs never
//! write channels 0/1, the planted head's W_V is zero so its (marker-
//! dependent) attention pattern moves nothing, and the two marker tokens
//! share identical content channels.  The unembedding rows of the two
//! option words are identical, so the baseline's option logits tie on
//! every sample and resolve to a0: exactly chance on balanced data.
//! Remaining weights are seeded noise over the content channels, which
//! keeps the non-planted heads busy without access to the answer.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "qkprobe/common.hpp"
#include "qkprobe/runtime/model.hpp"
#include "qkprobe/runtime/tokenizer.hpp"

namespace qkprobe::harness {

using runtime::HeadId;
using runtime::Model;
using runtime::ModelSpec;

namespace detail {

inline int vocab_index(const std::vector<std::string>& vocabulary, const std::string& token) {
    for (size_t i = 0; i < vocabulary.size(); ++i)
        if (vocabulary[i] == token) return static_cast<int>(i);
    throw ConfigError("planted model vocabulary lacks required token: " + token);
}

}  // namespace detail

inline Model build_planted_model(const ModelSpec& spec, const std::vector<std::string>& vocabulary,
                                 const HeadId& planted, const std::array<std::string, 2>& options,
                                 uint64_t seed) {
    if (spec.n_layers > 4 || spec.n_heads > 8)
        throw SpecTooLarge("planted construction is limited to 4 layers and 8 heads, got " +
                           std::to_string(spec.n_layers) + " layers and " +
                           std::to_string(spec.n_heads) + " heads");
    if (!spec.head_in_range(planted))
        throw HeadOutOfRange("planted head " + runtime::to_string(planted) +
                             " outside the model grid");
    if (spec.norm != runtime::Norm::RmsNorm)
        throw ConfigError("planted construction needs rmsnorm: layernorm's mean subtraction "
                          "leaks the marker channel into every other channel");
    if (spec.n_kv_heads != spec.n_heads)
        throw ConfigError("planted construction needs one key head per query head: a shared "
                          "key group would hand the marker to the planted head's group mates");
    if (spec.tied_embeddings)
        throw ConfigError("planted construction needs an untied unembedding so the two option "
                          "rows can be made identical");
    if (spec.d_model < 3)
        throw ConfigError("planted construction needs at least one content channel");

    Model m = runtime::make_model(spec, vocabulary);
    const int d = spec.d_model, hd = spec.head_dim;
    const int id_a0 = detail::vocab_index(vocabulary, options[0]);
    const int id_a1 = detail::vocab_index(vocabulary, options[1]);
    const int id_plus = detail::vocab_index(vocabulary, runtime::kMarkerA0Token);
    const int id_minus = detail::vocab_index(vocabulary, runtime::kMarkerA1Token);
    if (id_a0 == id_a1) throw ConfigError("the two option words must be distinct tokens");

    Rng rng(mix_seed(seed, 0x706c616e74));  // independent of dataset streams

    // embeddings: noise on content channels only, then the reserved signals
    runtime::Tensor& emb = m.tensors.at("tok_embeddings.weight");
    for (int t = 0; t < spec.vocab_size; ++t)
        for (int c = 2; c < d; ++c)
            emb.data[static_cast<size_t>(t) * d + c] = static_cast<float>(rng.normal(0.0, 0.5));
    for (int c = 2; c < d; ++c)  // markers must be indistinguishable off-channel
        emb.data[static_cast<size_t>(id_minus) * d + c] =
            emb.data[static_cast<size_t>(id_plus) * d + c];
    emb.data[static_cast<size_t>(id_plus) * d + 0] = 1.0f;
    emb.data[static_cast<size_t>(id_minus) * d + 0] = -1.0f;
    emb.data[static_cast<size_t>(id_a0) * d + 1] = 1.0f;
    emb.data[static_cast<size_t>(id_a1) * d + 1] = -1.0f;

    auto fill_blinded = [&](runtime::Tensor& w, double stddev) {
        // random over content columns; reserved columns 0/1 stay zero
        for (int r = 0; r < w.shape[0]; ++r)
            for (int c = 2; c < w.shape[1]; ++c)
                w.data[static_cast<size_t>(r) * w.shape[1] + c] =
                    static_cast<float>(rng.normal(0.0, stddev));
    };
    auto fill_rows_off_reserved = [&](runtime::Tensor& w, double stddev) {
        // random everywhere except output rows 0/1, which stay zero so the
        // residual stream never writes the reserved channels
        for (int r = 2; r < w.shape[0]; ++r)
            for (int c = 0; c < w.shape[1]; ++c)
                w.data[static_cast<size_t>(r) * w.shape[1] + c] =
                    static_cast<float>(rng.normal(0.0, stddev));
    };

    const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));
    for (int l = 0; l < spec.n_layers; ++l) {
        std::string p = "layers." + std::to_string(l) + ".";
        for (const char* name : {"attn_norm.weight", "ffn_norm.weight"}) {
            runtime::Tensor& w = m.tensors.at(p + name);
            std::fill(w.data.begin(), w.data.end(), 1.0f);
        }
        runtime::Tensor& wq = m.tensors.at(p + "attn.wq.weight");
        runtime::Tensor& wk = m.tensors.at(p + "attn.wk.weight");
        runtime::Tensor& wv = m.tensors.at(p + "attn.wv.weight");
        fill_blinded(wq, proj_std);
        fill_blinded(wk, proj_std);
        fill_blinded(wv, proj_std);
        fill_rows_off_reserved(m.tensors.at(p + "attn.wo.weight"), proj_std);
        fill_blinded(m.tensors.at(p + "ffn.w1.weight"), proj_std);
        if (spec.ffn == runtime::Ffn::Gated) fill_blinded(m.tensors.at(p + "ffn.w3.weight"), proj_std);
        fill_rows_off_reserved(m.tensors.at(p + "ffn.w2.weight"),
                               1.0 / std::sqrt(static_cast<double>(spec.d_ff)));

        if (l == planted.layer) {
            // the planted head's slices: query reads the option channel,
            // key reads the marker channel, value moves nothing
            for (int r = 0; r < hd; ++r)
                for (int c = 0; c < d; ++c) {
                    size_t row = static_cast<size_t>(planted.head * hd + r);
                    wq.data[row * d + c] = 0.0f;
                    wk.data[row * d + c] = 0.0f;
                    wv.data[row * d + c] = 0.0f;
                }
            wq.data[static_cast<size_t>(planted.head * hd) * d + 1] = 1.0f;
            wk.data[static_cast<size_t>(planted.head * hd) * d + 0] = 1.0f;
        }
    }

    runtime::Tensor& fn = m.tensors.at("final_norm.weight");
    std::fill(fn.data.begin(), fn.data.end(), 1.0f);

    runtime::Tensor& out = m.tensors.at("output.weight");
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(rng.normal(0.0, proj_std));
    for (int c = 0; c < d; ++c)  // identical option rows: the baseline always ties
        out.data[static_cast<size_t>(id_a1) * d + c] =
            out.data[static_cast<size_t>(id_a0) * d + c];

    return m;
}

}  // namespace qkprobe::harness
