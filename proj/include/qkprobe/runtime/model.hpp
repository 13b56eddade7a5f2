#pragma once

//! Weight storage and the QKPM single-file container.
//!
//! A .qkpm file has the following structure:
//!   - line 1: magic "QKPM1"
//!   - line 2: decimal byte length of the manifest JSON
//!   - the manifest JSON, followed by one newline
//!   - the raw tensor blob: all tensors concatenated as little-endian
//!     32-bit floats, in the order listed by the manifest
//!
//! The manifest records the ModelSpec, the tokenizer vocabulary, a tensor
//! index ({name, shape, offset, bytes} per entry), and an FNV-1a hash of
//! the blob.  Loading verifies the hash and every shape against the spec,
//! so a corrupt or inconsistent file fails loudly instead of mis-scoring.

#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkprobe/common.hpp"
#include "qkprobe/runtime/spec.hpp"

namespace qkprobe::runtime {

struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    size_t numel() const {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        return n;
    }
};

struct Model {
    ModelSpec spec;
    std::vector<std::string> vocabulary;
    std::map<std::string, Tensor> tensors;  // ordered: blob layout is the key order

    const Tensor& tensor(const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw ShapeMismatch("missing tensor: " + name);
        return it->second;
    }

    /// Unembedding matrix; the token embedding doubles as it when tied.
    const Tensor& output_matrix() const {
        return tensor(spec.tied_embeddings ? "tok_embeddings.weight" : "output.weight");
    }
};

/// Every tensor the spec calls for, with its expected shape.  Norm layers
/// carry biases only in the layernorm configuration; the gate projection
/// exists only for the gated feed-forward form.
inline std::vector<std::pair<std::string, std::vector<int>>> expected_tensors(const ModelSpec& s) {
    std::vector<std::pair<std::string, std::vector<int>>> out;
    bool biases = s.norm == Norm::LayerNorm;
    out.push_back({"tok_embeddings.weight", {s.vocab_size, s.d_model}});
    for (int l = 0; l < s.n_layers; ++l) {
        std::string p = "layers." + std::to_string(l) + ".";
        out.push_back({p + "attn_norm.weight", {s.d_model}});
        if (biases) out.push_back({p + "attn_norm.bias", {s.d_model}});
        out.push_back({p + "attn.wq.weight", {s.n_heads * s.head_dim, s.d_model}});
        out.push_back({p + "attn.wk.weight", {s.n_kv_heads * s.head_dim, s.d_model}});
        out.push_back({p + "attn.wv.weight", {s.n_kv_heads * s.head_dim, s.d_model}});
        out.push_back({p + "attn.wo.weight", {s.d_model, s.n_heads * s.head_dim}});
        out.push_back({p + "ffn_norm.weight", {s.d_model}});
        if (biases) out.push_back({p + "ffn_norm.bias", {s.d_model}});
        out.push_back({p + "ffn.w1.weight", {s.d_ff, s.d_model}});
        out.push_back({p + "ffn.w2.weight", {s.d_model, s.d_ff}});
        if (s.ffn == Ffn::Gated) out.push_back({p + "ffn.w3.weight", {s.d_ff, s.d_model}});
    }
    out.push_back({"final_norm.weight", {s.d_model}});
    if (biases) out.push_back({"final_norm.bias", {s.d_model}});
    if (!s.tied_embeddings) out.push_back({"output.weight", {s.vocab_size, s.d_model}});
    return out;
}

/// Model with all expected tensors allocated and zeroed.
inline Model make_model(const ModelSpec& spec, std::vector<std::string> vocabulary) {
    spec.validate();
    if (static_cast<int>(vocabulary.size()) != spec.vocab_size)
        throw ShapeMismatch("vocabulary size does not match spec.vocab_size");
    Model m;
    m.spec = spec;
    m.vocabulary = std::move(vocabulary);
    for (auto& [name, shape] : expected_tensors(spec)) {
        Tensor t;
        t.shape = shape;
        t.data.assign(t.numel(), 0.0f);
        m.tensors.emplace(name, std::move(t));
    }
    return m;
}

/// Gaussian-filled toy model.  Projections are scaled 1/sqrt(d_model) so
/// activations stay O(1) through the stack; norm weights sit near one and
/// biases near zero so both norm kinds are exercised away from identity.
inline Model random_model(const ModelSpec& spec, std::vector<std::string> vocabulary,
                          uint64_t seed) {
    Model m = make_model(spec, std::move(vocabulary));
    Rng rng(mix_seed(seed, 0x6d6f64656c));
    double proj = 1.0 / std::sqrt(static_cast<double>(spec.d_model));
    for (auto& [name, t] : m.tensors) {
        bool is_norm = name.find("norm") != std::string::npos;
        bool is_bias = name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
        for (auto& v : t.data) {
            if (is_bias)
                v = static_cast<float>(rng.normal(0.0, 0.02));
            else if (is_norm)
                v = static_cast<float>(rng.normal(1.0, 0.1));
            else
                v = static_cast<float>(rng.normal(0.0, proj));
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// QKPM container
// ---------------------------------------------------------------------------

inline void save_model(const Model& m, const std::filesystem::path& path) {
    std::string blob;
    nlohmann::json index = nlohmann::json::array();
    for (const auto& [name, t] : m.tensors) {
        size_t bytes = t.data.size() * sizeof(float);
        index.push_back({{"name", name},
                         {"shape", t.shape},
                         {"offset", blob.size()},
                         {"bytes", bytes}});
        size_t at = blob.size();
        blob.resize(blob.size() + bytes);
        std::memcpy(blob.data() + at, t.data.data(), bytes);
    }
    nlohmann::json manifest = {{"spec", m.spec.to_json()},
                               {"vocabulary", m.vocabulary},
                               {"tensors", index},
                               {"blob_hash", hex64(fnv1a64(blob))}};
    std::string mtext = manifest.dump();
    std::string out = "QKPM1\n" + std::to_string(mtext.size()) + "\n" + mtext + "\n" + blob;
    write_text_file(path, out);
}

inline Model load_model(const std::filesystem::path& path) {
    std::string raw = read_text_file(path);
    if (raw.compare(0, 6, "QKPM1\n") != 0) throw FormatError("not a QKPM model file");
    size_t len_end = raw.find('\n', 6);
    if (len_end == std::string::npos) throw FormatError("truncated QKPM header");
    size_t mlen = 0;
    try {
        mlen = std::stoul(raw.substr(6, len_end - 6));
    } catch (const std::exception&) {
        throw FormatError("bad manifest length in QKPM header");
    }
    size_t mbegin = len_end + 1;
    if (mbegin + mlen + 1 > raw.size()) throw FormatError("QKPM manifest runs past end of file");

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(raw.substr(mbegin, mlen));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad QKPM manifest: ") + e.what());
    }

    Model m;
    std::string blob = raw.substr(mbegin + mlen + 1);
    try {
        m.spec = ModelSpec::from_json(manifest.at("spec"));
        m.vocabulary = manifest.at("vocabulary").get<std::vector<std::string>>();
        if (manifest.at("blob_hash").get<std::string>() != hex64(fnv1a64(blob)))
            throw ChecksumMismatch("QKPM tensor blob hash mismatch");
        for (const auto& e : manifest.at("tensors")) {
            Tensor t;
            t.shape = e.at("shape").get<std::vector<int>>();
            size_t offset = e.at("offset").get<size_t>();
            size_t bytes = e.at("bytes").get<size_t>();
            if (bytes != t.numel() * sizeof(float))
                throw FormatError("tensor byte length disagrees with its shape: " +
                                  e.at("name").get<std::string>());
            if (offset + bytes > blob.size())
                throw FormatError("tensor data runs past end of blob: " +
                                  e.at("name").get<std::string>());
            t.data.resize(t.numel());
            std::memcpy(t.data.data(), blob.data() + offset, bytes);
            m.tensors.emplace(e.at("name").get<std::string>(), std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad QKPM manifest: ") + e.what());
    }

    m.spec.validate();
    if (static_cast<int>(m.vocabulary.size()) != m.spec.vocab_size)
        throw ShapeMismatch("vocabulary size does not match spec.vocab_size");
    for (auto& [name, shape] : expected_tensors(m.spec)) {
        const Tensor& t = m.tensor(name);  // throws ShapeMismatch when absent
        if (t.shape != shape) {
            std::string want, got;
            for (int d : shape) want += std::to_string(d) + " ";
            for (int d : t.shape) got += std::to_string(d) + " ";
            throw ShapeMismatch("tensor " + name + ": expected shape [ " + want +
                                "] but manifest declares [ " + got + "]");
        }
    }
    return m;
}

}  // namespace qkprobe::runtime
