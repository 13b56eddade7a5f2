#pragma once

//! Architecture description for the toy decoder-only transformer runtime.
//!
//! A ModelSpec is everything needed to size tensors and drive a forward
//! pass: layer/head geometry, normalization kind, positional encoding,
//! feed-forward form, and whether the unembedding shares the token
//! embedding matrix.  Specs serialize to JSON inside model manifests and
//! hash to a digest that capture files carry for consistency checks.

#include <compare>
#include <cstdint>
#include <string>

#include "json.hpp"
#include "qkprobe/common.hpp"

namespace qkprobe::runtime {

enum class Norm { LayerNorm, RmsNorm };
enum class Positional { Rope, None };
enum class Ffn { Gelu, Gated };

inline std::string to_string(Norm n) { return n == Norm::LayerNorm ? "layernorm" : "rmsnorm"; }
inline std::string to_string(Positional p) { return p == Positional::Rope ? "rope" : "none"; }
inline std::string to_string(Ffn f) { return f == Ffn::Gelu ? "gelu" : "gated"; }

inline Norm norm_from_string(const std::string& s) {
    if (s == "layernorm") return Norm::LayerNorm;
    if (s == "rmsnorm") return Norm::RmsNorm;
    throw FormatError("unknown norm kind: " + s);
}

inline Positional positional_from_string(const std::string& s) {
    if (s == "rope") return Positional::Rope;
    if (s == "none") return Positional::None;
    throw FormatError("unknown positional kind: " + s);
}

inline Ffn ffn_from_string(const std::string& s) {
    if (s == "gelu") return Ffn::Gelu;
    if (s == "gated") return Ffn::Gated;
    throw FormatError("unknown feed-forward kind: " + s);
}

/// One attention unit: layer index and head index within the layer.
struct HeadId {
    int layer = 0;
    int head = 0;

    auto operator<=>(const HeadId&) const = default;
};

inline std::string to_string(const HeadId& h) {
    return "(" + std::to_string(h.layer) + "," + std::to_string(h.head) + ")";
}

/// Which side of the positional rotation captured q/k vectors come from.
enum class Variant { PrePositional, PostPositional };

inline std::string to_string(Variant v) {
    return v == Variant::PrePositional ? "pre" : "post";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "pre") return Variant::PrePositional;
    if (s == "post") return Variant::PostPositional;
    throw FormatError("unknown capture variant: " + s);
}

struct ModelSpec {
    int n_layers = 2;
    int n_heads = 4;
    int n_kv_heads = 4;
    int head_dim = 8;
    int d_model = 32;
    int d_ff = 64;
    int vocab_size = 0;
    int context_limit = 512;
    Norm norm = Norm::RmsNorm;
    Positional positional = Positional::Rope;
    double rope_theta = 10000.0;
    Ffn ffn = Ffn::Gelu;
    bool tied_embeddings = false;

    void validate() const {
        if (n_layers < 1 || n_heads < 1 || n_kv_heads < 1 || head_dim < 1)
            throw ConfigError("model geometry counts must be positive");
        if (d_model != n_heads * head_dim)
            throw ConfigError("d_model must equal n_heads * head_dim");
        if (n_heads % n_kv_heads != 0)
            throw ConfigError("n_heads must be divisible by n_kv_heads");
        if (d_ff < 1) throw ConfigError("d_ff must be positive");
        if (vocab_size < 1) throw ConfigError("vocab_size must be positive");
        if (context_limit < 1) throw ConfigError("context_limit must be positive");
        if (positional == Positional::Rope && head_dim % 2 != 0)
            throw ConfigError("rotary positions need an even head_dim");
        if (positional == Positional::Rope && rope_theta <= 0)
            throw ConfigError("rope theta must be positive");
    }

    bool head_in_range(const HeadId& h) const {
        return h.layer >= 0 && h.layer < n_layers && h.head >= 0 && h.head < n_heads;
    }

    /// kv group this query head reads keys/values from
    int kv_head_of(int head) const { return head / (n_heads / n_kv_heads); }

    nlohmann::json to_json() const {
        return {{"n_layers", n_layers},
                {"n_heads", n_heads},
                {"n_kv_heads", n_kv_heads},
                {"head_dim", head_dim},
                {"d_model", d_model},
                {"d_ff", d_ff},
                {"vocab_size", vocab_size},
                {"context_limit", context_limit},
                {"norm", to_string(norm)},
                {"positional", to_string(positional)},
                {"rope_theta", rope_theta},
                {"ffn", to_string(ffn)},
                {"tied_embeddings", tied_embeddings}};
    }

    static ModelSpec from_json(const nlohmann::json& j) {
        try {
            ModelSpec s;
            s.n_layers = j.at("n_layers").get<int>();
            s.n_heads = j.at("n_heads").get<int>();
            s.n_kv_heads = j.at("n_kv_heads").get<int>();
            s.head_dim = j.at("head_dim").get<int>();
            s.d_model = j.at("d_model").get<int>();
            s.d_ff = j.at("d_ff").get<int>();
            s.vocab_size = j.at("vocab_size").get<int>();
            s.context_limit = j.at("context_limit").get<int>();
            s.norm = norm_from_string(j.at("norm").get<std::string>());
            s.positional = positional_from_string(j.at("positional").get<std::string>());
            s.rope_theta = j.at("rope_theta").get<double>();
            s.ffn = ffn_from_string(j.at("ffn").get<std::string>());
            s.tied_embeddings = j.at("tied_embeddings").get<bool>();
            return s;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("malformed model spec: ") + e.what());
        }
    }

    /// Stable content digest; capture files record it so scores can refuse
    /// to mix captures from different architectures.
    std::string digest() const { return hex64(fnv1a64(to_json().dump())); }
};

}  // namespace qkprobe::runtime
