#pragma once

//! Capture file format: the bridge between forward passes and scoring.
//!
//! A capture file carries everything the probe needs and nothing else, so
//! captures taken from an external model (where no weights are available
//! to this toolkit) score exactly like in-process ones.  Layout:
//!
//!   QKCAP1
//!   spec <digest hex>
//!   dims <n_layers> <n_heads> <head_dim>
//!   variants pre post
//!   samples <count>
//!   <one blank line, then binary blocks>
//!
//! Each binary block, little-endian:
//!   u32 id length, id bytes
//!   i32 pos_a0, pos_a1, pos_s, pos_final
//!   u32 option token ids (a0, a1)
//!   f32 option logits (a0, a1)
//!   per (layer, head) in row-major order, per variant (pre then post):
//!     f32 q_a0[head_dim], q_a1[head_dim], k_s[head_dim]
//!
//! Only the two option logits are persisted; the full in-memory logit
//! vector is a forward-pass byproduct that scoring never needs.

#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "qkprobe/common.hpp"
#include "qkprobe/runtime/forward.hpp"
#include "qkprobe/runtime/spec.hpp"

namespace qkprobe::runtime {

struct CaptureFile {
    std::string spec_digest;
    int n_layers = 0, n_heads = 0, head_dim = 0;
    std::vector<QKCapture> captures;
};

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.append(b, 4);
}

inline void put_f32(std::string& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct BinReader {
    const std::string& raw;
    size_t at;

    uint32_t u32() {
        if (at + 4 > raw.size()) throw FormatError("capture file truncated");
        uint32_t v = static_cast<uint8_t>(raw[at]) | (static_cast<uint8_t>(raw[at + 1]) << 8) |
                     (static_cast<uint8_t>(raw[at + 2]) << 16) |
                     (static_cast<uint8_t>(raw[at + 3]) << 24);
        at += 4;
        return v;
    }

    float f32() {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    std::string bytes(size_t n) {
        if (at + n > raw.size()) throw FormatError("capture file truncated");
        std::string s = raw.substr(at, n);
        at += n;
        return s;
    }
};

}  // namespace detail

inline void write_capture(const std::vector<QKCapture>& captures, const ModelSpec& spec,
                          const std::filesystem::path& path) {
    for (const auto& c : captures) {
        if (c.n_layers != spec.n_layers || c.n_heads != spec.n_heads ||
            c.head_dim != spec.head_dim)
            throw FormatError("capture " + c.sample_id + " does not match the model spec grid");
        if (c.pre.size() != c.post.size() ||
            c.pre.size() != static_cast<size_t>(c.n_layers) * c.n_heads)
            throw FormatError("capture " + c.sample_id + " has an incomplete head grid");
    }

    std::string out = "QKCAP1\n";
    out += "spec " + spec.digest() + "\n";
    out += "dims " + std::to_string(spec.n_layers) + " " + std::to_string(spec.n_heads) + " " +
           std::to_string(spec.head_dim) + "\n";
    out += "variants pre post\n";
    out += "samples " + std::to_string(captures.size()) + "\n\n";

    for (const auto& c : captures) {
        detail::put_u32(out, static_cast<uint32_t>(c.sample_id.size()));
        out += c.sample_id;
        for (int p : {c.pos_a0, c.pos_a1, c.pos_s, c.pos_final})
            detail::put_u32(out, static_cast<uint32_t>(p));
        detail::put_u32(out, static_cast<uint32_t>(c.option_tokens[0]));
        detail::put_u32(out, static_cast<uint32_t>(c.option_tokens[1]));
        detail::put_f32(out, c.option_logits[0]);
        detail::put_f32(out, c.option_logits[1]);
        for (const auto* grid : {&c.pre, &c.post}) {
            for (const auto& hv : *grid) {
                if (static_cast<int>(hv.q_a0.size()) != c.head_dim ||
                    static_cast<int>(hv.q_a1.size()) != c.head_dim ||
                    static_cast<int>(hv.k_s.size()) != c.head_dim)
                    throw FormatError("capture " + c.sample_id +
                                      " holds vectors that disagree with head_dim");
                for (const auto* vec : {&hv.q_a0, &hv.q_a1, &hv.k_s})
                    for (float f : *vec) detail::put_f32(out, f);
            }
        }
    }
    write_text_file(path, out);
}

inline CaptureFile read_capture(const std::filesystem::path& path) {
    std::string raw = read_text_file(path);
    size_t nl = raw.find('\n');
    std::string magic = nl == std::string::npos ? raw : raw.substr(0, nl);
    if (magic.compare(0, 5, "QKCAP") != 0) throw FormatError("not a capture file");
    if (magic != "QKCAP1")
        throw VersionMismatch("unsupported capture version: " + magic);

    // header: read line-wise until the blank separator
    CaptureFile out;
    size_t at = nl + 1;
    size_t n_samples = 0;
    bool have_dims = false, have_samples = false;
    while (at < raw.size()) {
        size_t end = raw.find('\n', at);
        if (end == std::string::npos) throw FormatError("capture header unterminated");
        std::string line = raw.substr(at, end - at);
        at = end + 1;
        if (line.empty()) break;  // binary section follows
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "spec") {
            ls >> out.spec_digest;
        } else if (key == "dims") {
            ls >> out.n_layers >> out.n_heads >> out.head_dim;
            have_dims = !ls.fail();
        } else if (key == "variants") {
            std::string v;
            bool pre = false, post = false;
            while (ls >> v) {
                if (variant_from_string(v) == Variant::PrePositional) pre = true;
                if (variant_from_string(v) == Variant::PostPositional) post = true;
            }
            if (!pre || !post)
                throw FormatError("capture file must carry both positional variants");
        } else if (key == "samples") {
            ls >> n_samples;
            have_samples = !ls.fail();
        } else {
            throw FormatError("unknown capture header line: " + line);
        }
    }
    if (out.spec_digest.empty() || !have_dims || !have_samples)
        throw FormatError("capture header missing spec, dims, or samples");
    if (out.n_layers < 1 || out.n_heads < 1 || out.head_dim < 1)
        throw FormatError("capture header declares an empty grid");

    detail::BinReader r{raw, at};
    const size_t grid = static_cast<size_t>(out.n_layers) * out.n_heads;
    for (size_t i = 0; i < n_samples; ++i) {
        QKCapture c;
        c.n_layers = out.n_layers;
        c.n_heads = out.n_heads;
        c.head_dim = out.head_dim;
        c.sample_id = r.bytes(r.u32());
        c.pos_a0 = static_cast<int>(r.u32());
        c.pos_a1 = static_cast<int>(r.u32());
        c.pos_s = static_cast<int>(r.u32());
        c.pos_final = static_cast<int>(r.u32());
        c.option_tokens = {static_cast<int>(r.u32()), static_cast<int>(r.u32())};
        c.option_logits = {r.f32(), r.f32()};
        for (auto* gridv : {&c.pre, &c.post}) {
            gridv->resize(grid);
            for (auto& hv : *gridv) {
                for (auto* vec : {&hv.q_a0, &hv.q_a1, &hv.k_s}) {
                    vec->resize(out.head_dim);
                    for (auto& f : *vec) f = r.f32();
                }
            }
        }
        out.captures.push_back(std::move(c));
    }
    if (r.at != raw.size()) throw FormatError("trailing bytes after the last capture block");
    return out;
}

}  // namespace qkprobe::runtime
