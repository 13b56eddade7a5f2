#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkprobe {

// ---------------------------------------------------------------------------
// Error types. One exception class per failure mode so tests can catch the
// exact condition they provoke.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define QKP_ERROR_TYPE(Name)                                                   \
    struct Name : Error {                                                      \
        using Error::Error;                                                    \
    }

QKP_ERROR_TYPE(SchemaMismatch);
QKP_ERROR_TYPE(ArityError);
QKP_ERROR_TYPE(DomainTooLarge);
QKP_ERROR_TYPE(FragmentViolation);
QKP_ERROR_TYPE(NotDerivable);
QKP_ERROR_TYPE(ExhaustedOntology);
QKP_ERROR_TYPE(InsufficientSamples);
QKP_ERROR_TYPE(FormatError);
QKP_ERROR_TYPE(ShapeMismatch);
QKP_ERROR_TYPE(ChecksumMismatch);
QKP_ERROR_TYPE(VersionMismatch);
QKP_ERROR_TYPE(TemplateMissing);
QKP_ERROR_TYPE(SpanResolutionError);
QKP_ERROR_TYPE(SequenceTooLong);
QKP_ERROR_TYPE(HeadOutOfRange);
QKP_ERROR_TYPE(MissingLogits);
QKP_ERROR_TYPE(IncompleteCaptures);
QKP_ERROR_TYPE(EmptyTable);
QKP_ERROR_TYPE(InsufficientHeads);
QKP_ERROR_TYPE(SpecTooLarge);
QKP_ERROR_TYPE(IdMismatch);
QKP_ERROR_TYPE(DigestMismatch);
QKP_ERROR_TYPE(ConfigError);
QKP_ERROR_TYPE(UnsupportedFormat);

#undef QKP_ERROR_TYPE

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64 seeding + xoshiro256** core so that streams
// are byte-identical across platforms and standard library versions.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(uint64_t seed = 0) {
        uint64_t x = seed;
        for (auto& si : s_) {
            x += 0x9e3779b97f4a7c15ull;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            si = z ^ (z >> 31);
        }
    }

    uint64_t next_u64() {
        auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform integer in [0, n)
    uint64_t uniform(uint64_t n) { return n ? next_u64() % n : 0; }

    // uniform in [lo, hi] inclusive
    int range(int lo, int hi) { return lo + static_cast<int>(uniform(static_cast<uint64_t>(hi - lo + 1))); }

    double real01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool coin() { return (next_u64() & 1ull) != 0; }

    // Box-Muller, no cached spare so the stream stays position-independent.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = real01();
        double u2 = real01();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = uniform(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[uniform(v.size())];
    }

private:
    uint64_t s_[4];
};

// Stateless per-stream seed derivation so batched generation can be
// parallelized without sharing an Rng.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + (stream + 1) * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// FNV-1a 64-bit content hashing (manifests, capture headers, spec digests).
// ---------------------------------------------------------------------------

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a64(s.data(), s.size(), h);
}

inline std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// Small file helpers
// ---------------------------------------------------------------------------

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write file: " + path.string());
    out << content;
}

inline std::string file_content_hash(const std::filesystem::path& path) {
    return hex64(fnv1a64(read_text_file(path)));
}

// printf-style float formatting used by every exporter; keeps outputs
// byte-deterministic.
inline std::string fmt_double(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return std::string(buf);
}

}  // namespace qkprobe
