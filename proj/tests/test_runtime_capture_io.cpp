#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "qkprobe/runtime/capture_io.hpp"
#include "qkprobe/runtime/forward.hpp"

using namespace qkprobe;
using namespace qkprobe::runtime;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = (std::filesystem::temp_directory_path() / name).string();
    }
    ~TempFile() { std::remove(path.c_str()); }
};

std::vector<std::string> toy_vocab(int size) {
    std::vector<std::string> v = {"<unk>", "<eol>", "<eol+>", "<eol->"};
    for (int i = static_cast<int>(v.size()); i < size; ++i) v.push_back("w" + std::to_string(i));
    return v;
}

ModelSpec toy_spec() {
    ModelSpec s;
    s.n_layers = 2;
    s.n_heads = 3;
    s.n_kv_heads = 3;
    s.head_dim = 4;
    s.d_model = 12;
    s.d_ff = 16;
    s.vocab_size = 16;
    return s;
}

std::vector<QKCapture> sample_captures(const ModelSpec& s, int n) {
    Model m = random_model(s, toy_vocab(s.vocab_size), 7);
    std::vector<QKCapture> captures;
    Rng rng(99);
    for (int i = 0; i < n; ++i) {
        PromptLayout layout;
        for (int t = 0; t < 10; ++t)
            layout.token_ids.push_back(static_cast<int>(rng.uniform(s.vocab_size)));
        layout.pos_a0 = 1;
        layout.pos_a1 = 2;
        layout.pos_s = 7;
        layout.pos_final = 9;
        layout.template_id = "test";
        QKCapture cap = forward_capture(m, layout);
        cap.sample_id = "sample-" + std::to_string(i);
        captures.push_back(std::move(cap));
    }
    return captures;
}

}  // namespace

TEST_CASE("capture files survive a round trip bit for bit") {
    ModelSpec spec = toy_spec();
    std::vector<QKCapture> captures = sample_captures(spec, 3);
    TempFile tmp("qkprobe_cap_roundtrip.qkcap");
    write_capture(captures, spec, tmp.path);
    CaptureFile back = read_capture(tmp.path);

    REQUIRE(back.spec_digest == spec.digest());
    REQUIRE(back.n_layers == spec.n_layers);
    REQUIRE(back.n_heads == spec.n_heads);
    REQUIRE(back.head_dim == spec.head_dim);
    REQUIRE(back.captures.size() == captures.size());
    for (size_t i = 0; i < captures.size(); ++i) {
        const QKCapture& a = captures[i];
        const QKCapture& b = back.captures[i];
        REQUIRE(b.sample_id == a.sample_id);
        REQUIRE(b.pos_a0 == a.pos_a0);
        REQUIRE(b.pos_a1 == a.pos_a1);
        REQUIRE(b.pos_s == a.pos_s);
        REQUIRE(b.pos_final == a.pos_final);
        REQUIRE(b.option_tokens == a.option_tokens);
        REQUIRE(b.option_logits == a.option_logits);
        for (int l = 0; l < spec.n_layers; ++l)
            for (int h = 0; h < spec.n_heads; ++h)
                for (Variant v : {Variant::PrePositional, Variant::PostPositional}) {
                    const HeadVectors& ha = a.at(v, {l, h});
                    const HeadVectors& hb = b.at(v, {l, h});
                    REQUIRE(hb.q_a0 == ha.q_a0);
                    REQUIRE(hb.q_a1 == ha.q_a1);
                    REQUIRE(hb.k_s == ha.k_s);
                }
    }
}

TEST_CASE("capture writing validates sample grids against the spec") {
    ModelSpec spec = toy_spec();
    std::vector<QKCapture> captures = sample_captures(spec, 2);
    TempFile tmp("qkprobe_cap_badgrid.qkcap");

    SECTION("a sample missing a head row is rejected") {
        captures[1].pre.pop_back();
        REQUIRE_THROWS_AS(write_capture(captures, spec, tmp.path), FormatError);
    }
    SECTION("a vector of the wrong width is rejected") {
        captures[0].post[0].k_s.push_back(0.0f);
        REQUIRE_THROWS_AS(write_capture(captures, spec, tmp.path), FormatError);
    }
    SECTION("a sample from a different grid is rejected") {
        captures[0].n_heads = 5;
        REQUIRE_THROWS_AS(write_capture(captures, spec, tmp.path), FormatError);
    }
}

TEST_CASE("capture reading rejects malformed files") {
    ModelSpec spec = toy_spec();
    std::vector<QKCapture> captures = sample_captures(spec, 2);
    TempFile tmp("qkprobe_cap_malformed.qkcap");
    write_capture(captures, spec, tmp.path);
    std::string raw = read_text_file(tmp.path);

    SECTION("a newer container version is reported as such") {
        std::string bumped = raw;
        bumped[5] = '2';
        write_text_file(tmp.path, bumped);
        REQUIRE_THROWS_AS(read_capture(tmp.path), VersionMismatch);
    }
    SECTION("an unrelated magic string is a format error") {
        std::string wrong = raw;
        wrong[0] = 'X';
        write_text_file(tmp.path, wrong);
        REQUIRE_THROWS_AS(read_capture(tmp.path), FormatError);
    }
    SECTION("truncation is a format error") {
        write_text_file(tmp.path, raw.substr(0, raw.size() - 6));
        REQUIRE_THROWS_AS(read_capture(tmp.path), FormatError);
    }
    SECTION("trailing bytes are a format error") {
        write_text_file(tmp.path, raw + "junk");
        REQUIRE_THROWS_AS(read_capture(tmp.path), FormatError);
    }
    SECTION("an unknown header line is a format error") {
        size_t pos = raw.find("variants");
        std::string tweaked = raw.substr(0, pos) + "mystery 1\n" + raw.substr(pos);
        write_text_file(tmp.path, tweaked);
        REQUIRE_THROWS_AS(read_capture(tmp.path), FormatError);
    }
}
