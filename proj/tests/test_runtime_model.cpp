#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "qkprobe/runtime/model.hpp"

using namespace qkprobe;
using namespace qkprobe::runtime;

namespace {

std::vector<std::string> toy_vocab(int size) {
    std::vector<std::string> v = {"<unk>", "<eol>", "<eol+>", "<eol->"};
    for (int i = static_cast<int>(v.size()); i < size; ++i) v.push_back("w" + std::to_string(i));
    return v;
}

ModelSpec toy_spec() {
    ModelSpec s;
    s.n_layers = 2;
    s.n_heads = 4;
    s.n_kv_heads = 4;
    s.head_dim = 8;
    s.d_model = 32;
    s.d_ff = 48;
    s.vocab_size = 20;
    return s;
}

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove(path);
    }
    ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("spec validation enforces the geometry invariants") {
    ModelSpec s = toy_spec();
    REQUIRE_NOTHROW(s.validate());

    SECTION("d_model must equal n_heads * head_dim") {
        s.d_model = 33;
        REQUIRE_THROWS_AS(s.validate(), ConfigError);
    }
    SECTION("n_heads divisible by n_kv_heads") {
        s.n_kv_heads = 3;
        REQUIRE_THROWS_AS(s.validate(), ConfigError);
    }
    SECTION("rotary positions need even head_dim") {
        s.head_dim = 7;
        s.n_heads = 4;
        s.d_model = 28;
        s.positional = Positional::Rope;
        REQUIRE_THROWS_AS(s.validate(), ConfigError);
    }
    SECTION("vocab must be declared") {
        s.vocab_size = 0;
        REQUIRE_THROWS_AS(s.validate(), ConfigError);
    }
}

TEST_CASE("spec JSON round trip and digest stability") {
    ModelSpec s = toy_spec();
    s.norm = Norm::LayerNorm;
    s.positional = Positional::None;
    s.ffn = Ffn::Gated;
    s.tied_embeddings = true;

    ModelSpec back = ModelSpec::from_json(s.to_json());
    REQUIRE(back.to_json() == s.to_json());
    REQUIRE(back.digest() == s.digest());

    ModelSpec other = s;
    other.n_heads = 2;
    other.head_dim = 16;
    REQUIRE(other.digest() != s.digest());
}

TEST_CASE("a toy model saves and loads byte-identically") {
    ModelSpec spec = toy_spec();
    Model m = random_model(spec, toy_vocab(spec.vocab_size), 7);
    TempFile f("qkprobe_model_roundtrip.qkpm");
    save_model(m, f.path);
    Model back = load_model(f.path);

    REQUIRE(back.spec.to_json() == spec.to_json());
    REQUIRE(back.vocabulary == m.vocabulary);
    REQUIRE(back.tensors.size() == m.tensors.size());
    for (const auto& [name, t] : m.tensors) {
        const Tensor& bt = back.tensor(name);
        REQUIRE(bt.shape == t.shape);
        REQUIRE(bt.data == t.data);
    }
}

TEST_CASE("loading validates shapes against the spec") {
    ModelSpec spec = toy_spec();
    Model m = random_model(spec, toy_vocab(spec.vocab_size), 7);
    TempFile f("qkprobe_model_badshape.qkpm");

    SECTION("wq rows disagree with n_heads * head_dim") {
        Tensor& wq = m.tensors.at("layers.0.attn.wq.weight");
        wq.shape = {24, spec.d_model};
        wq.data.assign(wq.numel(), 0.5f);
        save_model(m, f.path);
        REQUIRE_THROWS_AS(load_model(f.path), ShapeMismatch);
    }
    SECTION("a required tensor is missing") {
        m.tensors.erase("final_norm.weight");
        save_model(m, f.path);
        REQUIRE_THROWS_AS(load_model(f.path), ShapeMismatch);
    }
}

TEST_CASE("corruption is caught by hash or magic") {
    ModelSpec spec = toy_spec();
    Model m = random_model(spec, toy_vocab(spec.vocab_size), 7);
    TempFile f("qkprobe_model_corrupt.qkpm");
    save_model(m, f.path);
    std::string raw = read_text_file(f.path);

    SECTION("truncated blob") {
        write_text_file(f.path, raw.substr(0, raw.size() - 4));
        REQUIRE_THROWS_AS(load_model(f.path), ChecksumMismatch);
    }
    SECTION("flipped byte inside the blob") {
        raw[raw.size() - 1] = static_cast<char>(raw[raw.size() - 1] ^ 0x40);
        write_text_file(f.path, raw);
        REQUIRE_THROWS_AS(load_model(f.path), ChecksumMismatch);
    }
    SECTION("wrong magic") {
        raw[2] = 'X';
        write_text_file(f.path, raw);
        REQUIRE_THROWS_AS(load_model(f.path), FormatError);
    }
}

TEST_CASE("random fill is seed-deterministic") {
    ModelSpec spec = toy_spec();
    Model a = random_model(spec, toy_vocab(spec.vocab_size), 42);
    Model b = random_model(spec, toy_vocab(spec.vocab_size), 42);
    Model c = random_model(spec, toy_vocab(spec.vocab_size), 43);
    REQUIRE(a.tensor("tok_embeddings.weight").data == b.tensor("tok_embeddings.weight").data);
    REQUIRE(a.tensor("tok_embeddings.weight").data != c.tensor("tok_embeddings.weight").data);
}

TEST_CASE("gated and layernorm configurations carry their extra tensors") {
    ModelSpec s = toy_spec();
    s.norm = Norm::LayerNorm;
    s.ffn = Ffn::Gated;
    Model m = make_model(s, toy_vocab(s.vocab_size));
    REQUIRE_NOTHROW(m.tensor("layers.0.attn_norm.bias"));
    REQUIRE_NOTHROW(m.tensor("layers.1.ffn.w3.weight"));
    REQUIRE_NOTHROW(m.tensor("output.weight"));

    s.tied_embeddings = true;
    Model tied = make_model(s, toy_vocab(s.vocab_size));
    REQUIRE(tied.tensors.count("output.weight") == 0);
    REQUIRE(&tied.output_matrix() == &tied.tensor("tok_embeddings.weight"));
}
