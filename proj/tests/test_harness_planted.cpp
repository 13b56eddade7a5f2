#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "qkprobe/harness/experiment.hpp"
#include "qkprobe/harness/planted.hpp"

using namespace qkprobe;
using namespace qkprobe::harness;
using runtime::HeadId;
using runtime::Model;
using runtime::ModelSpec;
using runtime::Variant;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = (std::filesystem::temp_directory_path() / name).string();
    }
    ~TempFile() { std::remove(path.c_str()); }
};

datagen::DatasetSplit tiny_split(uint64_t seed, int n_cal = 40, int n_eval = 60) {
    datagen::GenConfig cfg;
    cfg.family = "pronto";
    cfg.rule_mode = "mp_only";
    cfg.hops_min = cfg.hops_max = 1;
    cfg.n_calibration = n_cal;
    cfg.n_evaluation = n_eval;
    cfg.seed = seed;
    return datagen::gen_prontoqa(cfg);
}

std::vector<std::string> split_vocab(const datagen::DatasetSplit& split) {
    std::vector<std::string> texts;
    for (const auto* part : {&split.calibration, &split.evaluation})
        for (const datagen::LogicSample& s : *part)
            texts.push_back(runtime::render_prompt(s, runtime::default_template_id(s.family)).text);
    return runtime::build_vocabulary(texts);
}

ModelSpec small_spec(int vocab_size, int n_layers = 2, int n_heads = 3, int head_dim = 4) {
    ModelSpec spec;
    spec.n_layers = n_layers;
    spec.n_heads = n_heads;
    spec.n_kv_heads = n_heads;
    spec.head_dim = head_dim;
    spec.d_model = n_heads * head_dim;
    spec.d_ff = 2 * spec.d_model;
    spec.vocab_size = vocab_size;
    return spec;
}

const std::array<std::string, 2> kBoolOptions{"true", "false"};

// Full pipeline on a planted model: markers at the statement anchor,
// pre-rotation score tables over both splits.
struct PlantedRun {
    datagen::DatasetSplit split;
    Model model;
    probe::ScoreTable cal, eval;
};

PlantedRun run_planted(uint64_t data_seed, uint64_t model_seed, const HeadId& planted,
                       int n_cal = 40, int n_eval = 60) {
    PlantedRun r;
    r.split = tiny_split(data_seed, n_cal, n_eval);
    std::vector<std::string> vocab = split_vocab(r.split);
    r.model = build_planted_model(small_spec(static_cast<int>(vocab.size())), vocab, planted,
                                  kBoolOptions, model_seed);
    runtime::Tokenizer tok(r.model.vocabulary);
    auto cal_caps = capture_samples(r.model, tok, r.split.calibration, true);
    auto eval_caps = capture_samples(r.model, tok, r.split.evaluation, true);
    r.cal = probe::score_table(cal_caps, gold_of(r.split.calibration), Variant::PrePositional);
    r.eval = probe::score_table(eval_caps, gold_of(r.split.evaluation), Variant::PrePositional);
    return r;
}

double gold_zero_fraction(const probe::ScoreTable& t) {
    int zeros = 0;
    for (const auto& id : t.sample_ids) zeros += t.gold.at(id) == 0 ? 1 : 0;
    return static_cast<double>(zeros) / static_cast<double>(t.sample_ids.size());
}

}  // namespace

TEST_CASE("the planted head is exactly right and every other head is not") {
    PlantedRun r = run_planted(11, 99, {1, 2});

    for (const probe::ScoreTable* table : {&r.cal, &r.eval}) {
        auto acc = probe::head_accuracy(*table);
        CHECK(acc.at({1, 2}) == 1.0);
        for (const auto& [head, a] : acc) {
            if (head == HeadId{1, 2}) continue;
            INFO("head " << runtime::to_string(head));
            CHECK(a < 1.0);
            CHECK(a > 0.0);
            // random projections of the content hover near chance; a head
            // pinned to 0 or 1 would mean the marker channel leaked
            CHECK(a > 0.15);
            CHECK(a < 0.85);
        }
    }

    auto rep = probe::calibrate(r.cal, {"pronto", "mp_only", 1, 1, 0, 0});
    CHECK(rep.best_head == HeadId{1, 2});
    CHECK(probe::select_best_head(rep) == HeadId{1, 2});
}

TEST_CASE("tied option logits make the baseline pick a0 on every sample") {
    PlantedRun r = run_planted(12, 5, {0, 1});
    for (const probe::ScoreTable* table : {&r.cal, &r.eval}) {
        for (const auto& id : table->sample_ids) CHECK(table->baseline.at(id) == 0);
        CHECK(probe::baseline_accuracy(*table) == gold_zero_fraction(*table));
    }
    // calibration splits are balanced, so constant answers sit at chance
    CHECK(probe::baseline_accuracy(r.cal) == 0.5);
}

TEST_CASE("only the planted head's key ever sees the marker") {
    datagen::DatasetSplit split = tiny_split(21, 4, 4);
    std::vector<std::string> vocab = split_vocab(split);
    HeadId planted{1, 0};
    Model model = build_planted_model(small_spec(static_cast<int>(vocab.size())), vocab, planted,
                                      kBoolOptions, 7);
    runtime::Tokenizer tok(model.vocabulary);

    const datagen::LogicSample& s = split.calibration.front();
    runtime::RenderedPrompt prompt =
        runtime::render_prompt(s, runtime::default_template_id(s.family));
    auto plus = tok.tokenize(prompt.text, prompt.spans, prompt.template_id,
                             runtime::kMarkerA0Token);
    auto minus = tok.tokenize(prompt.text, prompt.spans, prompt.template_id,
                              runtime::kMarkerA1Token);
    runtime::QKCapture a = runtime::forward_capture(model, plus);
    runtime::QKCapture b = runtime::forward_capture(model, minus);

    for (int l = 0; l < a.n_layers; ++l)
        for (int h = 0; h < a.n_heads; ++h) {
            HeadId id{l, h};
            const auto& ha = a.at(Variant::PrePositional, id);
            const auto& hb = b.at(Variant::PrePositional, id);
            INFO("head " << runtime::to_string(id));
            // the options precede the statement, so causality already
            // keeps every query state identical across the marker flip
            CHECK(ha.q_a0 == hb.q_a0);
            CHECK(ha.q_a1 == hb.q_a1);
            if (id == planted) {
                REQUIRE(ha.k_s.size() == hb.k_s.size());
                CHECK(ha.k_s[0] != 0.0f);
                CHECK(ha.k_s[0] == -hb.k_s[0]);
                for (size_t i = 1; i < ha.k_s.size(); ++i) {
                    CHECK(ha.k_s[i] == 0.0f);
                    CHECK(hb.k_s[i] == 0.0f);
                }
            } else {
                CHECK(ha.k_s == hb.k_s);
            }
        }

    // the marker never reaches the final position either
    CHECK(a.option_logits == b.option_logits);
}

TEST_CASE("option logits tie bitwise on the planted model") {
    PlantedRun r = run_planted(13, 3, {0, 0}, 4, 4);
    runtime::Tokenizer tok(r.model.vocabulary);
    auto caps = capture_samples(r.model, tok, r.split.calibration, true);
    for (const auto& cap : caps) CHECK(cap.option_logits[0] == cap.option_logits[1]);
}

TEST_CASE("the plant works at every grid position") {
    datagen::DatasetSplit split = tiny_split(31, 10, 10);
    std::vector<std::string> vocab = split_vocab(split);
    ModelSpec spec = small_spec(static_cast<int>(vocab.size()), 2, 2, 4);
    for (int l = 0; l < spec.n_layers; ++l)
        for (int h = 0; h < spec.n_heads; ++h) {
            HeadId planted{l, h};
            Model model = build_planted_model(spec, vocab, planted, kBoolOptions, 17);
            runtime::Tokenizer tok(model.vocabulary);
            auto caps = capture_samples(model, tok, split.calibration, true);
            auto table =
                probe::score_table(caps, gold_of(split.calibration), Variant::PrePositional);
            auto acc = probe::head_accuracy(table);
            INFO("planted " << runtime::to_string(planted));
            CHECK(acc.at(planted) == 1.0);
            auto rep = probe::calibrate(table, {"pronto", "mp_only", 1, 1, 0, 0});
            CHECK(rep.best_head == planted);
        }
}

TEST_CASE("several seeds, one story") {
    for (uint64_t seed : {101ull, 202ull, 303ull}) {
        PlantedRun r = run_planted(seed, seed + 7, {1, 1}, 20, 20);
        auto rep = probe::calibrate(r.cal, {"pronto", "mp_only", 1, 1, 0, 0});
        INFO("seed " << seed);
        CHECK(rep.best_head == HeadId{1, 1});
        CHECK(probe::head_accuracy(r.eval).at({1, 1}) == 1.0);
    }
}

TEST_CASE("planted construction is deterministic in the seed") {
    datagen::DatasetSplit split = tiny_split(41, 4, 4);
    std::vector<std::string> vocab = split_vocab(split);
    ModelSpec spec = small_spec(static_cast<int>(vocab.size()));
    Model a = build_planted_model(spec, vocab, {0, 2}, kBoolOptions, 55);
    Model b = build_planted_model(spec, vocab, {0, 2}, kBoolOptions, 55);
    Model c = build_planted_model(spec, vocab, {0, 2}, kBoolOptions, 56);
    for (const auto& [name, t] : a.tensors) {
        CHECK(t.data == b.tensors.at(name).data);
    }
    CHECK(a.tensors.at("tok_embeddings.weight").data !=
          c.tensors.at("tok_embeddings.weight").data);
}

TEST_CASE("a planted model survives the container round trip") {
    datagen::DatasetSplit split = tiny_split(51, 4, 4);
    std::vector<std::string> vocab = split_vocab(split);
    Model model = build_planted_model(small_spec(static_cast<int>(vocab.size())), vocab, {1, 2},
                                      kBoolOptions, 5);
    TempFile file("planted-roundtrip.qkpm");
    runtime::save_model(model, file.path);
    Model loaded = runtime::load_model(file.path);
    for (const auto& [name, t] : model.tensors) CHECK(t.data == loaded.tensors.at(name).data);

    runtime::Tokenizer tok(loaded.vocabulary);
    auto caps = capture_samples(loaded, tok, split.calibration, true);
    auto table = probe::score_table(caps, gold_of(split.calibration), Variant::PrePositional);
    CHECK(probe::head_accuracy(table).at({1, 2}) == 1.0);
}

TEST_CASE("planted construction rejects what it cannot protect") {
    datagen::DatasetSplit split = tiny_split(61, 4, 4);
    std::vector<std::string> vocab = split_vocab(split);
    int vs = static_cast<int>(vocab.size());

    SECTION("grid too large") {
        ModelSpec spec = small_spec(vs, 5, 3, 4);
        CHECK_THROWS_AS(build_planted_model(spec, vocab, {0, 0}, kBoolOptions, 1), SpecTooLarge);
        spec = small_spec(vs, 2, 9, 4);
        CHECK_THROWS_AS(build_planted_model(spec, vocab, {0, 0}, kBoolOptions, 1), SpecTooLarge);
    }
    SECTION("planted head outside the grid") {
        CHECK_THROWS_AS(build_planted_model(small_spec(vs), vocab, {2, 0}, kBoolOptions, 1),
                        HeadOutOfRange);
        CHECK_THROWS_AS(build_planted_model(small_spec(vs), vocab, {0, 3}, kBoolOptions, 1),
                        HeadOutOfRange);
    }
    SECTION("mean-subtracting norm would leak the marker") {
        ModelSpec spec = small_spec(vs);
        spec.norm = runtime::Norm::LayerNorm;
        CHECK_THROWS_AS(build_planted_model(spec, vocab, {0, 0}, kBoolOptions, 1), ConfigError);
    }
    SECTION("shared key groups would leak the marker") {
        ModelSpec spec = small_spec(vs, 2, 4, 4);
        spec.n_kv_heads = 2;
        CHECK_THROWS_AS(build_planted_model(spec, vocab, {0, 0}, kBoolOptions, 1), ConfigError);
    }
    SECTION("tied embeddings would break the baseline tie") {
        ModelSpec spec = small_spec(vs);
        spec.tied_embeddings = true;
        CHECK_THROWS_AS(build_planted_model(spec, vocab, {0, 0}, kBoolOptions, 1), ConfigError);
    }
    SECTION("option words must exist in the vocabulary") {
        CHECK_THROWS_AS(
            build_planted_model(small_spec(vs), vocab, {0, 0}, {"true", "zorple"}, 1),
            ConfigError);
    }
}
