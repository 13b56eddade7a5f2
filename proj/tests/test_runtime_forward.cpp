#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "qkprobe/runtime/forward.hpp"
#include "support/reference_forward.hpp"

using namespace qkprobe;
using namespace qkprobe::runtime;

namespace {

std::vector<std::string> toy_vocab(int size) {
    std::vector<std::string> v = {"<unk>", "<eol>", "<eol+>", "<eol->"};
    for (int i = static_cast<int>(v.size()); i < size; ++i) v.push_back("w" + std::to_string(i));
    return v;
}

PromptLayout toy_layout(const ModelSpec& spec, uint64_t seed, int len = 12) {
    Rng rng(seed);
    PromptLayout layout;
    for (int i = 0; i < len; ++i)
        layout.token_ids.push_back(static_cast<int>(rng.uniform(spec.vocab_size)));
    layout.pos_a0 = 1;
    layout.pos_a1 = 3;
    layout.pos_s = len - 3;
    layout.pos_final = len - 1;
    layout.template_id = "test";
    return layout;
}

void check_against_reference(const Model& m, const PromptLayout& layout, double tol) {
    QKCapture cap = forward_capture(m, layout);
    refimpl::RefResult ref = refimpl::reference_forward(m, layout);

    for (int i = 0; i < m.spec.vocab_size; ++i) {
        INFO("logit " << i);
        REQUIRE(std::abs(cap.logits_final[i] - ref.logits[i]) < tol);
    }
    for (int l = 0; l < m.spec.n_layers; ++l) {
        for (int h = 0; h < m.spec.n_heads; ++h) {
            INFO("layer " << l << " head " << h);
            const HeadVectors& pre = cap.at(Variant::PrePositional, {l, h});
            const HeadVectors& post = cap.at(Variant::PostPositional, {l, h});
            for (int c = 0; c < m.spec.head_dim; ++c) {
                REQUIRE(std::abs(pre.q_a0[c] - ref.q_a0_pre[l][h][c]) < tol);
                REQUIRE(std::abs(pre.q_a1[c] - ref.q_a1_pre[l][h][c]) < tol);
                REQUIRE(std::abs(pre.k_s[c] - ref.k_s_pre[l][h][c]) < tol);
                REQUIRE(std::abs(post.q_a0[c] - ref.q_a0_post[l][h][c]) < tol);
                REQUIRE(std::abs(post.q_a1[c] - ref.q_a1_post[l][h][c]) < tol);
                REQUIRE(std::abs(post.k_s[c] - ref.k_s_post[l][h][c]) < tol);
            }
        }
    }
}

}  // namespace

TEST_CASE("the forward pass matches the naive reference across configurations") {
    SECTION("layernorm, plain gelu, no positional encoding") {
        ModelSpec s;
        s.n_layers = 2;
        s.n_heads = 4;
        s.n_kv_heads = 4;
        s.head_dim = 8;
        s.d_model = 32;
        s.d_ff = 48;
        s.vocab_size = 24;
        s.norm = Norm::LayerNorm;
        s.positional = Positional::None;
        s.ffn = Ffn::Gelu;
        Model m = random_model(s, toy_vocab(s.vocab_size), 11);
        check_against_reference(m, toy_layout(s, 1), 1e-5);
    }
    SECTION("rmsnorm, gated feed-forward, rotary, tied embeddings") {
        ModelSpec s;
        s.n_layers = 3;
        s.n_heads = 4;
        s.n_kv_heads = 4;
        s.head_dim = 8;
        s.d_model = 32;
        s.d_ff = 64;
        s.vocab_size = 30;
        s.norm = Norm::RmsNorm;
        s.positional = Positional::Rope;
        s.ffn = Ffn::Gated;
        s.tied_embeddings = true;
        Model m = random_model(s, toy_vocab(s.vocab_size), 12);
        check_against_reference(m, toy_layout(s, 2, 16), 1e-5);
    }
    SECTION("grouped-query attention") {
        ModelSpec s;
        s.n_layers = 2;
        s.n_heads = 4;
        s.n_kv_heads = 2;
        s.head_dim = 6;
        s.d_model = 24;
        s.d_ff = 32;
        s.vocab_size = 18;
        s.norm = Norm::RmsNorm;
        s.positional = Positional::Rope;
        s.ffn = Ffn::Gelu;
        Model m = random_model(s, toy_vocab(s.vocab_size), 13);
        check_against_reference(m, toy_layout(s, 3, 10), 1e-5);
    }
    SECTION("layernorm with gated feed-forward and rotary") {
        ModelSpec s;
        s.n_layers = 1;
        s.n_heads = 2;
        s.n_kv_heads = 1;
        s.head_dim = 8;
        s.d_model = 16;
        s.d_ff = 24;
        s.vocab_size = 12;
        s.norm = Norm::LayerNorm;
        s.positional = Positional::Rope;
        s.ffn = Ffn::Gated;
        Model m = random_model(s, toy_vocab(s.vocab_size), 14);
        check_against_reference(m, toy_layout(s, 4, 8), 1e-5);
    }
}

TEST_CASE("attention rows are normalized and strictly causal") {
    ModelSpec s;
    s.n_layers = 2;
    s.n_heads = 4;
    s.n_kv_heads = 2;
    s.head_dim = 8;
    s.d_model = 32;
    s.d_ff = 48;
    s.vocab_size = 20;
    Model m = random_model(s, toy_vocab(s.vocab_size), 21);
    PromptLayout layout = toy_layout(s, 5, 12);
    refimpl::RefResult ref = refimpl::reference_forward(m, layout);

    for (int l = 0; l < s.n_layers; ++l)
        for (int h = 0; h < s.n_heads; ++h)
            for (size_t i = 0; i < ref.attention[l][h].size(); ++i) {
                double sum = 0;
                for (size_t j = 0; j < ref.attention[l][h][i].size(); ++j) {
                    if (j > i) REQUIRE(ref.attention[l][h][i][j] == 0.0);
                    sum += ref.attention[l][h][i][j];
                }
                REQUIRE(std::abs(sum - 1.0) < 1e-6);
            }
}

TEST_CASE("captured queries recompute from raw weights") {
    ModelSpec s;
    s.n_layers = 2;
    s.n_heads = 4;
    s.n_kv_heads = 4;
    s.head_dim = 8;
    s.d_model = 32;
    s.d_ff = 48;
    s.vocab_size = 20;
    Model m = random_model(s, toy_vocab(s.vocab_size), 31);
    PromptLayout layout = toy_layout(s, 6, 10);
    QKCapture cap = forward_capture(m, layout);

    // layer 0 by hand: rms-normalize the embedding row, multiply the head's
    // W_Q slice, compare to the pre-rotation capture
    const Tensor& emb = m.tensor("tok_embeddings.weight");
    const Tensor& nw = m.tensor("layers.0.attn_norm.weight");
    const Tensor& wq = m.tensor("layers.0.attn.wq.weight");
    int tok = layout.token_ids[layout.pos_a0];
    std::vector<double> xn(s.d_model);
    double ms = 0;
    for (int c = 0; c < s.d_model; ++c) {
        double e = emb.data[static_cast<size_t>(tok) * s.d_model + c];
        ms += e * e;
    }
    double inv = 1.0 / std::sqrt(ms / s.d_model + 1e-5);
    for (int c = 0; c < s.d_model; ++c)
        xn[c] = emb.data[static_cast<size_t>(tok) * s.d_model + c] * inv * nw.data[c];

    for (int h = 0; h < s.n_heads; ++h) {
        const HeadVectors& hv = cap.at(Variant::PrePositional, {0, h});
        for (int r = 0; r < s.head_dim; ++r) {
            double acc = 0;
            for (int c = 0; c < s.d_model; ++c)
                acc += wq.data[static_cast<size_t>(h * s.head_dim + r) * s.d_model + c] * xn[c];
            REQUIRE(std::abs(hv.q_a0[r] - acc) < 1e-5);
        }
    }
}

TEST_CASE("rotary rotation preserves relative position") {
    Rng rng(77);
    const int hd = 8;
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<float> q(hd), k(hd);
        for (auto& v : q) v = static_cast<float>(rng.real01() * 2.0 - 1.0);
        for (auto& v : k) v = static_cast<float>(rng.real01() * 2.0 - 1.0);
        int p = rng.range(0, 60);
        int p2 = rng.range(0, 60);
        int delta = rng.range(0, 40);

        auto rotated_dot = [&](int pq, int pk) {
            std::vector<float> qq = q, kk = k;
            apply_rope(qq.data(), hd, pq, 10000.0);
            apply_rope(kk.data(), hd, pk, 10000.0);
            double dot = 0;
            for (int c = 0; c < hd; ++c) dot += static_cast<double>(qq[c]) * kk[c];
            return dot;
        };
        REQUIRE(std::abs(rotated_dot(p + delta, p2 + delta) - rotated_dot(p, p2)) < 1e-6);
        ++checked;
    }
    REQUIRE(checked == 1000);
}

TEST_CASE("pre-rotation captures are identical with rotation disabled") {
    ModelSpec s;
    s.n_layers = 2;
    s.n_heads = 4;
    s.n_kv_heads = 4;
    s.head_dim = 8;
    s.d_model = 32;
    s.d_ff = 48;
    s.vocab_size = 20;
    s.positional = Positional::Rope;
    Model m = random_model(s, toy_vocab(s.vocab_size), 41);
    Model frozen = m;
    frozen.spec.positional = Positional::None;

    PromptLayout layout = toy_layout(s, 7, 12);
    QKCapture with_rope = forward_capture(m, layout);
    QKCapture without = forward_capture(frozen, layout);

    for (int h = 0; h < s.n_heads; ++h) {
        // layer 0 sees the same residual stream either way
        REQUIRE(with_rope.at(Variant::PrePositional, {0, h}).q_a0 ==
                without.at(Variant::PrePositional, {0, h}).q_a0);
        REQUIRE(with_rope.at(Variant::PrePositional, {0, h}).k_s ==
                without.at(Variant::PrePositional, {0, h}).k_s);
        // with rotation disabled the two variants coincide
        REQUIRE(without.at(Variant::PrePositional, {1, h}).q_a1 ==
                without.at(Variant::PostPositional, {1, h}).q_a1);
        REQUIRE(without.at(Variant::PrePositional, {1, h}).k_s ==
                without.at(Variant::PostPositional, {1, h}).k_s);
    }
}

TEST_CASE("grouped heads share their group's key capture") {
    ModelSpec s;
    s.n_layers = 1;
    s.n_heads = 4;
    s.n_kv_heads = 2;
    s.head_dim = 8;
    s.d_model = 32;
    s.d_ff = 48;
    s.vocab_size = 20;
    Model m = random_model(s, toy_vocab(s.vocab_size), 51);
    QKCapture cap = forward_capture(m, toy_layout(s, 8, 10));

    REQUIRE(cap.at(Variant::PrePositional, {0, 0}).k_s == cap.at(Variant::PrePositional, {0, 1}).k_s);
    REQUIRE(cap.at(Variant::PrePositional, {0, 2}).k_s == cap.at(Variant::PrePositional, {0, 3}).k_s);
    REQUIRE(cap.at(Variant::PrePositional, {0, 0}).k_s != cap.at(Variant::PrePositional, {0, 2}).k_s);
}

TEST_CASE("forward passes are bitwise deterministic") {
    ModelSpec s;
    s.n_layers = 2;
    s.n_heads = 4;
    s.n_kv_heads = 4;
    s.head_dim = 8;
    s.d_model = 32;
    s.d_ff = 48;
    s.vocab_size = 20;
    Model m = random_model(s, toy_vocab(s.vocab_size), 61);
    PromptLayout layout = toy_layout(s, 9, 12);
    QKCapture a = forward_capture(m, layout);
    QKCapture b = forward_capture(m, layout);
    REQUIRE(a.logits_final == b.logits_final);
    for (int l = 0; l < s.n_layers; ++l)
        for (int h = 0; h < s.n_heads; ++h) {
            REQUIRE(a.at(Variant::PostPositional, {l, h}).q_a0 ==
                    b.at(Variant::PostPositional, {l, h}).q_a0);
            REQUIRE(a.at(Variant::PostPositional, {l, h}).k_s ==
                    b.at(Variant::PostPositional, {l, h}).k_s);
        }
}

TEST_CASE("sequence and head bounds are enforced") {
    ModelSpec s;
    s.n_layers = 1;
    s.n_heads = 2;
    s.n_kv_heads = 2;
    s.head_dim = 8;
    s.d_model = 16;
    s.d_ff = 24;
    s.vocab_size = 12;
    s.context_limit = 8;
    Model m = random_model(s, toy_vocab(s.vocab_size), 71);
    REQUIRE_THROWS_AS(forward_capture(m, toy_layout(s, 10, 9)), SequenceTooLong);

    QKCapture cap = forward_capture(m, toy_layout(s, 10, 8));
    REQUIRE_THROWS_AS(cap.at(Variant::PrePositional, {0, 2}), HeadOutOfRange);
    REQUIRE_THROWS_AS(cap.at(Variant::PrePositional, {1, 0}), HeadOutOfRange);
}
