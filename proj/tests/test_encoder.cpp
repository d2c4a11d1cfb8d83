#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "wsd/encoder.hpp"
#include "wsd/rng.hpp"
#include "grad_check.hpp"
#include "test_util.hpp"

using namespace wsd;
using namespace wsd::testutil;

namespace {

EncoderConfig small_config(std::uint64_t seed) {
    EncoderConfig cfg;
    cfg.embedding_dim = 6;
    cfg.hash_buckets = 64;
    cfg.context_window = 3;
    cfg.seed = seed;
    return cfg;
}

Instance sentence_instance(const std::string& id, std::vector<std::string> tokens,
                           std::size_t target) {
    Instance inst;
    inst.id = id;
    inst.tokens = std::move(tokens);
    inst.target_index = target;
    inst.word = {inst.tokens[target], Pos::Noun};
    return inst;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("config rejects degenerate shapes") {
    EncoderConfig cfg;
    cfg.embedding_dim = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = EncoderConfig{};
    cfg.hash_buckets = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("init is seed-deterministic") {
    const auto a = init_encoder(small_config(5));
    const auto b = init_encoder(small_config(5));
    const auto c = init_encoder(small_config(6));
    CHECK(a.theta.embeddings == b.theta.embeddings);
    CHECK(a.theta.embeddings != c.theta.embeddings);
}

TEST_CASE("init projection is the identity and bias is zero") {
    const auto model = init_encoder(small_config(1));
    const std::size_t d = model.config.embedding_dim;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            CHECK(model.theta.projection[i * d + j] == (i == j ? 1.0 : 0.0));
        }
    }
    for (double b : model.theta.bias) CHECK(b == 0.0);
    for (double e : model.theta.embeddings) {
        CHECK(e >= -0.05);
        CHECK(e <= 0.05);
    }
}

TEST_CASE("parameter count covers table, projection and bias") {
    EncoderConfig cfg;
    cfg.embedding_dim = 16;
    cfg.hash_buckets = 4096;
    CHECK(parameter_count(cfg) == 4096 * 16 + 16 * 16 + 16);
    cfg.gloss_encoder = true;
    CHECK(parameter_count(cfg) == 2 * (4096 * 16 + 16 * 16 + 16) + 16 * 16);
}

TEST_CASE("subunits are the lowercased token plus its trigrams") {
    const auto units = token_subunits("Abcd");
    REQUIRE(units.size() == 3);
    CHECK(units[0] == "abcd");
    CHECK(units[1] == "abc");
    CHECK(units[2] == "bcd");

    const auto tiny = token_subunits("of");
    REQUIRE(tiny.size() == 1);
    CHECK(tiny[0] == "of");
}

TEST_CASE("token vector is the mean of its subunit embedding rows") {
    auto model = init_encoder(small_config(2));
    const std::size_t d = model.config.embedding_dim;
    const auto units = token_subunits("abcd");
    REQUIRE(units.size() == 3);

    ContextVector expect(d, 0.0);
    for (const auto& unit : units) {
        const std::size_t row = subunit_bucket(unit, model.config.hash_buckets);
        for (std::size_t i = 0; i < d; ++i) {
            expect[i] += model.theta.embeddings[row * d + i] / 3.0;
        }
    }
    const auto got = token_vector(model, "abcd");
    for (std::size_t i = 0; i < d; ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("encode is pure") {
    const auto model = init_encoder(small_config(3));
    const auto inst = sentence_instance("x", {"the", "mint", "leaf", "tastes", "fresh"}, 1);
    CHECK(encode(model, inst) == encode(model, inst));
}

TEST_CASE("zero projection and bias produce the zero vector") {
    auto model = init_encoder(small_config(4));
    std::fill(model.theta.projection.begin(), model.theta.projection.end(), 0.0);
    const auto inst = sentence_instance("x", {"alpha", "beta", "gamma"}, 0);
    for (double v : encode(model, inst)) CHECK(v == 0.0);
}

TEST_CASE("encode blends the window mean with the target vector") {
    const auto model = init_encoder(small_config(5));
    const auto inst = sentence_instance("x", {"aaaa", "bbbb", "cccc"}, 1);
    const std::size_t d = model.config.embedding_dim;

    // Window covers all three tokens; identity projection and zero bias
    // reduce encode to 0.5 * mean(window) + 0.5 * target.
    ContextVector expect(d, 0.0);
    for (const auto* tok : {"aaaa", "bbbb", "cccc"}) {
        const auto v = token_vector(model, tok);
        for (std::size_t i = 0; i < d; ++i) expect[i] += 0.5 * v[i] / 3.0;
    }
    const auto target = token_vector(model, "bbbb");
    for (std::size_t i = 0; i < d; ++i) expect[i] += 0.5 * target[i];

    const auto got = encode(model, inst);
    for (std::size_t i = 0; i < d; ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("window clips at sentence edges") {
    auto cfg = small_config(6);
    cfg.context_window = 2;
    const auto model = init_encoder(cfg);
    // Target at position 0: window is tokens [0, 2] only.
    const auto inst = sentence_instance("x", {"aaaa", "bbbb", "cccc", "dddd", "eeee"}, 0);
    const std::size_t d = model.config.embedding_dim;

    ContextVector expect(d, 0.0);
    for (const auto* tok : {"aaaa", "bbbb", "cccc"}) {
        const auto v = token_vector(model, tok);
        for (std::size_t i = 0; i < d; ++i) expect[i] += 0.5 * v[i] / 3.0;
    }
    const auto target = token_vector(model, "aaaa");
    for (std::size_t i = 0; i < d; ++i) expect[i] += 0.5 * target[i];

    const auto got = encode(model, inst);
    for (std::size_t i = 0; i < d; ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("invalid target position is rejected") {
    const auto model = init_encoder(small_config(7));
    auto inst = sentence_instance("x", {"one", "two"}, 0);
    inst.target_index = 2;
    CHECK_THROWS_AS(encode(model, inst), DataError);
}

TEST_CASE("gloss encoding needs the gloss side enabled") {
    const auto model = init_encoder(small_config(8));
    CHECK_THROWS_AS(encode_gloss(model, {"a", "definition"}), ConfigError);
}

TEST_CASE("single-token gloss equals that token's gloss-side vector") {
    auto cfg = small_config(9);
    cfg.gloss_encoder = true;
    const auto model = init_encoder(cfg);
    const std::size_t d = cfg.embedding_dim;

    // Identity projection and zero bias: the gloss encoding is the mean of
    // gloss token vectors under the gloss-side table.
    const auto got = encode_gloss(model, {"abcd"});
    const auto units = token_subunits("abcd");
    ContextVector expect(d, 0.0);
    for (const auto& unit : units) {
        const std::size_t row = subunit_bucket(unit, cfg.hash_buckets);
        for (std::size_t i = 0; i < d; ++i) {
            expect[i] += model.phi->embeddings[row * d + i] / units.size();
        }
    }
    for (std::size_t i = 0; i < d; ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));

    // Repeating the gloss leaves the mean unchanged.
    const auto twice = encode_gloss(model, {"abcd", "abcd"});
    for (std::size_t i = 0; i < d; ++i) CHECK(twice[i] == doctest::Approx(got[i]).epsilon(1e-12));
}

TEST_CASE("disjoint-vocabulary glosses encode differently") {
    auto cfg = small_config(10);
    cfg.gloss_encoder = true;
    const auto model = init_encoder(cfg);
    CHECK(encode_gloss(model, {"paint", "with", "brush"}) !=
          encode_gloss(model, {"musical", "notation", "symbol"}));
    CHECK_THROWS_AS(encode_gloss(model, {}), DataError);
}

TEST_CASE("zero upstream leaves the gradient buffer untouched") {
    const auto model = init_encoder(small_config(11));
    GradBuffer grads(model.config);
    const auto inst = sentence_instance("x", {"alpha", "beta"}, 0);
    const ContextVector zero(model.config.embedding_dim, 0.0);
    encode_backward(model, inst, zero, grads);
    for (double g : grads.theta.embeddings) CHECK(g == 0.0);
    for (double g : grads.theta.projection) CHECK(g == 0.0);
    for (double g : grads.theta.bias) CHECK(g == 0.0);
}

TEST_CASE("projection gradient is the outer product of upstream and pooled input") {
    auto model = init_encoder(small_config(12));
    const std::size_t d = model.config.embedding_dim;
    const auto inst = sentence_instance("x", {"north", "wind", "blows"}, 1);

    // pooled = projection^-1 (encode - bias); with identity projection and
    // zero bias, encode returns pooled itself.
    const auto pooled = encode(model, inst);

    auto rng = derive_stream(99, {"upstream"});
    ContextVector upstream(d);
    for (double& u : upstream) u = rng.uniform(-1.0, 1.0);

    GradBuffer grads(model.config);
    encode_backward(model, inst, upstream, grads);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            CHECK(grads.theta.projection[i * d + j] ==
                  doctest::Approx(upstream[i] * pooled[j]).epsilon(1e-12));
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        CHECK(grads.theta.bias[i] == doctest::Approx(upstream[i]).epsilon(1e-12));
    }
}

TEST_CASE("analytic encoder gradient matches central finite differences") {
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
        auto model = init_encoder(small_config(20 + trial));
        const std::size_t d = model.config.embedding_dim;
        auto rng = derive_stream(trial, {"fd-encoder"});

        // Random sentence over a tiny vocabulary so buckets collide too.
        std::vector<std::string> tokens;
        const std::size_t len = 3 + rng.index(5);
        for (std::size_t i = 0; i < len; ++i) {
            tokens.push_back("tok" + std::to_string(rng.index(6)));
        }
        const auto inst =
            sentence_instance("fd", tokens, rng.index(tokens.size()));

        ContextVector upstream(d);
        for (double& u : upstream) u = rng.uniform(-1.0, 1.0);

        GradBuffer grads(model.config);
        encode_backward(model, inst, upstream, grads);

        const auto loss = [&] {
            const auto v = encode(model, inst);
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) acc += upstream[i] * v[i];
            return acc;
        };
        const auto report = fd_check(
            {{model.theta.embeddings, grads.theta.embeddings},
             {model.theta.projection, grads.theta.projection},
             {model.theta.bias, grads.theta.bias}},
            loss);
        CHECK(report.touched > 0);
        CHECK(report.max_rel_err <= 1e-4);
    }
}

}  // TEST_SUITE
