#include <cmath>
#include <map>
#include <vector>

#include <doctest.h>

#include "wsd/metric.hpp"
#include "wsd/rng.hpp"
#include "grad_check.hpp"
#include "test_util.hpp"

using namespace wsd;
using namespace wsd::testutil;

namespace {

EncoderConfig tiny_encoder(std::uint64_t seed) {
    EncoderConfig cfg;
    cfg.embedding_dim = 6;
    cfg.hash_buckets = 64;
    cfg.context_window = 3;
    cfg.seed = seed;
    return cfg;
}

// Episode over one word whose senses carry distinct context vocabulary.
Episode make_episode(std::size_t senses, std::size_t supports_per_sense,
                     std::size_t queries_per_sense) {
    Episode ep;
    ep.word = {"probe", Pos::Noun};
    int next = 0;
    for (std::size_t j = 0; j < senses; ++j) {
        const SenseId sense = "probe|n" + std::to_string(j);
        const std::string marker = "marker" + std::to_string(j);
        for (std::size_t s = 0; s < supports_per_sense; ++s) {
            ep.support.push_back(
                {make_instance("s" + std::to_string(next++), ep.word, sense,
                               {marker, "ctx" + std::to_string(s)}),
                 sense});
        }
        for (std::size_t q = 0; q < queries_per_sense; ++q) {
            ep.query.push_back(
                {make_instance("q" + std::to_string(next++), ep.word, sense,
                               {marker, "other" + std::to_string(q)}),
                 sense});
        }
    }
    return ep;
}

SenseDistribution brute_force_probabilities(const std::vector<Prototype>& prototypes,
                                            const ContextVector& query, ScoreFn fn) {
    SenseDistribution out;
    double total = 0.0;
    for (const auto& proto : prototypes) {
        double s = 0.0;
        if (fn == ScoreFn::Dot) {
            for (std::size_t i = 0; i < query.size(); ++i) s += proto.vector[i] * query[i];
        } else {
            for (std::size_t i = 0; i < query.size(); ++i) {
                const double diff = proto.vector[i] - query[i];
                s -= diff * diff;
            }
        }
        out[proto.sense] = std::exp(s);
        total += std::exp(s);
    }
    for (auto& [sense, p] : out) p /= total;
    return out;
}

}  // namespace

TEST_SUITE("metric") {

TEST_CASE("single support vector is its own prototype") {
    const auto protos = compute_prototypes({{{1.0, 2.0, 3.0}, "a"}});
    REQUIRE(protos.size() == 1);
    CHECK(protos[0].vector == ContextVector{1.0, 2.0, 3.0});
    CHECK(protos[0].support_count == 1);
}

TEST_CASE("same-sense supports average") {
    const auto protos = compute_prototypes({{{1.0, 0.0}, "a"}, {{0.0, 1.0}, "a"}});
    REQUIRE(protos.size() == 1);
    CHECK(protos[0].vector == ContextVector{0.5, 0.5});
    CHECK(protos[0].support_count == 2);
}

TEST_CASE("prototypes match an independent per-sense mean") {
    auto rng = derive_stream(3, {"proto-oracle"});
    std::vector<std::pair<ContextVector, SenseId>> support;
    const std::vector<SenseId> senses{"a", "b", "c"};
    for (int i = 0; i < 30; ++i) {
        ContextVector v(4);
        for (double& x : v) x = rng.uniform(-2.0, 2.0);
        support.emplace_back(v, senses[rng.index(3)]);
    }

    const auto protos = compute_prototypes(support);
    for (const auto& proto : protos) {
        ContextVector mean(4, 0.0);
        std::size_t n = 0;
        for (const auto& [v, sense] : support) {
            if (sense != proto.sense) continue;
            ++n;
            for (std::size_t i = 0; i < 4; ++i) mean[i] += v[i];
        }
        REQUIRE(n == proto.support_count);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(proto.vector[i] == doctest::Approx(mean[i] / n).epsilon(1e-12));
        }
    }
}

TEST_CASE("prototype linearity under support scaling") {
    const std::vector<std::pair<ContextVector, SenseId>> support{
        {{1.0, 2.0}, "a"}, {{3.0, 4.0}, "a"}, {{5.0, 6.0}, "b"}};
    auto scaled = support;
    for (auto& [v, sense] : scaled) {
        for (double& x : v) x *= 2.5;
    }
    const auto base = compute_prototypes(support);
    const auto big = compute_prototypes(scaled);
    for (std::size_t j = 0; j < base.size(); ++j) {
        for (std::size_t i = 0; i < base[j].vector.size(); ++i) {
            CHECK(big[j].vector[i] == doctest::Approx(2.5 * base[j].vector[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("scores evaluate their formulas") {
    CHECK(score({1.0, 2.0}, {3.0, 4.0}, ScoreFn::Dot) == 11.0);
    CHECK(score({1.5, -2.0}, {1.5, -2.0}, ScoreFn::NegSqL2) == 0.0);
    CHECK(score({1.5, -2.0}, {1.5, -1.0}, ScoreFn::NegSqL2) < 0.0);
    CHECK_THROWS_AS(score({1.0}, {1.0, 2.0}, ScoreFn::Dot), DataError);
}

TEST_CASE("equal-norm prototypes rank identically under both score functions") {
    auto rng = derive_stream(11, {"norm-check"});
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Prototype> protos;
        for (int j = 0; j < 4; ++j) {
            ContextVector v(5);
            double norm = 0.0;
            for (double& x : v) {
                x = rng.uniform(-1.0, 1.0);
                norm += x * x;
            }
            norm = std::sqrt(norm);
            for (double& x : v) x /= norm;
            protos.push_back({"s" + std::to_string(j), v, 1});
        }
        ContextVector query(5);
        for (double& x : query) x = rng.uniform(-1.0, 1.0);

        auto argmax = [&](ScoreFn fn) {
            SenseId best;
            double best_score = -1e300;
            for (const auto& proto : protos) {
                const double s = score(proto.vector, query, fn);
                if (s > best_score) {
                    best_score = s;
                    best = proto.sense;
                }
            }
            return best;
        };
        CHECK(argmax(ScoreFn::Dot) == argmax(ScoreFn::NegSqL2));
    }
}

TEST_CASE("softmax handles the listed cases") {
    const auto one = class_probabilities({{"only", {1.0, 1.0}, 1}}, {0.3, 0.4}, ScoreFn::Dot);
    CHECK(one.at("only") == 1.0);

    // Two prototypes equidistant from the query score equally.
    const auto even = class_probabilities(
        {{"a", {1.0, 0.0}, 1}, {"b", {0.0, 1.0}, 1}}, {0.5, 0.5}, ScoreFn::Dot);
    CHECK(even.at("a") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(even.at("b") == doctest::Approx(0.5).epsilon(1e-12));

    const auto skew = softmax({{"hi", 1.0}, {"lo", 0.0}});
    const double e = std::exp(1.0);
    CHECK(skew.at("hi") == doctest::Approx(e / (e + 1.0)).epsilon(1e-9));
    CHECK(skew.at("lo") == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-9));
    CHECK(skew.at("hi") == doctest::Approx(0.73106).epsilon(1e-4));
    CHECK(skew.at("lo") == doctest::Approx(0.26894).epsilon(1e-4));
}

TEST_CASE("softmax is shift-invariant and sums to one") {
    auto rng = derive_stream(17, {"softmax-shift"});
    for (int trial = 0; trial < 100; ++trial) {
        std::map<SenseId, double> scores;
        const int n = 2 + static_cast<int>(rng.index(4));
        for (int j = 0; j < n; ++j) {
            scores["s" + std::to_string(j)] = rng.uniform(-30.0, 30.0);
        }
        const auto base = softmax(scores);
        double total = 0.0;
        for (const auto& [sense, p] : base) total += p;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

        auto shifted = scores;
        const double shift = rng.uniform(-100.0, 100.0);
        for (auto& [sense, s] : shifted) s += shift;
        const auto moved = softmax(shifted);
        for (const auto& [sense, p] : base) {
            CHECK(moved.at(sense) == doctest::Approx(p).epsilon(1e-9));
        }
    }
}

TEST_CASE("probabilities match a brute-force softmax on random prototype sets") {
    auto rng = derive_stream(23, {"softmax-oracle"});
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 2 + rng.index(7);
        const std::size_t senses = 1 + rng.index(5);
        std::vector<Prototype> protos;
        for (std::size_t j = 0; j < senses; ++j) {
            ContextVector v(d);
            for (double& x : v) x = rng.uniform(-3.0, 3.0);
            protos.push_back({"s" + std::to_string(j), v, 1});
        }
        ContextVector query(d);
        for (double& x : query) x = rng.uniform(-3.0, 3.0);
        const ScoreFn fn = trial % 2 == 0 ? ScoreFn::Dot : ScoreFn::NegSqL2;

        const auto fast = class_probabilities(protos, query, fn);
        const auto slow = brute_force_probabilities(protos, query, fn);
        for (const auto& [sense, p] : slow) {
            CHECK(std::fabs(fast.at(sense) - p) <= 1e-9);
        }
    }
}

TEST_CASE("translating prototypes and query together preserves squared-distance scores") {
    auto rng = derive_stream(29, {"translate"});
    ContextVector proto(4), query(4), shift(4);
    for (double& x : proto) x = rng.uniform(-1.0, 1.0);
    for (double& x : query) x = rng.uniform(-1.0, 1.0);
    for (double& x : shift) x = rng.uniform(-5.0, 5.0);
    ContextVector proto2 = proto, query2 = query;
    for (std::size_t i = 0; i < 4; ++i) {
        proto2[i] += shift[i];
        query2[i] += shift[i];
    }
    CHECK(score(proto2, query2, ScoreFn::NegSqL2) ==
          doctest::Approx(score(proto, query, ScoreFn::NegSqL2)).epsilon(1e-12));
}

TEST_CASE("uninformative encodings give loss ln J") {
    auto model = init_encoder(tiny_encoder(31));
    std::fill(model.theta.projection.begin(), model.theta.projection.end(), 0.0);
    // Every encoding is now the zero vector: all scores equal.
    for (std::size_t senses : {2, 3, 4}) {
        const auto ep = make_episode(senses, 2, 2);
        const auto res = episode_loss(ep, model, ScoreFn::Dot);
        CHECK(res.loss == doctest::Approx(std::log(static_cast<double>(senses))).epsilon(1e-12));
        CHECK(res.retained_queries == ep.query.size());
    }
}

TEST_CASE("episode loss rejects an episode with no scorable query") {
    auto model = init_encoder(tiny_encoder(37));
    Episode ep = make_episode(2, 2, 1);
    // Relabel every query to a sense absent from the support.
    for (auto& ex : ep.query) ex.sense = "probe|n9";
    ep.dropped_query_count = ep.query.size();
    CHECK_THROWS_AS(episode_loss(ep, model, ScoreFn::Dot), DataError);
}

TEST_CASE("queries with unsupported senses are excluded from the loss") {
    auto model = init_encoder(tiny_encoder(41));
    Episode ep = make_episode(2, 2, 2);
    const double base = episode_loss(ep, model, ScoreFn::Dot).loss;

    Episode extra = ep;
    auto ghost = make_instance("ghost", ep.word, "probe|n9", {"noise"});
    extra.query.push_back({ghost, "probe|n9"});
    extra.dropped_query_count = 1;
    const auto res = episode_loss(extra, model, ScoreFn::Dot);
    CHECK(res.retained_queries == ep.query.size());
    CHECK(res.loss == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("one small gradient step reduces the loss on a fixed episode") {
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto model = init_encoder(tiny_encoder(100 + seed));
        const auto ep = make_episode(2 + seed % 2, 3, 2);
        const ScoreFn fn = seed % 2 == 0 ? ScoreFn::Dot : ScoreFn::NegSqL2;

        GradBuffer grads(model.config);
        const double before = episode_loss(ep, model, fn, &grads).loss;

        const double lr = 1e-3;
        for (std::size_t i = 0; i < model.theta.embeddings.size(); ++i) {
            model.theta.embeddings[i] -= lr * grads.theta.embeddings[i];
        }
        for (std::size_t i = 0; i < model.theta.projection.size(); ++i) {
            model.theta.projection[i] -= lr * grads.theta.projection[i];
        }
        for (std::size_t i = 0; i < model.theta.bias.size(); ++i) {
            model.theta.bias[i] -= lr * grads.theta.bias[i];
        }
        const double after = episode_loss(ep, model, fn).loss;
        if (after >= before) ++failures;
    }
    CHECK(failures <= 1);
}

TEST_CASE("episode gradient matches central finite differences") {
    for (std::uint64_t trial = 0; trial < 6; ++trial) {
        auto model = init_encoder(tiny_encoder(200 + trial));
        const auto ep = make_episode(2 + trial % 3, 2, 2);
        const ScoreFn fn = trial % 2 == 0 ? ScoreFn::Dot : ScoreFn::NegSqL2;

        GradBuffer grads(model.config);
        episode_loss(ep, model, fn, &grads);

        const auto loss = [&] { return episode_loss(ep, model, fn).loss; };
        const auto report = fd_check(
            {{model.theta.embeddings, grads.theta.embeddings},
             {model.theta.projection, grads.theta.projection},
             {model.theta.bias, grads.theta.bias}},
            loss);
        CHECK(report.touched > 0);
        CHECK(report.max_rel_err <= 1e-4);
    }
}

TEST_CASE("threaded episode evaluation is bitwise equal to serial") {
    auto model = init_encoder(tiny_encoder(51));
    const auto ep = make_episode(3, 4, 3);

    GradBuffer serial(model.config);
    GradBuffer threaded(model.config);
    const auto a = episode_loss(ep, model, ScoreFn::Dot, &serial, 1);
    const auto b = episode_loss(ep, model, ScoreFn::Dot, &threaded, 4);

    CHECK(a.loss == b.loss);
    CHECK(serial.theta.embeddings == threaded.theta.embeddings);
    CHECK(serial.theta.projection == threaded.theta.projection);
    CHECK(serial.theta.bias == threaded.theta.bias);
}

TEST_CASE("pair scores average per sense") {
    const auto scores = cross_encoder_sense_scores({{"a", {1.0, 3.0}}, {"b", {5.0}}});
    CHECK(scores.at("a") == 2.0);
    CHECK(scores.at("b") == 5.0);
    CHECK_THROWS_AS(cross_encoder_sense_scores({{"a", {}}}), DataError);
}

TEST_CASE("pair-score aggregation is order invariant") {
    const auto forward = cross_encoder_sense_scores({{"a", {1.0, 2.0, 4.0}}});
    const auto backward = cross_encoder_sense_scores({{"a", {4.0, 2.0, 1.0}}});
    CHECK(forward.at("a") == backward.at("a"));
}

TEST_CASE("aggregated pair probabilities match brute force") {
    auto rng = derive_stream(61, {"pair-oracle"});
    const std::size_t d = 4;
    BilinearPairScorer scorer(d);
    for (double& m : scorer.matrix) m = rng.uniform(-1.0, 1.0);

    for (int trial = 0; trial < 100; ++trial) {
        std::map<SenseId, std::vector<ContextVector>> supports;
        for (int j = 0; j < 3; ++j) {
            auto& list = supports["s" + std::to_string(j)];
            const std::size_t n = 1 + rng.index(4);
            for (std::size_t k = 0; k < n; ++k) {
                ContextVector v(d);
                for (double& x : v) x = rng.uniform(-1.0, 1.0);
                list.push_back(v);
            }
        }
        ContextVector query(d);
        for (double& x : query) x = rng.uniform(-1.0, 1.0);

        const auto fast = cross_encoder_probabilities(supports, query, scorer);

        std::map<SenseId, double> means;
        double total = 0.0;
        for (const auto& [sense, vecs] : supports) {
            double sum = 0.0;
            for (const auto& v : vecs) {
                double s = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    for (std::size_t j = 0; j < d; ++j) {
                        s += v[i] * scorer.matrix[i * d + j] * query[j];
                    }
                }
                sum += s;
            }
            means[sense] = sum / vecs.size();
        }
        for (auto& [sense, m] : means) m = std::exp(m);
        for (const auto& [sense, m] : means) total += m;
        for (const auto& [sense, m] : means) {
            CHECK(std::fabs(fast.at(sense) - m / total) <= 1e-9);
        }
    }
}

TEST_CASE("gloss-combined score peaks when everything coincides") {
    const std::size_t d = 3;
    std::vector<double> identity(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) identity[i * d + i] = 1.0;

    const ContextVector v{0.4, -0.2, 1.0};
    CHECK(gloss_combined_score(v, &v, identity, v) == 0.0);

    // Fallback drops the gloss term entirely.
    const ContextVector q{1.0, 0.0, 0.0};
    CHECK(gloss_combined_score(v, nullptr, identity, q) ==
          doctest::Approx(score(v, q, ScoreFn::NegSqL2)).epsilon(1e-12));
}

TEST_CASE("gloss-combined score matches hand arithmetic on random cases") {
    auto rng = derive_stream(67, {"gloss-oracle"});
    const std::size_t d = 4;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> projection(d * d);
        for (double& x : projection) x = rng.uniform(-1.0, 1.0);
        ContextVector proto(d), gloss(d), query(d);
        for (double& x : proto) x = rng.uniform(-1.0, 1.0);
        for (double& x : gloss) x = rng.uniform(-1.0, 1.0);
        for (double& x : query) x = rng.uniform(-1.0, 1.0);

        double expect = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double dp = proto[i] - query[i];
            expect -= dp * dp;
            double wg = 0.0;
            for (std::size_t j = 0; j < d; ++j) wg += projection[i * d + j] * gloss[j];
            const double dg = wg - query[i];
            expect -= dg * dg;
        }
        CHECK(std::fabs(gloss_combined_score(proto, &gloss, projection, query) - expect) <=
              1e-9);
    }
}

TEST_CASE("gloss-combined probabilities count fallbacks") {
    const std::size_t d = 2;
    std::vector<double> identity{1.0, 0.0, 0.0, 1.0};
    std::vector<Prototype> protos{{"a", {1.0, 0.0}, 1}, {"b", {0.0, 1.0}, 1}};
    std::map<SenseId, ContextVector> glosses{{"a", {1.0, 0.0}}};

    std::size_t fallbacks = 0;
    const auto probs =
        gloss_combined_probabilities(protos, glosses, identity, {1.0, 0.0}, &fallbacks);
    CHECK(fallbacks == 1);
    CHECK(probs.at("a") > probs.at("b"));  // sense a agrees with both terms
    (void)d;
}

}  // TEST_SUITE
