#include "wsd/metric.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include "wsd/errors.hpp"

namespace wsd {

ScoreFn score_fn_from_string(const std::string& name) {
    if (name == "dot") return ScoreFn::Dot;
    if (name == "neg_sq_l2") return ScoreFn::NegSqL2;
    throw ConfigError("unknown score_fn '" + name + "' (expected dot or neg_sq_l2)");
}

std::string score_fn_to_string(ScoreFn fn) {
    return fn == ScoreFn::Dot ? "dot" : "neg_sq_l2";
}

std::vector<Prototype> compute_prototypes(
    const std::vector<std::pair<ContextVector, SenseId>>& support) {
    if (support.empty()) throw DataError("cannot compute prototypes from empty support");
    const std::size_t d = support.front().first.size();

    std::map<SenseId, Prototype> by_sense;
    for (const auto& [vec, sense] : support) {
        if (vec.size() != d) throw DataError("support vectors have mismatched dimensions");
        auto [it, inserted] = by_sense.try_emplace(sense);
        if (inserted) {
            it->second.sense = sense;
            it->second.vector.assign(d, 0.0);
        }
        for (std::size_t i = 0; i < d; ++i) it->second.vector[i] += vec[i];
        ++it->second.support_count;
    }

    std::vector<Prototype> out;
    out.reserve(by_sense.size());
    for (auto& [sense, proto] : by_sense) {
        const double inv = 1.0 / static_cast<double>(proto.support_count);
        for (double& v : proto.vector) v *= inv;
        out.push_back(std::move(proto));
    }
    return out;
}

double score(const ContextVector& proto_vec, const ContextVector& query_vec, ScoreFn fn) {
    if (proto_vec.size() != query_vec.size()) {
        throw DataError("score: vector dimensions differ");
    }
    double acc = 0.0;
    if (fn == ScoreFn::Dot) {
        for (std::size_t i = 0; i < proto_vec.size(); ++i) acc += proto_vec[i] * query_vec[i];
    } else {
        for (std::size_t i = 0; i < proto_vec.size(); ++i) {
            const double diff = proto_vec[i] - query_vec[i];
            acc -= diff * diff;
        }
    }
    return acc;
}

SenseDistribution softmax(const std::map<SenseId, double>& scores) {
    if (scores.empty()) throw DataError("softmax over empty score set");
    double max_score = scores.begin()->second;
    for (const auto& [sense, s] : scores) max_score = std::max(max_score, s);

    SenseDistribution probs;
    double total = 0.0;
    for (const auto& [sense, s] : scores) {
        const double e = std::exp(s - max_score);
        probs[sense] = e;
        total += e;
    }
    for (auto& [sense, p] : probs) p /= total;
    return probs;
}

SenseDistribution class_probabilities(const std::vector<Prototype>& prototypes,
                                      const ContextVector& query_vec, ScoreFn fn) {
    if (prototypes.empty()) throw DataError("class_probabilities needs at least one prototype");
    std::map<SenseId, double> scores;
    for (const auto& proto : prototypes) {
        scores[proto.sense] = score(proto.vector, query_vec, fn);
    }
    return softmax(scores);
}

namespace {

// Encodes instances[indices] into slots, optionally across threads. Each
// slot is written by exactly one task, so results do not depend on the
// thread count.
void encode_batch(const EncoderModel& model, const std::vector<const Instance*>& instances,
                  std::vector<ContextVector>& out, std::size_t threads) {
    out.resize(instances.size());
    if (threads <= 1 || instances.size() <= 1) {
        for (std::size_t i = 0; i < instances.size(); ++i) out[i] = encode(model, *instances[i]);
        return;
    }
    const std::size_t workers = std::min(threads, instances.size());
    std::vector<std::future<void>> futures;
    futures.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < instances.size(); i += workers) {
                out[i] = encode(model, *instances[i]);
            }
        }));
    }
    for (auto& f : futures) f.get();
}

}  // namespace

EpisodeLossResult episode_loss(const Episode& episode, const EncoderModel& model, ScoreFn fn,
                               GradBuffer* grads, std::size_t threads) {
    const auto senses = episode.support_senses();
    if (episode.support.empty()) throw DataError("episode has no support examples");

    std::vector<const Instance*> retained;
    std::vector<const SenseId*> retained_gold;
    for (const auto& ex : episode.query) {
        if (senses.count(ex.sense) > 0) {
            retained.push_back(&ex.instance);
            retained_gold.push_back(&ex.sense);
        }
    }
    if (retained.empty()) throw DataError("episode for '" + episode.word.str() +
                                          "' has no query with a supported sense");

    std::vector<const Instance*> support_instances;
    support_instances.reserve(episode.support.size());
    for (const auto& ex : episode.support) support_instances.push_back(&ex.instance);

    std::vector<ContextVector> support_vecs;
    std::vector<ContextVector> query_vecs;
    encode_batch(model, support_instances, support_vecs, threads);
    encode_batch(model, retained, query_vecs, threads);

    std::vector<std::pair<ContextVector, SenseId>> labeled;
    labeled.reserve(support_vecs.size());
    for (std::size_t i = 0; i < support_vecs.size(); ++i) {
        labeled.emplace_back(support_vecs[i], episode.support[i].sense);
    }
    const auto prototypes = compute_prototypes(labeled);

    std::map<SenseId, std::size_t> proto_index;
    for (std::size_t j = 0; j < prototypes.size(); ++j) proto_index[prototypes[j].sense] = j;

    const std::size_t d = model.config.embedding_dim;
    const double inv_m = 1.0 / static_cast<double>(retained.size());

    EpisodeLossResult result;
    result.retained_queries = retained.size();

    // Upstream gradients w.r.t. each prototype and each retained query
    // encoding, filled during the forward pass.
    std::vector<ContextVector> d_proto(prototypes.size(), ContextVector(d, 0.0));
    std::vector<ContextVector> d_query(retained.size(), ContextVector(d, 0.0));

    for (std::size_t m = 0; m < retained.size(); ++m) {
        std::map<SenseId, double> scores;
        for (const auto& proto : prototypes) {
            scores[proto.sense] = score(proto.vector, query_vecs[m], fn);
        }
        const auto probs = softmax(scores);

        const SenseId& gold = *retained_gold[m];
        const double p_gold = probs.at(gold);
        if (!(p_gold > 0.0)) {
            throw NumericError("query probability underflowed to zero in episode for '" +
                               episode.word.str() + "'");
        }
        result.loss += -std::log(p_gold) * inv_m;

        const auto argmax =
            std::max_element(probs.begin(), probs.end(), [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second < b.second;
                return a.first > b.first;  // tie prefers the smaller sense id
            });
        if (argmax->first == gold) ++result.correct;

        if (grads == nullptr) continue;
        for (const auto& [sense, p] : probs) {
            const double ds = (p - (sense == gold ? 1.0 : 0.0)) * inv_m;
            const std::size_t j = proto_index.at(sense);
            const auto& c = prototypes[j].vector;
            const auto& q = query_vecs[m];
            if (fn == ScoreFn::Dot) {
                for (std::size_t i = 0; i < d; ++i) {
                    d_proto[j][i] += ds * q[i];
                    d_query[m][i] += ds * c[i];
                }
            } else {
                for (std::size_t i = 0; i < d; ++i) {
                    const double diff = c[i] - q[i];
                    d_proto[j][i] += ds * (-2.0 * diff);
                    d_query[m][i] += ds * (2.0 * diff);
                }
            }
        }
    }

    if (!std::isfinite(result.loss)) {
        throw NumericError("non-finite episode loss for '" + episode.word.str() + "'");
    }
    if (grads == nullptr) return result;

    // Prototype mean: each support encoding of sense j receives d_proto[j] /
    // support_count. Accumulation runs in a fixed order (supports, then
    // queries) regardless of the thread count.
    ContextVector upstream(d);
    for (std::size_t i = 0; i < episode.support.size(); ++i) {
        const std::size_t j = proto_index.at(episode.support[i].sense);
        const double inv_n = 1.0 / static_cast<double>(prototypes[j].support_count);
        for (std::size_t t = 0; t < d; ++t) upstream[t] = d_proto[j][t] * inv_n;
        encode_backward(model, *support_instances[i], upstream, *grads);
    }
    for (std::size_t m = 0; m < retained.size(); ++m) {
        encode_backward(model, *retained[m], d_query[m], *grads);
    }
    return result;
}

std::map<SenseId, double> cross_encoder_sense_scores(
    const std::map<SenseId, std::vector<double>>& pair_scores_by_sense) {
    if (pair_scores_by_sense.empty()) throw DataError("no sense groups to aggregate");
    std::map<SenseId, double> out;
    for (const auto& [sense, scores] : pair_scores_by_sense) {
        if (scores.empty()) throw DataError("sense '" + sense + "' has no pair scores");
        double total = 0.0;
        for (double s : scores) total += s;
        out[sense] = total / static_cast<double>(scores.size());
    }
    return out;
}

BilinearPairScorer::BilinearPairScorer(std::size_t dim_) : dim(dim_), matrix(dim_ * dim_, 0.0) {
    for (std::size_t i = 0; i < dim; ++i) matrix[i * dim + i] = 1.0;
}

double BilinearPairScorer::pair_score(const ContextVector& support_vec,
                                      const ContextVector& query_vec) const {
    if (support_vec.size() != dim || query_vec.size() != dim) {
        throw DataError("pair_score: vector dimensions differ from scorer dimension");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < dim; ++j) row += matrix[i * dim + j] * query_vec[j];
        acc += support_vec[i] * row;
    }
    return acc;
}

SenseDistribution cross_encoder_probabilities(
    const std::map<SenseId, std::vector<ContextVector>>& supports_by_sense,
    const ContextVector& query_vec, const PairScorer& scorer) {
    std::map<SenseId, std::vector<double>> pair_scores;
    for (const auto& [sense, vecs] : supports_by_sense) {
        auto& group = pair_scores[sense];
        group.reserve(vecs.size());
        for (const auto& v : vecs) group.push_back(scorer.pair_score(v, query_vec));
    }
    return softmax(cross_encoder_sense_scores(pair_scores));
}

namespace {

double neg_sq_distance(const ContextVector& a, const ContextVector& b) {
    return score(a, b, ScoreFn::NegSqL2);
}

}  // namespace

double gloss_combined_score(const ContextVector& proto_vec, const ContextVector* gloss_vec,
                            const std::vector<double>& gloss_projection,
                            const ContextVector& query_vec) {
    double s = neg_sq_distance(proto_vec, query_vec);
    if (gloss_vec == nullptr) return s;

    const std::size_t d = query_vec.size();
    if (gloss_projection.size() != d * d) {
        throw ConfigError("gloss projection must be a square matrix over the encoding dimension");
    }
    if (gloss_vec->size() != d) throw DataError("gloss vector dimension differs from query");
    ContextVector projected(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double* row = &gloss_projection[i * d];
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += row[j] * (*gloss_vec)[j];
        projected[i] = acc;
    }
    return s + neg_sq_distance(projected, query_vec);
}

SenseDistribution gloss_combined_probabilities(
    const std::vector<Prototype>& prototypes,
    const std::map<SenseId, ContextVector>& gloss_vectors,
    const std::vector<double>& gloss_projection, const ContextVector& query_vec,
    std::size_t* fallback_count) {
    if (prototypes.empty()) throw DataError("gloss scoring needs at least one prototype");
    std::map<SenseId, double> scores;
    for (const auto& proto : prototypes) {
        auto it = gloss_vectors.find(proto.sense);
        const ContextVector* gloss = it == gloss_vectors.end() ? nullptr : &it->second;
        if (gloss == nullptr && fallback_count != nullptr) ++*fallback_count;
        scores[proto.sense] =
            gloss_combined_score(proto.vector, gloss, gloss_projection, query_vec);
    }
    return softmax(scores);
}

}  // namespace wsd
