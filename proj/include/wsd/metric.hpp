#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wsd/encoder.hpp"
#include "wsd/sampler.hpp"
#include "wsd/types.hpp"

namespace wsd {

enum class ScoreFn { Dot, NegSqL2 };

ScoreFn score_fn_from_string(const std::string& name);  // "dot" | "neg_sq_l2"
std::string score_fn_to_string(ScoreFn fn);

// Mean of one sense's encoded support examples.
struct Prototype {
    SenseId sense;
    ContextVector vector;
    std::size_t support_count = 0;
};

// Probabilities over a word's senses; values >= 0 and sum to 1.
using SenseDistribution = std::map<SenseId, double>;

// One prototype per distinct sense, in sorted sense order.
std::vector<Prototype> compute_prototypes(
    const std::vector<std::pair<ContextVector, SenseId>>& support);

// dot: sum p_i q_i; neg_sq_l2: -sum (p_i - q_i)^2.
double score(const ContextVector& proto_vec, const ContextVector& query_vec, ScoreFn fn);

// Numerically safe softmax (max subtraction, mathematically identical).
SenseDistribution softmax(const std::map<SenseId, double>& scores);

SenseDistribution class_probabilities(const std::vector<Prototype>& prototypes,
                                      const ContextVector& query_vec, ScoreFn fn);

struct EpisodeLossResult {
    double loss = 0.0;
    std::size_t retained_queries = 0;
    std::size_t correct = 0;  // argmax matches gold, over retained queries
};

// Mean negative log-likelihood over the episode's retained queries. When
// grads is non-null, accumulates the exact gradient through the softmax,
// the prototypes, and both the support and query encodings. threads > 1
// runs the forward encodes concurrently; accumulation order stays fixed, so
// the result is bitwise equal to the single-threaded one.
EpisodeLossResult episode_loss(const Episode& episode, const EncoderModel& model, ScoreFn fn,
                               GradBuffer* grads = nullptr, std::size_t threads = 1);

// Per-sense mean of support pair scores. Every group must be non-empty.
std::map<SenseId, double> cross_encoder_sense_scores(
    const std::map<SenseId, std::vector<double>>& pair_scores_by_sense);

// Scores one (support, query) encoding pair. Pluggable so the aggregation
// above stays independent of the pair model.
struct PairScorer {
    virtual ~PairScorer() = default;
    virtual double pair_score(const ContextVector& support_vec,
                              const ContextVector& query_vec) const = 0;
};

// s(a, b) = a^T M b with a learnable square matrix, identity at init.
struct BilinearPairScorer : PairScorer {
    explicit BilinearPairScorer(std::size_t dim);
    std::size_t dim;
    std::vector<double> matrix;  // dim x dim, row-major

    double pair_score(const ContextVector& support_vec,
                      const ContextVector& query_vec) const override;
};

// Pair-score every support against the query, average per sense, softmax.
SenseDistribution cross_encoder_probabilities(
    const std::map<SenseId, std::vector<ContextVector>>& supports_by_sense,
    const ContextVector& query_vec, const PairScorer& scorer);

// -|proto - query|^2 - |W * gloss - query|^2 (squared euclidean distances).
// A null gloss drops the second term.
double gloss_combined_score(const ContextVector& proto_vec, const ContextVector* gloss_vec,
                            const std::vector<double>& gloss_projection,
                            const ContextVector& query_vec);

// Softmax over gloss-combined scores. Senses without a gloss vector fall back
// to the prototype-only term; fallback_count, when given, reports how many.
SenseDistribution gloss_combined_probabilities(
    const std::vector<Prototype>& prototypes,
    const std::map<SenseId, ContextVector>& gloss_vectors,
    const std::vector<double>& gloss_projection, const ContextVector& query_vec,
    std::size_t* fallback_count = nullptr);

}  // namespace wsd
