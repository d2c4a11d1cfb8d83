#pragma once

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "wsd/rng.hpp"
#include "wsd/types.hpp"

namespace wsd {

enum class Strategy { Balanced, Uniform };

Strategy strategy_from_string(const std::string& name);  // "balanced" | "uniform"
std::string strategy_to_string(Strategy s);

struct SamplingConfig {
    std::size_t max_support = 40;   // cap on the sampled support set
    double support_ratio = 0.4;     // share of a word's instances split off as support
    Strategy strategy = Strategy::Balanced;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpisodeExample {
    Instance instance;
    SenseId sense;
};

// One word's support/query split, the unit of training.
struct Episode {
    WordKey word;
    std::vector<EpisodeExample> support;
    std::vector<EpisodeExample> query;
    // Queries whose gold sense is absent from the support set; they stay in
    // the query list but are excluded from the loss.
    std::size_t dropped_query_count = 0;

    std::set<SenseId> support_senses() const;
    std::size_t retained_query_count() const { return query.size() - dropped_query_count; }
};

struct EpochPlan {
    std::vector<Episode> episodes;  // at most one per word, in shuffled order

    std::size_t total_dropped_queries() const;
};

// Draws k distinct items, each round proportional to the remaining weights
// (draw, remove, renormalize). Throws if fewer than k items carry positive
// weight.
std::vector<std::size_t> weighted_choice_without_replacement(const std::vector<double>& weights,
                                                             std::size_t k, RngStream& rng);

// Uniform random partition of a task into support and query candidates.
// Support size is round-half-up of ratio * N, clamped so both sides are
// non-empty. Requires N >= 2.
std::pair<std::vector<EpisodeExample>, std::vector<EpisodeExample>> split_support_query(
    const WordTask& task, double ratio, RngStream& rng);

// Per-example sampling weights over the support candidates. Balanced gives
// each sense total mass 1/J; uniform gives every example 1/n.
std::vector<double> episode_weights(const std::vector<EpisodeExample>& candidates,
                                    Strategy strategy);

Episode build_episode(const WordTask& task, const SamplingConfig& config, RngStream& rng);

// True when the word can form a meaningful episode: at least two observed
// senses and at least one sense with two or more examples.
bool task_eligible(const WordTask& task);

// One episode per eligible word. Per-word randomness derives from
// (config.seed, word, epoch_index), so corpus iteration order never changes
// the samples.
EpochPlan build_epoch(const Corpus& corpus, const SamplingConfig& config,
                      std::size_t epoch_index);

}  // namespace wsd
