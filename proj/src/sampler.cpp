#include "wsd/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "wsd/errors.hpp"

namespace wsd {

Strategy strategy_from_string(const std::string& name) {
    if (name == "balanced") return Strategy::Balanced;
    if (name == "uniform") return Strategy::Uniform;
    throw ConfigError("unknown sampling strategy '" + name + "' (expected balanced or uniform)");
}

std::string strategy_to_string(Strategy s) {
    return s == Strategy::Balanced ? "balanced" : "uniform";
}

void SamplingConfig::validate() const {
    if (max_support < 1) throw ConfigError("max_support must be >= 1");
    if (!(support_ratio > 0.0 && support_ratio < 1.0)) {
        throw ConfigError("support_ratio must lie in (0, 1)");
    }
}

std::set<SenseId> Episode::support_senses() const {
    std::set<SenseId> senses;
    for (const auto& ex : support) senses.insert(ex.sense);
    return senses;
}

std::size_t EpochPlan::total_dropped_queries() const {
    std::size_t n = 0;
    for (const auto& ep : episodes) n += ep.dropped_query_count;
    return n;
}

std::vector<std::size_t> weighted_choice_without_replacement(const std::vector<double>& weights,
                                                             std::size_t k, RngStream& rng) {
    std::size_t positive = 0;
    for (double w : weights) {
        if (w < 0.0) throw ConfigError("negative sampling weight");
        if (w > 0.0) ++positive;
    }
    if (k > positive) {
        throw DataError("cannot draw " + std::to_string(k) + " items from " +
                        std::to_string(positive) + " positive-weight candidates");
    }

    std::vector<double> remaining = weights;
    std::vector<std::size_t> picked;
    picked.reserve(k);
    for (std::size_t round = 0; round < k; ++round) {
        double total = 0.0;
        for (double w : remaining) total += w;
        double u = rng.uniform() * total;
        std::size_t choice = remaining.size();
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            if (remaining[i] <= 0.0) continue;
            if (u < remaining[i]) { choice = i; break; }
            u -= remaining[i];
        }
        if (choice == remaining.size()) {
            // fp edge: u consumed the whole mass, take the last live item
            for (std::size_t i = remaining.size(); i-- > 0;) {
                if (remaining[i] > 0.0) { choice = i; break; }
            }
        }
        picked.push_back(choice);
        remaining[choice] = 0.0;
    }
    return picked;
}

std::pair<std::vector<EpisodeExample>, std::vector<EpisodeExample>> split_support_query(
    const WordTask& task, double ratio, RngStream& rng) {
    const std::size_t n = task.instances.size();
    if (n < 2) {
        throw DataError("word '" + task.word.str() + "' has fewer than 2 instances; cannot split");
    }

    auto want = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
    const std::size_t n_support = std::clamp<std::size_t>(want, 1, n - 1);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);

    std::pair<std::vector<EpisodeExample>, std::vector<EpisodeExample>> out;
    for (std::size_t i = 0; i < n; ++i) {
        const Instance& inst = task.instances[order[i]];
        EpisodeExample ex{inst, *inst.gold};
        if (i < n_support) {
            out.first.push_back(std::move(ex));
        } else {
            out.second.push_back(std::move(ex));
        }
    }
    return out;
}

std::vector<double> episode_weights(const std::vector<EpisodeExample>& candidates,
                                    Strategy strategy) {
    if (candidates.empty()) throw DataError("episode_weights on empty candidate set");

    if (strategy == Strategy::Uniform) {
        return std::vector<double>(candidates.size(), 1.0 / static_cast<double>(candidates.size()));
    }

    std::map<SenseId, std::size_t> per_sense;
    for (const auto& ex : candidates) per_sense[ex.sense]++;
    const auto n_senses = static_cast<double>(per_sense.size());

    std::vector<double> weights;
    weights.reserve(candidates.size());
    for (const auto& ex : candidates) {
        weights.push_back(1.0 / (static_cast<double>(per_sense.at(ex.sense)) * n_senses));
    }
    return weights;
}

Episode build_episode(const WordTask& task, const SamplingConfig& config, RngStream& rng) {
    auto [support_pool, query_pool] = split_support_query(task, config.support_ratio, rng);

    Episode episode;
    episode.word = task.word;
    if (support_pool.size() <= config.max_support) {
        episode.support = std::move(support_pool);
        episode.query = std::move(query_pool);
    } else {
        auto weights = episode_weights(support_pool, config.strategy);
        auto picked = weighted_choice_without_replacement(weights, config.max_support, rng);
        std::vector<bool> in_support(support_pool.size(), false);
        for (std::size_t idx : picked) in_support[idx] = true;

        for (std::size_t i = 0; i < support_pool.size(); ++i) {
            if (in_support[i]) episode.support.push_back(std::move(support_pool[i]));
        }
        episode.query = std::move(query_pool);
        // unsampled support candidates return to the query side
        for (std::size_t i = 0; i < in_support.size(); ++i) {
            if (!in_support[i]) episode.query.push_back(std::move(support_pool[i]));
        }
    }

    auto senses = episode.support_senses();
    for (const auto& ex : episode.query) {
        if (senses.count(ex.sense) == 0) episode.dropped_query_count++;
    }
    return episode;
}

bool task_eligible(const WordTask& task) {
    std::map<SenseId, std::size_t> counts;
    for (const auto& inst : task.instances) counts[*inst.gold]++;
    if (counts.size() < 2) return false;
    for (const auto& [sense, n] : counts) {
        if (n >= 2) return true;
    }
    return false;
}

EpochPlan build_epoch(const Corpus& corpus, const SamplingConfig& config,
                      std::size_t epoch_index) {
    config.validate();

    EpochPlan plan;
    for (const auto& [key, task] : corpus.tasks) {
        if (!task_eligible(task)) continue;
        auto rng = derive_stream(config.seed, {"episode", key.str(), std::to_string(epoch_index)});
        plan.episodes.push_back(build_episode(task, config, rng));
    }
    if (plan.episodes.empty()) {
        throw DataError("no word is eligible for episodic training");
    }

    auto order_rng = derive_stream(config.seed, {"epoch-order", std::to_string(epoch_index)});
    order_rng.shuffle(plan.episodes);
    return plan;
}

}  // namespace wsd
