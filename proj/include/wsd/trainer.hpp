#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wsd/corpus.hpp"
#include "wsd/inference.hpp"
#include "wsd/metric.hpp"
#include "wsd/optim.hpp"
#include "wsd/sampler.hpp"

namespace wsd {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t accumulate_episodes = 5;
    OptimConfig optim;
    SamplingConfig sampling;
    EncoderConfig encoder;
    ScoreFn score_fn = ScoreFn::Dot;
    std::uint64_t seed = 0;
    std::size_t dev_eval_every = 10;
    std::size_t supports_per_sense = 30;  // bank size for dev evaluation
    std::size_t threads = 1;              // parallel episode encoding when > 1

    void validate() const;
};

struct DevPoint {
    std::size_t epoch;
    double accuracy;
};

// Covers the epochs run by one train() call; a resumed run starts fresh.
struct TrainLog {
    std::vector<double> epoch_mean_loss;
    std::vector<std::size_t> dropped_queries;   // per epoch, across episodes
    std::vector<std::size_t> skipped_episodes;  // episodes with no usable query
    std::vector<DevPoint> dev;
    std::size_t best_epoch = 0;  // meaningful only when dev points exist
    double wall_time_seconds = 0.0;
};

struct TrainResult {
    EncoderModel model;        // best-dev checkpoint when dev ran, else final
    EncoderModel final_model;  // state after the last epoch, resumable
    AdamWState optim;
    TrainLog log;
    std::uint64_t next_epoch = 0;
};

// Epoch counter plus the seed; together they fix every remaining random
// draw, so persisting them is what makes resumption deterministic.
struct TrainerState {
    std::uint64_t next_epoch = 0;
    std::uint64_t seed = 0;
};

struct LoadedCheckpoint {
    EncoderModel model;
    std::optional<AdamWState> optim;
    std::optional<TrainerState> trainer;
};

// The global cfg.seed overrides the sampling and encoder sub-seeds, so one
// value fixes the whole run. Episodes accumulate gradients; the optimizer
// steps every accumulate_episodes episodes and once more at epoch end for
// any remainder. With dev, accuracy is measured every dev_eval_every epochs
// (and at the last epoch) and the best checkpoint is retained. A resume
// checkpoint must carry optimizer and trainer state and match cfg.seed.
TrainResult train(const Corpus& train_corpus, const TrainConfig& cfg, const Corpus* dev = nullptr,
                  const LoadedCheckpoint* resume = nullptr);

// Prediction accuracy over every instance of eval_corpus, using a support
// bank built from train_corpus with the given model.
double dev_accuracy(const Corpus& train_corpus, const EncoderModel& model,
                    const Corpus& eval_corpus, const InferenceConfig& cfg);

void save_checkpoint(const std::string& path, const EncoderModel& model,
                     const AdamWState* optim = nullptr, const TrainerState* trainer = nullptr);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace wsd
