#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wsd/corpus.hpp"
#include "wsd/metric.hpp"
#include "wsd/optim.hpp"

namespace wsd {

enum class Fallback { S1, Mfs };

Fallback fallback_from_string(const std::string& name);  // "s1" | "mfs"
std::string fallback_to_string(Fallback f);

struct InferenceConfig {
    std::size_t supports_per_sense = 30;  // cap per sense when sampling the bank
    std::uint64_t seed = 0;
    ScoreFn score_fn = ScoreFn::Dot;
    Fallback fallback = Fallback::S1;

    void validate() const;
};

struct SupportExample {
    std::string instance_id;
    ContextVector vector;
};

// Per-word, per-sense encoded training examples used to build prototypes at
// prediction time. Immutable after build. checkpoint_digest names the
// checkpoint file whose parameters produced the vectors.
struct SupportBank {
    std::map<WordKey, std::map<SenseId, std::vector<SupportExample>>> words;
    std::string checkpoint_digest;
};

struct Prediction {
    std::string instance_id;
    SenseId sense;
    std::optional<SenseDistribution> probs;
    // "metric" for the prototype path, "s1-fallback"/"mfs-fallback" for
    // unseen words, or the producing baseline's name.
    std::string provenance;
};

// FNV-1a digest of a file's bytes, as 16 hex digits. Keys bank reuse.
std::string file_digest_hex(const std::string& path);

// Uniform per-sense sample without replacement of min(supports_per_sense,
// available) training instances, encoded once. Every word in the corpus is
// included, single-sense and one-example words too.
SupportBank build_support_bank(const Corpus& train_corpus, const EncoderModel& model,
                               const InferenceConfig& cfg);

void save_support_bank(const std::string& path, const SupportBank& bank);
SupportBank load_support_bank(const std::string& path);

// Prototype scoring over the bank; argmax with ties broken toward the
// lexicographically smallest sense. Words absent from the bank fall back per
// cfg; single-sense words are predicted directly.
Prediction predict(const Instance& instance, const SupportBank& bank, const EncoderModel& model,
                   const SenseInventory& inventory, const InferenceConfig& cfg);

// First sense in inventory order.
Prediction s1_baseline(const Instance& instance, const SenseInventory& inventory);

// Most frequent sense in the training data; ties lexicographic; words
// unseen in training fall back to the first inventory sense.
Prediction mfs_baseline(const Instance& instance, const Corpus& train_corpus,
                        const SenseInventory& inventory);

// predict() over a bank built with the untrained encoder; provenance "knn".
Prediction knn_baseline(const Instance& instance, const SupportBank& frozen_bank,
                        const EncoderModel& init_model, const SenseInventory& inventory,
                        const InferenceConfig& cfg);

// Prediction JSONL line: {"id", "probs"?, "provenance", "sense"}, keys
// sorted, one line per instance in input order.
std::string prediction_to_json_line(const Prediction& pred);
void write_predictions(const std::string& path, const std::vector<Prediction>& preds);
std::vector<Prediction> read_predictions(const std::string& path);

struct ClassifierConfig {
    EncoderConfig encoder;
    OptimConfig optim;
    std::size_t epochs = 20;
    std::size_t batch_size = 4;
    std::uint64_t seed = 0;

    void validate() const;
};

// Linear layer over the full sense vocabulary on top of the trainable
// encoder; softmax is masked to each word's inventory senses.
struct ClassifierModel {
    EncoderModel encoder;
    std::vector<SenseId> sense_vocab;  // sorted; row order of weight
    std::map<SenseId, std::size_t> sense_index;
    std::vector<double> weight;  // |vocab| x d, row-major
    std::vector<double> bias;    // |vocab|
};

ClassifierModel init_classifier(const SenseInventory& inventory, const ClassifierConfig& cfg);

// Mean masked NLL over the batch. Gradient outputs are optional; when given,
// weight_grads/bias_grads must be shape-matched and are accumulated into.
double classifier_batch_loss(const ClassifierModel& model, const SenseInventory& inventory,
                             const std::vector<const Instance*>& batch,
                             GradBuffer* encoder_grads, std::vector<double>* weight_grads,
                             std::vector<double>* bias_grads);

ClassifierModel classifier_baseline_train(const Corpus& train_corpus,
                                          const SenseInventory& inventory,
                                          const ClassifierConfig& cfg);

Prediction classifier_baseline_predict(const ClassifierModel& model, const Instance& instance,
                                       const SenseInventory& inventory);

}  // namespace wsd
