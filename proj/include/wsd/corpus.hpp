#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wsd/types.hpp"

namespace wsd {

// Inventory JSON: {"senses": {"lemma|pos": [sense-id, ...]},
//                  "glosses": {sense-id: text}}   (glosses optional)
// Gloss text is whitespace-tokenized on load.
SenseInventory load_inventory(const std::filesystem::path& path);

std::string inventory_to_json(const SenseInventory& inventory);
void write_inventory(const SenseInventory& inventory, const std::filesystem::path& path);

// Corpus JSONL, one instance per line:
// {"id": text, "tokens": [text...], "target_index": int, "lemma": text,
//  "pos": "n"|"v"|"a"|"r", "sense": text (optional), "dataset": text (optional)}
//
// load_corpus requires a gold sense on every line and groups instances into
// word tasks; load_instances keeps the flat order and makes gold optional
// unless require_gold is set.
Corpus load_corpus(const std::filesystem::path& path, SenseInventory inventory);
std::vector<Instance> load_instances(const std::filesystem::path& path,
                                     const SenseInventory& inventory,
                                     bool require_gold);

// Canonical serialization: words in sorted key order, instances in ingestion
// order, object keys sorted. Reload + rewrite is byte-identical.
std::string corpus_to_jsonl(const Corpus& corpus);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

std::string instance_to_json_line(const Instance& instance);

CorpusStats corpus_stats(const Corpus& corpus, std::size_t freq_threshold = 10);

// Synthetic long-tail corpus. Word ranks follow a Zipf-like count curve,
// every sense has a signature context vocabulary, and all draws derive from
// the seed, so two calls with equal config produce identical corpora.
struct FixtureConfig {
    std::uint64_t seed = 0;
    std::size_t n_words = 200;
    double zipf_s = 1.1;
    std::size_t senses_min = 2;
    std::size_t senses_max = 4;
    std::size_t peak_count = 120;     // instance count at rank 1
    double sense_skew = 1.3;          // within-word sense imbalance
    double signature_prob = 0.75;     // chance a context slot draws a signature token
};

Corpus generate_fixture(const FixtureConfig& config);

struct CorpusSplit {
    Corpus train;
    Corpus dev;
    Corpus test;
};

// Per-word split; every word keeps at least one training instance. Dev and
// test instances are tagged with dataset "dev" / "test".
CorpusSplit split_corpus(const Corpus& corpus, double train_frac, double dev_frac,
                         std::uint64_t seed);

}  // namespace wsd
