#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wsd/errors.hpp"

namespace wsd {

// Opaque sense identifier, unique within an inventory.
using SenseId = std::string;

enum class Pos : char { Noun = 'n', Verb = 'v', Adjective = 'a', Adverb = 'r' };

Pos pos_from_char(char c);

inline char pos_to_char(Pos p) { return static_cast<char>(p); }

// A word is a lemma plus part-of-speech tag; it identifies one
// classification task.
struct WordKey {
    std::string lemma;
    Pos pos = Pos::Noun;

    std::string str() const { return lemma + '|' + pos_to_char(pos); }
    static WordKey parse(std::string_view text);  // "lemma|pos"

    friend auto operator<=>(const WordKey&, const WordKey&) = default;
};

// One annotated occurrence: a sentence plus the target position within it.
struct Instance {
    std::string id;
    std::vector<std::string> tokens;
    std::size_t target_index = 0;
    WordKey word;
    std::optional<SenseId> gold;
    std::string dataset;  // carried only by evaluation gold files
};

// All training instances of one word; the unit of episodic sampling.
struct WordTask {
    WordKey word;
    std::vector<Instance> instances;  // gold present on every entry

    std::size_t size() const { return instances.size(); }
};

struct SenseInventory {
    // Order within each list defines the first sense.
    std::map<WordKey, std::vector<SenseId>> senses;
    std::map<SenseId, std::vector<std::string>> glosses;

    const std::vector<SenseId>* senses_for(const WordKey& w) const {
        auto it = senses.find(w);
        return it == senses.end() ? nullptr : &it->second;
    }

    const SenseId& first_sense(const WordKey& w) const {
        const auto* list = senses_for(w);
        if (list == nullptr || list->empty()) {
            throw DataError("word not in inventory: " + w.str());
        }
        return list->front();
    }

    bool has_sense(const WordKey& w, const SenseId& s) const;

    const std::vector<std::string>* gloss_for(const SenseId& s) const {
        auto it = glosses.find(s);
        return it == glosses.end() ? nullptr : &it->second;
    }
};

struct Corpus {
    std::map<WordKey, WordTask> tasks;
    SenseInventory inventory;

    std::size_t total_instances() const;

    const WordTask* task_for(const WordKey& w) const {
        auto it = tasks.find(w);
        return it == tasks.end() ? nullptr : &it->second;
    }
};

struct CorpusStats {
    std::size_t total_instances = 0;
    std::size_t word_count = 0;
    std::size_t single_sense_words = 0;  // by inventory sense count
    std::size_t freq_threshold = 10;
    std::size_t words_below_threshold = 0;
    double fraction_below_threshold = 0.0;
    // Share of examples carrying their word's most frequent sense, pooled
    // over words with >= freq_threshold examples and >= 2 inventory senses.
    std::size_t mfs_eligible_instances = 0;
    std::size_t mfs_matching_instances = 0;
    double mfs_share = 0.0;
    bool mfs_share_defined = false;
    std::map<WordKey, std::size_t> instances_per_word;
    std::map<WordKey, std::map<SenseId, std::size_t>> sense_counts;
};

}  // namespace wsd
