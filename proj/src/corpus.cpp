#include "wsd/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wsd/rng.hpp"

namespace wsd {

using nlohmann::json;

Pos pos_from_char(char c) {
    switch (c) {
        case 'n': return Pos::Noun;
        case 'v': return Pos::Verb;
        case 'a': return Pos::Adjective;
        case 'r': return Pos::Adverb;
        default:
            throw DataError(std::string("invalid pos tag '") + c + "' (expected n, v, a or r)");
    }
}

WordKey WordKey::parse(std::string_view text) {
    auto bar = text.rfind('|');
    if (bar == std::string_view::npos || bar == 0 || bar + 2 != text.size()) {
        throw DataError("invalid word key '" + std::string(text) + "' (expected \"lemma|pos\")");
    }
    WordKey key;
    key.lemma = std::string(text.substr(0, bar));
    key.pos = pos_from_char(text[bar + 1]);
    return key;
}

bool SenseInventory::has_sense(const WordKey& w, const SenseId& s) const {
    const auto* list = senses_for(w);
    return list != nullptr && std::find(list->begin(), list->end(), s) != list->end();
}

std::size_t Corpus::total_instances() const {
    std::size_t n = 0;
    for (const auto& [key, task] : tasks) n += task.instances.size();
    return n;
}

namespace {

std::vector<std::string> split_whitespace(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

SenseInventory load_inventory(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("senses") || !doc["senses"].is_object()) {
        throw DataError(path.string() + ": expected top-level object with a \"senses\" map");
    }

    SenseInventory inv;
    std::set<SenseId> all_senses;
    for (const auto& [key_text, list] : doc["senses"].items()) {
        WordKey key = WordKey::parse(key_text);
        if (!list.is_array() || list.empty()) {
            throw DataError(path.string() + ": sense list for '" + key_text + "' must be a non-empty array");
        }
        std::vector<SenseId> senses;
        for (const auto& entry : list) {
            if (!entry.is_string() || entry.get<std::string>().empty()) {
                throw DataError(path.string() + ": sense ids for '" + key_text + "' must be non-empty strings");
            }
            SenseId id = entry.get<std::string>();
            if (std::find(senses.begin(), senses.end(), id) != senses.end()) {
                throw DataError(path.string() + ": duplicate sense '" + id + "' for '" + key_text + "'");
            }
            if (!all_senses.insert(id).second) {
                throw DataError(path.string() + ": sense id '" + id + "' appears under more than one word");
            }
            senses.push_back(std::move(id));
        }
        inv.senses.emplace(std::move(key), std::move(senses));
    }

    if (doc.contains("glosses")) {
        if (!doc["glosses"].is_object()) {
            throw DataError(path.string() + ": \"glosses\" must be an object");
        }
        for (const auto& [sense, text] : doc["glosses"].items()) {
            if (all_senses.count(sense) == 0) {
                throw DataError(path.string() + ": gloss for unknown sense '" + sense + "'");
            }
            if (!text.is_string()) {
                throw DataError(path.string() + ": gloss for '" + sense + "' must be a string");
            }
            auto tokens = split_whitespace(text.get<std::string>());
            if (tokens.empty()) {
                throw DataError(path.string() + ": gloss for '" + sense + "' is empty");
            }
            inv.glosses.emplace(sense, std::move(tokens));
        }
    }
    return inv;
}

namespace {

Instance parse_instance_line(const std::string& line, const std::string& where,
                             const SenseInventory& inventory, bool require_gold) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw DataError(where + ": expected a JSON object");

    auto need = [&](const char* field) -> const json& {
        if (!obj.contains(field)) throw DataError(where + ": missing \"" + field + "\"");
        return obj[field];
    };

    Instance inst;
    const json& id = need("id");
    if (!id.is_string() || id.get<std::string>().empty()) {
        throw DataError(where + ": \"id\" must be a non-empty string");
    }
    inst.id = id.get<std::string>();

    const json& tokens = need("tokens");
    if (!tokens.is_array() || tokens.empty()) {
        throw DataError(where + ": \"tokens\" must be a non-empty array");
    }
    for (const auto& t : tokens) {
        if (!t.is_string()) throw DataError(where + ": \"tokens\" entries must be strings");
        inst.tokens.push_back(t.get<std::string>());
    }

    const json& target = need("target_index");
    if (!target.is_number_integer() || target.get<long long>() < 0) {
        throw DataError(where + ": \"target_index\" must be a non-negative integer");
    }
    inst.target_index = target.get<std::size_t>();
    if (inst.target_index >= inst.tokens.size()) {
        throw DataError(where + ": target_index " + std::to_string(inst.target_index) +
                        " out of range for " + std::to_string(inst.tokens.size()) + " tokens");
    }

    const json& lemma = need("lemma");
    const json& pos = need("pos");
    if (!lemma.is_string() || lemma.get<std::string>().empty()) {
        throw DataError(where + ": \"lemma\" must be a non-empty string");
    }
    if (!pos.is_string() || pos.get<std::string>().size() != 1) {
        throw DataError(where + ": \"pos\" must be one of \"n\", \"v\", \"a\", \"r\"");
    }
    inst.word.lemma = lemma.get<std::string>();
    try {
        inst.word.pos = pos_from_char(pos.get<std::string>()[0]);
    } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
    }

    if (inventory.senses_for(inst.word) == nullptr) {
        throw DataError(where + ": word '" + inst.word.str() + "' not in inventory");
    }

    if (obj.contains("sense")) {
        if (!obj["sense"].is_string()) throw DataError(where + ": \"sense\" must be a string");
        SenseId sense = obj["sense"].get<std::string>();
        if (!inventory.has_sense(inst.word, sense)) {
            throw DataError(where + ": sense '" + sense + "' not in inventory for '" +
                            inst.word.str() + "'");
        }
        inst.gold = std::move(sense);
    } else if (require_gold) {
        throw DataError(where + ": missing \"sense\" (required here)");
    }

    if (obj.contains("dataset")) {
        if (!obj["dataset"].is_string()) throw DataError(where + ": \"dataset\" must be a string");
        inst.dataset = obj["dataset"].get<std::string>();
    }
    return inst;
}

}  // namespace

std::vector<Instance> load_instances(const std::filesystem::path& path,
                                     const SenseInventory& inventory, bool require_gold) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());

    std::vector<Instance> out;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::string where = path.string() + ":" + std::to_string(line_no);
        Instance inst = parse_instance_line(line, where, inventory, require_gold);
        if (!seen_ids.insert(inst.id).second) {
            throw DataError(where + ": duplicate instance id '" + inst.id + "'");
        }
        out.push_back(std::move(inst));
    }
    return out;
}

Corpus load_corpus(const std::filesystem::path& path, SenseInventory inventory) {
    Corpus corpus;
    corpus.inventory = std::move(inventory);
    for (auto& inst : load_instances(path, corpus.inventory, /*require_gold=*/true)) {
        WordKey key = inst.word;
        auto [it, inserted] = corpus.tasks.try_emplace(key);
        if (inserted) it->second.word = key;
        it->second.instances.push_back(std::move(inst));
    }
    return corpus;
}

std::string instance_to_json_line(const Instance& instance) {
    json obj;
    obj["id"] = instance.id;
    obj["tokens"] = instance.tokens;
    obj["target_index"] = instance.target_index;
    obj["lemma"] = instance.word.lemma;
    obj["pos"] = std::string(1, pos_to_char(instance.word.pos));
    if (instance.gold) obj["sense"] = *instance.gold;
    if (!instance.dataset.empty()) obj["dataset"] = instance.dataset;
    return obj.dump();
}

std::string corpus_to_jsonl(const Corpus& corpus) {
    std::string out;
    for (const auto& [key, task] : corpus.tasks) {
        for (const auto& inst : task.instances) {
            out += instance_to_json_line(inst);
            out += '\n';
        }
    }
    return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << corpus_to_jsonl(corpus);
}

std::string inventory_to_json(const SenseInventory& inventory) {
    json senses = json::object();
    for (const auto& [key, list] : inventory.senses) senses[key.str()] = list;
    json doc;
    doc["senses"] = std::move(senses);
    if (!inventory.glosses.empty()) {
        json glosses = json::object();
        for (const auto& [sense, tokens] : inventory.glosses) {
            std::string text;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (i > 0) text += ' ';
                text += tokens[i];
            }
            glosses[sense] = text;
        }
        doc["glosses"] = std::move(glosses);
    }
    return doc.dump(2) + "\n";
}

void write_inventory(const SenseInventory& inventory, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << inventory_to_json(inventory);
}

CorpusStats corpus_stats(const Corpus& corpus, std::size_t freq_threshold) {
    CorpusStats stats;
    stats.freq_threshold = freq_threshold;
    stats.word_count = corpus.tasks.size();

    for (const auto& [key, task] : corpus.tasks) {
        stats.total_instances += task.instances.size();
        stats.instances_per_word[key] = task.instances.size();
        auto& counts = stats.sense_counts[key];
        for (const auto& inst : task.instances) counts[*inst.gold]++;

        if (task.instances.size() < freq_threshold) stats.words_below_threshold++;

        const auto* inventory_senses = corpus.inventory.senses_for(key);
        const bool single_sense = inventory_senses != nullptr && inventory_senses->size() <= 1;
        if (single_sense) stats.single_sense_words++;

        if (!single_sense && task.instances.size() >= freq_threshold) {
            // Most frequent sense, ties broken by smallest SenseId; the map
            // iterates in sense order, so the first maximum wins.
            std::size_t best = 0;
            for (const auto& [sense, n] : counts) best = std::max(best, n);
            const SenseId* mfs = nullptr;
            for (const auto& [sense, n] : counts) {
                if (n == best) { mfs = &sense; break; }
            }
            stats.mfs_eligible_instances += task.instances.size();
            stats.mfs_matching_instances += counts.at(*mfs);
        }
    }

    if (stats.word_count > 0) {
        stats.fraction_below_threshold =
            static_cast<double>(stats.words_below_threshold) / static_cast<double>(stats.word_count);
    }
    stats.mfs_share_defined = stats.mfs_eligible_instances > 0;
    if (stats.mfs_share_defined) {
        stats.mfs_share = static_cast<double>(stats.mfs_matching_instances) /
                          static_cast<double>(stats.mfs_eligible_instances);
    }
    return stats;
}

namespace {

std::string fixture_lemma(std::size_t rank) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "w%03zu", rank);
    return buf;
}

constexpr Pos kPosCycle[4] = {Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb};

std::string signature_token(const WordKey& word, std::size_t sense_idx, std::size_t variant) {
    return word.lemma + pos_to_char(word.pos) + "s" + std::to_string(sense_idx) + "x" +
           std::to_string(variant);
}

}  // namespace

Corpus generate_fixture(const FixtureConfig& config) {
    if (config.n_words < 1) throw ConfigError("fixture needs n_words >= 1");
    if (config.senses_min < 1 || config.senses_min > config.senses_max) {
        throw ConfigError("degenerate senses_per_word range [" + std::to_string(config.senses_min) +
                          ", " + std::to_string(config.senses_max) + "]");
    }

    constexpr std::size_t kSignatureVariants = 6;
    constexpr std::size_t kFillerVocab = 40;

    Corpus corpus;
    for (std::size_t i = 0; i < config.n_words; ++i) {
        WordKey word{fixture_lemma(i), kPosCycle[i % 4]};
        auto word_rng = derive_stream(config.seed, {"fixture-word", word.str()});

        const std::size_t n_senses =
            config.senses_min + word_rng.index(config.senses_max - config.senses_min + 1);
        std::vector<SenseId> senses;
        std::vector<double> sense_weights;
        for (std::size_t s = 0; s < n_senses; ++s) {
            SenseId id = word.str() + "%" + std::to_string(s);
            corpus.inventory.glosses[id] = {"sense", std::to_string(s), "of", word.lemma,
                                            signature_token(word, s, 0),
                                            signature_token(word, s, 1)};
            senses.push_back(std::move(id));
            sense_weights.push_back(1.0 / std::pow(static_cast<double>(s + 1), config.sense_skew));
        }
        corpus.inventory.senses[word] = senses;

        const double raw = static_cast<double>(config.peak_count) /
                           std::pow(static_cast<double>(i + 1), config.zipf_s);
        const auto count = static_cast<std::size_t>(std::max<long long>(2, std::llround(raw)));

        double weight_total = 0.0;
        for (double w : sense_weights) weight_total += w;

        WordTask task;
        task.word = word;
        for (std::size_t e = 0; e < count; ++e) {
            auto rng = derive_stream(config.seed, {"fixture-inst", word.str(), std::to_string(e)});

            double u = rng.uniform() * weight_total;
            std::size_t sense_idx = n_senses - 1;
            for (std::size_t s = 0; s < n_senses; ++s) {
                if (u < sense_weights[s]) { sense_idx = s; break; }
                u -= sense_weights[s];
            }

            const std::size_t length = 6 + rng.index(6);
            const std::size_t target = rng.index(length);
            Instance inst;
            inst.id = word.str() + "#" + std::to_string(e);
            inst.word = word;
            inst.target_index = target;
            inst.gold = senses[sense_idx];
            for (std::size_t p = 0; p < length; ++p) {
                if (p == target) {
                    inst.tokens.push_back(word.lemma);
                } else if (rng.uniform() < config.signature_prob) {
                    inst.tokens.push_back(
                        signature_token(word, sense_idx, rng.index(kSignatureVariants)));
                } else {
                    inst.tokens.push_back("c" + std::to_string(rng.index(kFillerVocab)));
                }
            }
            task.instances.push_back(std::move(inst));
        }
        corpus.tasks.emplace(word, std::move(task));
    }
    return corpus;
}

CorpusSplit split_corpus(const Corpus& corpus, double train_frac, double dev_frac,
                         std::uint64_t seed) {
    if (train_frac <= 0.0 || dev_frac < 0.0 || train_frac + dev_frac > 1.0) {
        throw ConfigError("invalid split fractions");
    }

    CorpusSplit split;
    split.train.inventory = corpus.inventory;
    split.dev.inventory = corpus.inventory;
    split.test.inventory = corpus.inventory;

    for (const auto& [key, task] : corpus.tasks) {
        std::vector<std::size_t> order(task.instances.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        auto rng = derive_stream(seed, {"split", key.str()});
        rng.shuffle(order);

        const std::size_t n = order.size();
        const auto n_train = std::max<std::size_t>(
            1, static_cast<std::size_t>(static_cast<double>(n) * train_frac));
        const auto n_dev = static_cast<std::size_t>(static_cast<double>(n) * dev_frac);

        auto place = [&](Corpus& dest, std::size_t idx, const char* tag) {
            Instance inst = task.instances[order[idx]];
            if (inst.dataset.empty() && tag != nullptr) inst.dataset = tag;
            auto [it, inserted] = dest.tasks.try_emplace(key);
            if (inserted) it->second.word = key;
            it->second.instances.push_back(std::move(inst));
        };

        for (std::size_t i = 0; i < n && i < n_train; ++i) place(split.train, i, nullptr);
        for (std::size_t i = n_train; i < n && i < n_train + n_dev; ++i) place(split.dev, i, "dev");
        for (std::size_t i = n_train + n_dev; i < n; ++i) place(split.test, i, "test");
    }
    return split;
}

}  // namespace wsd
