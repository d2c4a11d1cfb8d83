#include "wsd/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "wsd/errors.hpp"
#include "wsd/rng.hpp"

namespace wsd {

using nlohmann::json;

Fallback fallback_from_string(const std::string& name) {
    if (name == "s1") return Fallback::S1;
    if (name == "mfs") return Fallback::Mfs;
    throw ConfigError("unknown fallback '" + name + "' (expected s1 or mfs)");
}

std::string fallback_to_string(Fallback f) { return f == Fallback::S1 ? "s1" : "mfs"; }

void InferenceConfig::validate() const {
    if (supports_per_sense < 1) throw ConfigError("supports_per_sense must be >= 1");
}

std::string file_digest_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for digest: " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

SupportBank build_support_bank(const Corpus& train_corpus, const EncoderModel& model,
                               const InferenceConfig& cfg) {
    cfg.validate();
    SupportBank bank;
    for (const auto& [word, task] : train_corpus.tasks) {
        std::map<SenseId, std::vector<const Instance*>> by_sense;
        for (const auto& inst : task.instances) {
            if (!inst.gold.has_value()) {
                throw DataError("training instance '" + inst.id + "' lacks a gold sense");
            }
            by_sense[*inst.gold].push_back(&inst);
        }
        auto& word_entry = bank.words[word];
        for (const auto& [sense, pool] : by_sense) {
            auto rng = derive_stream(cfg.seed, {"bank", word.str(), sense});
            std::vector<std::size_t> order(pool.size());
            std::iota(order.begin(), order.end(), 0);
            if (pool.size() > cfg.supports_per_sense) rng.shuffle(order);
            const std::size_t take = std::min(cfg.supports_per_sense, pool.size());

            auto& list = word_entry[sense];
            list.reserve(take);
            for (std::size_t i = 0; i < take; ++i) {
                const Instance& inst = *pool[order[i]];
                list.push_back({inst.id, encode(model, inst)});
            }
        }
    }
    return bank;
}

void save_support_bank(const std::string& path, const SupportBank& bank) {
    json root;
    root["format_version"] = 1;
    root["checkpoint_digest"] = bank.checkpoint_digest;
    json words = json::object();
    for (const auto& [word, senses] : bank.words) {
        json senses_json = json::object();
        for (const auto& [sense, examples] : senses) {
            json list = json::array();
            for (const auto& ex : examples) {
                list.push_back(json{{"id", ex.instance_id}, {"vector", ex.vector}});
            }
            senses_json[sense] = std::move(list);
        }
        words[word.str()] = std::move(senses_json);
    }
    root["words"] = std::move(words);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write support bank: " + path);
    out << root.dump() << '\n';
}

SupportBank load_support_bank(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open support bank: " + path);
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw DataError("support bank " + path + " is not valid JSON: " + e.what());
    }
    if (!root.contains("format_version")) {
        throw DataError("support bank " + path + " lacks format_version");
    }
    if (root["format_version"] != 1) {
        throw DataError("support bank " + path + " has unsupported format_version");
    }

    SupportBank bank;
    bank.checkpoint_digest = root.value("checkpoint_digest", std::string());
    for (const auto& [word_str, senses] : root.at("words").items()) {
        const WordKey word = WordKey::parse(word_str);
        auto& word_entry = bank.words[word];
        for (const auto& [sense, list] : senses.items()) {
            auto& examples = word_entry[sense];
            for (const auto& item : list) {
                SupportExample ex;
                ex.instance_id = item.at("id").get<std::string>();
                ex.vector = item.at("vector").get<std::vector<double>>();
                examples.push_back(std::move(ex));
            }
        }
    }
    return bank;
}

namespace {

// First strictly-greatest entry of a sorted map: lexicographically smallest
// sense among ties.
SenseId argmax_sense(const SenseDistribution& probs) {
    auto best = probs.begin();
    for (auto it = std::next(probs.begin()); it != probs.end(); ++it) {
        if (it->second > best->second) best = it;
    }
    return best->first;
}

Prediction fallback_prediction(const Instance& instance, const SenseInventory& inventory,
                               Fallback fallback) {
    Prediction pred;
    pred.instance_id = instance.id;
    pred.sense = inventory.first_sense(instance.word);
    pred.provenance = fallback == Fallback::S1 ? "s1-fallback" : "mfs-fallback";
    return pred;
}

}  // namespace

Prediction predict(const Instance& instance, const SupportBank& bank, const EncoderModel& model,
                   const SenseInventory& inventory, const InferenceConfig& cfg) {
    if (inventory.senses_for(instance.word) == nullptr) {
        throw DataError("word not in inventory: " + instance.word.str());
    }

    auto it = bank.words.find(instance.word);
    if (it == bank.words.end() || it->second.empty()) {
        return fallback_prediction(instance, inventory, cfg.fallback);
    }

    Prediction pred;
    pred.instance_id = instance.id;
    pred.provenance = "metric";

    if (it->second.size() == 1) {
        pred.sense = it->second.begin()->first;
        pred.probs = SenseDistribution{{pred.sense, 1.0}};
        return pred;
    }

    std::vector<std::pair<ContextVector, SenseId>> labeled;
    for (const auto& [sense, examples] : it->second) {
        for (const auto& ex : examples) labeled.emplace_back(ex.vector, sense);
    }
    const auto prototypes = compute_prototypes(labeled);
    const auto probs = class_probabilities(prototypes, encode(model, instance), cfg.score_fn);

    pred.sense = argmax_sense(probs);
    pred.probs = probs;
    return pred;
}

Prediction s1_baseline(const Instance& instance, const SenseInventory& inventory) {
    Prediction pred;
    pred.instance_id = instance.id;
    pred.sense = inventory.first_sense(instance.word);
    pred.provenance = "s1";
    return pred;
}

Prediction mfs_baseline(const Instance& instance, const Corpus& train_corpus,
                        const SenseInventory& inventory) {
    if (inventory.senses_for(instance.word) == nullptr) {
        throw DataError("word not in inventory: " + instance.word.str());
    }
    const WordTask* task = train_corpus.task_for(instance.word);
    if (task == nullptr || task->instances.empty()) {
        Prediction pred = fallback_prediction(instance, inventory, Fallback::S1);
        return pred;
    }

    std::map<SenseId, std::size_t> counts;
    for (const auto& inst : task->instances) {
        if (inst.gold.has_value()) ++counts[*inst.gold];
    }
    auto best = counts.begin();
    for (auto it = std::next(counts.begin()); it != counts.end(); ++it) {
        if (it->second > best->second) best = it;
    }

    Prediction pred;
    pred.instance_id = instance.id;
    pred.sense = best->first;
    pred.provenance = "mfs";
    return pred;
}

Prediction knn_baseline(const Instance& instance, const SupportBank& frozen_bank,
                        const EncoderModel& init_model, const SenseInventory& inventory,
                        const InferenceConfig& cfg) {
    Prediction pred = predict(instance, frozen_bank, init_model, inventory, cfg);
    if (pred.provenance == "metric") pred.provenance = "knn";
    return pred;
}

std::string prediction_to_json_line(const Prediction& pred) {
    json obj;
    obj["id"] = pred.instance_id;
    obj["sense"] = pred.sense;
    obj["provenance"] = pred.provenance;
    if (pred.probs.has_value()) {
        json probs = json::object();
        for (const auto& [sense, p] : *pred.probs) probs[sense] = p;
        obj["probs"] = std::move(probs);
    }
    return obj.dump();
}

void write_predictions(const std::string& path, const std::vector<Prediction>& preds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write predictions: " + path);
    for (const auto& pred : preds) out << prediction_to_json_line(pred) << '\n';
}

std::vector<Prediction> read_predictions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open predictions: " + path);
    std::vector<Prediction> preds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(where + ": invalid JSON: " + e.what());
        }
        try {
            Prediction pred;
            pred.instance_id = obj.at("id").get<std::string>();
            pred.sense = obj.at("sense").get<std::string>();
            pred.provenance = obj.value("provenance", std::string());
            if (obj.contains("probs")) {
                SenseDistribution probs;
                for (const auto& [sense, p] : obj["probs"].items()) {
                    probs[sense] = p.get<double>();
                }
                pred.probs = std::move(probs);
            }
            preds.push_back(std::move(pred));
        } catch (const json::exception& e) {
            throw DataError(where + ": malformed prediction: " + e.what());
        }
    }
    return preds;
}

void ClassifierConfig::validate() const {
    encoder.validate();
    optim.validate();
    if (epochs < 1) throw ConfigError("classifier epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("classifier batch_size must be >= 1");
}

ClassifierModel init_classifier(const SenseInventory& inventory, const ClassifierConfig& cfg) {
    cfg.validate();
    ClassifierModel model;
    model.encoder = init_encoder(cfg.encoder);

    std::set<SenseId> vocab;
    for (const auto& [word, senses] : inventory.senses) {
        vocab.insert(senses.begin(), senses.end());
    }
    if (vocab.empty()) throw DataError("inventory has no senses");
    model.sense_vocab.assign(vocab.begin(), vocab.end());
    for (std::size_t i = 0; i < model.sense_vocab.size(); ++i) {
        model.sense_index[model.sense_vocab[i]] = i;
    }

    const std::size_t d = cfg.encoder.embedding_dim;
    model.weight.resize(model.sense_vocab.size() * d);
    auto rng = derive_stream(cfg.seed, {"classifier", "weight"});
    for (double& v : model.weight) v = rng.uniform(-0.05, 0.05);
    model.bias.assign(model.sense_vocab.size(), 0.0);
    return model;
}

double classifier_batch_loss(const ClassifierModel& model, const SenseInventory& inventory,
                             const std::vector<const Instance*>& batch,
                             GradBuffer* encoder_grads, std::vector<double>* weight_grads,
                             std::vector<double>* bias_grads) {
    if (batch.empty()) throw DataError("empty classifier batch");
    const std::size_t d = model.encoder.config.embedding_dim;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;

    for (const Instance* inst : batch) {
        if (!inst->gold.has_value()) {
            throw DataError("classifier training instance '" + inst->id + "' lacks a gold sense");
        }
        const auto* senses = inventory.senses_for(inst->word);
        if (senses == nullptr) {
            throw DataError("word not in inventory: " + inst->word.str());
        }
        const ContextVector f = encode(model.encoder, *inst);

        std::map<SenseId, double> logits;
        for (const auto& sense : *senses) {
            const std::size_t row = model.sense_index.at(sense);
            double z = model.bias[row];
            const double* w = &model.weight[row * d];
            for (std::size_t i = 0; i < d; ++i) z += w[i] * f[i];
            logits[sense] = z;
        }
        const auto probs = softmax(logits);
        const double p_gold = probs.at(*inst->gold);
        if (!(p_gold > 0.0)) {
            throw NumericError("classifier probability underflowed for instance '" + inst->id +
                               "'");
        }
        loss += -std::log(p_gold) * inv_b;

        if (encoder_grads == nullptr && weight_grads == nullptr && bias_grads == nullptr) continue;

        ContextVector d_f(d, 0.0);
        for (const auto& [sense, p] : probs) {
            const double dz = (p - (sense == *inst->gold ? 1.0 : 0.0)) * inv_b;
            const std::size_t row = model.sense_index.at(sense);
            const double* w = &model.weight[row * d];
            if (weight_grads != nullptr) {
                double* wg = &(*weight_grads)[row * d];
                for (std::size_t i = 0; i < d; ++i) wg[i] += dz * f[i];
            }
            if (bias_grads != nullptr) (*bias_grads)[row] += dz;
            for (std::size_t i = 0; i < d; ++i) d_f[i] += dz * w[i];
        }
        if (encoder_grads != nullptr) {
            encode_backward(model.encoder, *inst, d_f, *encoder_grads);
        }
    }
    if (!std::isfinite(loss)) throw NumericError("non-finite classifier batch loss");
    return loss;
}

ClassifierModel classifier_baseline_train(const Corpus& train_corpus,
                                          const SenseInventory& inventory,
                                          const ClassifierConfig& cfg) {
    ClassifierModel model = init_classifier(inventory, cfg);

    std::vector<const Instance*> all;
    for (const auto& [word, task] : train_corpus.tasks) {
        for (const auto& inst : task.instances) all.push_back(&inst);
    }
    if (all.empty()) throw DataError("classifier training corpus is empty");

    GradBuffer encoder_grads(cfg.encoder);
    std::vector<double> weight_grads(model.weight.size(), 0.0);
    std::vector<double> bias_grads(model.bias.size(), 0.0);
    AdamWState optim;

    std::vector<ParamSlot> slots = encoder_param_slots(model.encoder, encoder_grads);
    slots.push_back({"classifier.weight", model.weight, weight_grads});
    slots.push_back({"classifier.bias", model.bias, bias_grads});

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(all.size());
        std::iota(order.begin(), order.end(), 0);
        auto rng = derive_stream(cfg.seed, {"classifier", "order", std::to_string(epoch)});
        rng.shuffle(order);

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<const Instance*> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(all[order[i]]);
            classifier_batch_loss(model, inventory, batch, &encoder_grads, &weight_grads,
                                  &bias_grads);
            adamw_step(slots, optim, cfg.optim);
        }
    }
    return model;
}

Prediction classifier_baseline_predict(const ClassifierModel& model, const Instance& instance,
                                       const SenseInventory& inventory) {
    const auto* senses = inventory.senses_for(instance.word);
    if (senses == nullptr) throw DataError("word not in inventory: " + instance.word.str());

    const std::size_t d = model.encoder.config.embedding_dim;
    const ContextVector f = encode(model.encoder, instance);

    std::map<SenseId, double> logits;
    for (const auto& sense : *senses) {
        const std::size_t row = model.sense_index.at(sense);
        double z = model.bias[row];
        const double* w = &model.weight[row * d];
        for (std::size_t i = 0; i < d; ++i) z += w[i] * f[i];
        logits[sense] = z;
    }
    const auto probs = softmax(logits);

    Prediction pred;
    pred.instance_id = instance.id;
    pred.sense = argmax_sense(probs);
    pred.probs = probs;
    pred.provenance = "classifier";
    return pred;
}

}  // namespace wsd
