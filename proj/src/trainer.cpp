#include "wsd/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "wsd/errors.hpp"

namespace wsd {

using nlohmann::json;

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (accumulate_episodes < 1) throw ConfigError("accumulate_episodes must be >= 1");
    if (dev_eval_every < 1) throw ConfigError("dev_eval_every must be >= 1");
    if (supports_per_sense < 1) throw ConfigError("supports_per_sense must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    optim.validate();
    sampling.validate();
    encoder.validate();
}

double dev_accuracy(const Corpus& train_corpus, const EncoderModel& model,
                    const Corpus& eval_corpus, const InferenceConfig& cfg) {
    const SupportBank bank = build_support_bank(train_corpus, model, cfg);
    std::size_t total = 0;
    std::size_t correct = 0;
    for (const auto& [word, task] : eval_corpus.tasks) {
        for (const auto& inst : task.instances) {
            if (!inst.gold.has_value()) {
                throw DataError("evaluation instance '" + inst.id + "' lacks a gold sense");
            }
            const Prediction pred = predict(inst, bank, model, eval_corpus.inventory, cfg);
            ++total;
            if (pred.sense == *inst.gold) ++correct;
        }
    }
    if (total == 0) throw DataError("evaluation corpus is empty");
    return static_cast<double>(correct) / static_cast<double>(total);
}

TrainResult train(const Corpus& train_corpus, const TrainConfig& cfg, const Corpus* dev,
                  const LoadedCheckpoint* resume) {
    cfg.validate();
    const auto start_time = std::chrono::steady_clock::now();

    EncoderConfig enc_cfg = cfg.encoder;
    enc_cfg.seed = cfg.seed;
    SamplingConfig sampling = cfg.sampling;
    sampling.seed = cfg.seed;

    TrainResult result;
    std::uint64_t start_epoch = 0;
    if (resume != nullptr) {
        if (!resume->optim.has_value() || !resume->trainer.has_value()) {
            throw ConfigError("resume checkpoint lacks optimizer or trainer state");
        }
        if (resume->trainer->seed != cfg.seed) {
            throw ConfigError("resume checkpoint was trained with a different seed");
        }
        result.final_model = resume->model;
        result.optim = *resume->optim;
        start_epoch = resume->trainer->next_epoch;
    } else {
        result.final_model = init_encoder(enc_cfg);
    }
    EncoderModel& model = result.final_model;

    GradBuffer grads(model.config);
    const std::vector<ParamSlot> slots = encoder_param_slots(model, grads);

    const InferenceConfig dev_cfg{cfg.supports_per_sense, cfg.seed, cfg.score_fn, Fallback::S1};

    double best_acc = -1.0;
    EncoderModel best_model;

    for (std::uint64_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const EpochPlan plan = build_epoch(train_corpus, sampling, epoch);

        double loss_sum = 0.0;
        std::size_t contributing = 0;
        std::size_t dropped = 0;
        std::size_t skipped = 0;
        std::size_t pending = 0;

        for (const Episode& episode : plan.episodes) {
            dropped += episode.dropped_query_count;
            if (episode.retained_query_count() == 0) {
                ++skipped;
                continue;
            }
            const EpisodeLossResult res =
                episode_loss(episode, model, cfg.score_fn, &grads, cfg.threads);
            loss_sum += res.loss;
            ++contributing;
            if (++pending == cfg.accumulate_episodes) {
                adamw_step(slots, result.optim, cfg.optim);
                pending = 0;
            }
        }
        if (pending > 0) adamw_step(slots, result.optim, cfg.optim);

        result.log.epoch_mean_loss.push_back(
            contributing > 0 ? loss_sum / static_cast<double>(contributing) : 0.0);
        result.log.dropped_queries.push_back(dropped);
        result.log.skipped_episodes.push_back(skipped);

        if (dev != nullptr &&
            ((epoch + 1) % cfg.dev_eval_every == 0 || epoch + 1 == cfg.epochs)) {
            const double acc = dev_accuracy(train_corpus, model, *dev, dev_cfg);
            result.log.dev.push_back({static_cast<std::size_t>(epoch), acc});
            if (acc > best_acc) {
                best_acc = acc;
                best_model = model;
                result.log.best_epoch = static_cast<std::size_t>(epoch);
            }
        }
    }

    result.model = (dev != nullptr && best_acc >= 0.0) ? best_model : model;
    result.next_epoch = cfg.epochs;
    result.log.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return result;
}

namespace {

json params_to_json(const EncoderParams& params) {
    return json{{"bias", params.bias},
                {"embeddings", params.embeddings},
                {"projection", params.projection}};
}

EncoderParams params_from_json(const json& j, const EncoderConfig& config,
                               const std::string& label) {
    EncoderParams params;
    params.embeddings = j.at("embeddings").get<std::vector<double>>();
    params.projection = j.at("projection").get<std::vector<double>>();
    params.bias = j.at("bias").get<std::vector<double>>();
    const std::size_t d = config.embedding_dim;
    if (params.embeddings.size() != config.hash_buckets * d || params.projection.size() != d * d ||
        params.bias.size() != d) {
        throw DataError("checkpoint parameter set '" + label + "' does not match its config");
    }
    return params;
}

}  // namespace

void save_checkpoint(const std::string& path, const EncoderModel& model,
                     const AdamWState* optim, const TrainerState* trainer) {
    json root;
    root["format_version"] = 1;
    root["config"] = {{"context_window", model.config.context_window},
                      {"embedding_dim", model.config.embedding_dim},
                      {"gloss_encoder", model.config.gloss_encoder},
                      {"hash_buckets", model.config.hash_buckets},
                      {"seed", model.config.seed}};
    root["theta"] = params_to_json(model.theta);
    if (model.phi.has_value()) {
        root["phi"] = params_to_json(*model.phi);
        root["gloss_projection"] = model.gloss_projection;
    }
    if (optim != nullptr) {
        json moments = json::object();
        for (const auto& [name, mom] : optim->moments) {
            moments[name] = json{{"m", mom.m}, {"v", mom.v}};
        }
        root["optimizer"] = json{{"moments", std::move(moments)}, {"step", optim->step}};
    }
    if (trainer != nullptr) {
        root["trainer"] = json{{"next_epoch", trainer->next_epoch}, {"seed", trainer->seed}};
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << root.dump() << '\n';
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw DataError("checkpoint " + path + " is not valid JSON: " + e.what());
    }
    if (!root.contains("format_version")) {
        throw DataError("checkpoint " + path + " lacks format_version");
    }
    if (root["format_version"] != 1) {
        throw DataError("checkpoint " + path + " has unsupported format_version");
    }

    LoadedCheckpoint loaded;
    try {
        const json& config = root.at("config");
        loaded.model.config.context_window = config.at("context_window").get<std::size_t>();
        loaded.model.config.embedding_dim = config.at("embedding_dim").get<std::size_t>();
        loaded.model.config.gloss_encoder = config.at("gloss_encoder").get<bool>();
        loaded.model.config.hash_buckets = config.at("hash_buckets").get<std::size_t>();
        loaded.model.config.seed = config.at("seed").get<std::uint64_t>();
        loaded.model.config.validate();

        loaded.model.theta = params_from_json(root.at("theta"), loaded.model.config, "theta");
        if (loaded.model.config.gloss_encoder) {
            loaded.model.phi = params_from_json(root.at("phi"), loaded.model.config, "phi");
            loaded.model.gloss_projection =
                root.at("gloss_projection").get<std::vector<double>>();
        }

        if (root.contains("optimizer")) {
            AdamWState optim;
            optim.step = root["optimizer"].at("step").get<std::uint64_t>();
            for (const auto& [name, mom] : root["optimizer"].at("moments").items()) {
                optim.moments[name] = {mom.at("m").get<std::vector<double>>(),
                                       mom.at("v").get<std::vector<double>>()};
            }
            loaded.optim = std::move(optim);
        }
        if (root.contains("trainer")) {
            loaded.trainer = TrainerState{root["trainer"].at("next_epoch").get<std::uint64_t>(),
                                          root["trainer"].at("seed").get<std::uint64_t>()};
        }
    } catch (const json::exception& e) {
        throw DataError("checkpoint " + path + " is malformed: " + e.what());
    }
    return loaded;
}

}  // namespace wsd
