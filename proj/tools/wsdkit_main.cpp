#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wsd/corpus.hpp"
#include "wsd/errors.hpp"
#include "wsd/eval.hpp"
#include "wsd/inference.hpp"
#include "wsd/metric.hpp"
#include "wsd/sampler.hpp"
#include "wsd/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wsd;

namespace {

// Flat key=value file, '#' comments. Values here override command-line
// flags; unknown keys are rejected.
std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::map<std::string, std::string> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        if (!entries.emplace(key, value).second) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                              "'");
        }
    }
    return entries;
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a non-negative integer: " + value);
    }
}

double parse_real(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: " + value);
    }
}

using ConfigHandlers = std::map<std::string, std::function<void(const std::string&)>>;

void apply_config(const std::string& path, const ConfigHandlers& handlers) {
    if (path.empty()) return;
    for (const auto& [key, value] : read_config_file(path)) {
        auto it = handlers.find(key);
        if (it == handlers.end()) throw ConfigError("unknown config key '" + key + "'");
        it->second(value);
    }
}

std::vector<std::size_t> parse_bucket_edges(const std::string& text) {
    std::vector<std::size_t> edges;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part.empty()) continue;
        edges.push_back(static_cast<std::size_t>(parse_u64(part, "buckets")));
    }
    if (edges.empty()) throw ConfigError("buckets: expected a comma-separated list of edges");
    return edges;
}

Corpus load_corpus_pair(const std::string& corpus_path, const std::string& inventory_path) {
    return load_corpus(corpus_path, load_inventory(inventory_path));
}

// ---- fixture ----

struct FixtureCli {
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t words = 200;
    std::size_t peak = 120;
    double zipf = 1.1;
    std::size_t senses_min = 2;
    std::size_t senses_max = 4;
    double sense_skew = 1.3;
    double signature_prob = 0.75;
    double train_frac = 0.7;
    double dev_frac = 0.15;
};

int cmd_fixture(const FixtureCli& cli) {
    FixtureConfig cfg;
    cfg.seed = cli.seed;
    cfg.n_words = cli.words;
    cfg.peak_count = cli.peak;
    cfg.zipf_s = cli.zipf;
    cfg.senses_min = cli.senses_min;
    cfg.senses_max = cli.senses_max;
    cfg.sense_skew = cli.sense_skew;
    cfg.signature_prob = cli.signature_prob;

    const Corpus corpus = generate_fixture(cfg);
    const CorpusSplit split = split_corpus(corpus, cli.train_frac, cli.dev_frac, cli.seed);

    fs::create_directories(cli.out_dir);
    const fs::path dir(cli.out_dir);
    write_corpus(corpus, dir / "corpus.jsonl");
    write_inventory(corpus.inventory, dir / "inventory.json");
    write_corpus(split.train, dir / "train.jsonl");
    write_corpus(split.dev, dir / "dev.jsonl");
    write_corpus(split.test, dir / "test.jsonl");

    std::printf("fixture: %zu instances over %zu words -> %s\n", corpus.total_instances(),
                corpus.tasks.size(), cli.out_dir.c_str());
    std::printf("split: train %zu / dev %zu / test %zu\n", split.train.total_instances(),
                split.dev.total_instances(), split.test.total_instances());
    return 0;
}

// ---- stats ----

int cmd_stats(const std::string& corpus_path, const std::string& inventory_path,
              std::size_t threshold) {
    const Corpus corpus = load_corpus_pair(corpus_path, inventory_path);
    const CorpusStats stats = corpus_stats(corpus, threshold);

    std::printf("instances                 %zu\n", stats.total_instances);
    std::printf("words                     %zu\n", stats.word_count);
    std::printf("single-sense words        %zu\n", stats.single_sense_words);
    std::printf("words with < %zu examples  %zu (fraction %.4f)\n", stats.freq_threshold,
                stats.words_below_threshold, stats.fraction_below_threshold);
    if (stats.mfs_share_defined) {
        std::printf("top-sense share           %.4f (%zu of %zu pooled instances)\n",
                    stats.mfs_share, stats.mfs_matching_instances, stats.mfs_eligible_instances);
    } else {
        std::printf("top-sense share           undefined (no word passes the pooling filter)\n");
    }
    return 0;
}

// ---- sample ----

struct SampleCli {
    std::string corpus;
    std::string inventory;
    std::string out;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
    std::string strategy = "balanced";
    std::size_t max_support = 40;
    double support_ratio = 0.4;
};

int cmd_sample(const SampleCli& cli) {
    const Corpus corpus = load_corpus_pair(cli.corpus, cli.inventory);
    SamplingConfig cfg;
    cfg.max_support = cli.max_support;
    cfg.support_ratio = cli.support_ratio;
    cfg.strategy = strategy_from_string(cli.strategy);
    cfg.seed = cli.seed;
    cfg.validate();

    const EpochPlan plan = build_epoch(corpus, cfg, cli.epoch);

    std::ostringstream lines;
    for (const Episode& ep : plan.episodes) {
        json support = json::array();
        for (const auto& ex : ep.support) {
            support.push_back(json{{"id", ex.instance.id}, {"sense", ex.sense}});
        }
        json query = json::array();
        for (const auto& ex : ep.query) {
            query.push_back(json{{"id", ex.instance.id}, {"sense", ex.sense}});
        }
        lines << json{{"dropped_queries", ep.dropped_query_count},
                      {"query", std::move(query)},
                      {"support", std::move(support)},
                      {"word", ep.word.str()}}
                     .dump()
              << '\n';
    }

    if (cli.out.empty()) {
        std::cout << lines.str();
    } else {
        std::ofstream out(cli.out, std::ios::binary);
        if (!out) throw DataError("cannot write epoch plan: " + cli.out);
        out << lines.str();
        std::printf("sample: %zu episodes -> %s\n", plan.episodes.size(), cli.out.c_str());
    }
    return 0;
}

// ---- train ----

struct TrainCli {
    std::string corpus;
    std::string inventory;
    std::string dev;
    std::string out_dir;
    std::string config;
    std::string resume;
    TrainConfig cfg;
};

ConfigHandlers train_config_handlers(TrainCli& cli) {
    TrainConfig& cfg = cli.cfg;
    return {
        {"epochs", [&](const std::string& v) { cfg.epochs = parse_u64(v, "epochs"); }},
        {"accumulate_episodes",
         [&](const std::string& v) { cfg.accumulate_episodes = parse_u64(v, "accumulate_episodes"); }},
        {"learning_rate",
         [&](const std::string& v) { cfg.optim.learning_rate = parse_real(v, "learning_rate"); }},
        {"weight_decay",
         [&](const std::string& v) { cfg.optim.weight_decay = parse_real(v, "weight_decay"); }},
        {"beta1", [&](const std::string& v) { cfg.optim.beta1 = parse_real(v, "beta1"); }},
        {"beta2", [&](const std::string& v) { cfg.optim.beta2 = parse_real(v, "beta2"); }},
        {"eps", [&](const std::string& v) { cfg.optim.eps = parse_real(v, "eps"); }},
        {"dev_eval_every",
         [&](const std::string& v) { cfg.dev_eval_every = parse_u64(v, "dev_eval_every"); }},
        {"seed", [&](const std::string& v) { cfg.seed = parse_u64(v, "seed"); }},
        {"max_support",
         [&](const std::string& v) { cfg.sampling.max_support = parse_u64(v, "max_support"); }},
        {"support_ratio",
         [&](const std::string& v) { cfg.sampling.support_ratio = parse_real(v, "support_ratio"); }},
        {"strategy",
         [&](const std::string& v) { cfg.sampling.strategy = strategy_from_string(v); }},
        {"score_fn", [&](const std::string& v) { cfg.score_fn = score_fn_from_string(v); }},
        {"embedding_dim",
         [&](const std::string& v) { cfg.encoder.embedding_dim = parse_u64(v, "embedding_dim"); }},
        {"hash_buckets",
         [&](const std::string& v) { cfg.encoder.hash_buckets = parse_u64(v, "hash_buckets"); }},
        {"context_window",
         [&](const std::string& v) { cfg.encoder.context_window = parse_u64(v, "context_window"); }},
        {"supports_per_sense",
         [&](const std::string& v) { cfg.supports_per_sense = parse_u64(v, "supports_per_sense"); }},
        {"threads", [&](const std::string& v) { cfg.threads = parse_u64(v, "threads"); }},
    };
}

json train_log_to_json(const TrainLog& log) {
    json dev = json::array();
    for (const auto& point : log.dev) {
        dev.push_back(json{{"accuracy", point.accuracy}, {"epoch", point.epoch}});
    }
    return json{{"best_epoch", log.best_epoch},
                {"dev", std::move(dev)},
                {"dropped_queries", log.dropped_queries},
                {"epoch_mean_loss", log.epoch_mean_loss},
                {"skipped_episodes", log.skipped_episodes},
                {"wall_time_seconds", log.wall_time_seconds}};
}

int cmd_train(TrainCli& cli) {
    apply_config(cli.config, train_config_handlers(cli));
    cli.cfg.validate();

    const Corpus corpus = load_corpus_pair(cli.corpus, cli.inventory);
    Corpus dev;
    const bool have_dev = !cli.dev.empty();
    if (have_dev) dev = load_corpus(cli.dev, corpus.inventory);

    LoadedCheckpoint resume;
    const bool have_resume = !cli.resume.empty();
    if (have_resume) resume = load_checkpoint(cli.resume);

    const TrainResult result = train(corpus, cli.cfg, have_dev ? &dev : nullptr,
                                     have_resume ? &resume : nullptr);

    fs::create_directories(cli.out_dir);
    const fs::path dir(cli.out_dir);
    save_checkpoint((dir / "checkpoint.json").string(), result.model);
    const TrainerState trainer_state{result.next_epoch, cli.cfg.seed};
    save_checkpoint((dir / "final.json").string(), result.final_model, &result.optim,
                    &trainer_state);
    {
        std::ofstream out(dir / "train_log.json", std::ios::binary);
        if (!out) throw DataError("cannot write train log");
        out << train_log_to_json(result.log).dump() << '\n';
    }

    const double last_loss =
        result.log.epoch_mean_loss.empty() ? 0.0 : result.log.epoch_mean_loss.back();
    std::printf("train: %zu epochs, final mean loss %.6f\n", result.log.epoch_mean_loss.size(),
                last_loss);
    if (!result.log.dev.empty()) {
        std::printf("best dev accuracy %.4f at epoch %zu\n",
                    result.log.dev.empty() ? 0.0 : [&] {
                        double best = 0.0;
                        for (const auto& p : result.log.dev) best = std::max(best, p.accuracy);
                        return best;
                    }(),
                    result.log.best_epoch);
    }
    std::printf("checkpoint -> %s\n", (dir / "checkpoint.json").string().c_str());
    return 0;
}

// ---- predict ----

struct PredictCli {
    std::string checkpoint;
    std::string train_corpus;
    std::string inventory;
    std::string in_path;
    std::string out_path;
    std::string bank;
    std::string config;
    InferenceConfig cfg;
    std::string score_fn = "dot";
    std::string fallback = "s1";
};

ConfigHandlers predict_config_handlers(PredictCli& cli) {
    return {
        {"seed", [&](const std::string& v) { cli.cfg.seed = parse_u64(v, "seed"); }},
        {"score_fn", [&](const std::string& v) { cli.score_fn = v; }},
        {"supports_per_sense",
         [&](const std::string& v) {
             cli.cfg.supports_per_sense = parse_u64(v, "supports_per_sense");
         }},
        {"fallback", [&](const std::string& v) { cli.fallback = v; }},
    };
}

// Loads the cached bank when its digest matches the checkpoint file;
// otherwise builds and caches it.
SupportBank obtain_bank(const std::string& bank_path, const std::string& checkpoint_path,
                        const Corpus& train, const EncoderModel& model,
                        const InferenceConfig& cfg) {
    const std::string digest = file_digest_hex(checkpoint_path);
    if (!bank_path.empty() && fs::exists(bank_path)) {
        SupportBank bank = load_support_bank(bank_path);
        if (bank.checkpoint_digest == digest) return bank;
    }
    SupportBank bank = build_support_bank(train, model, cfg);
    bank.checkpoint_digest = digest;
    if (!bank_path.empty()) save_support_bank(bank_path, bank);
    return bank;
}

int cmd_predict(PredictCli& cli) {
    apply_config(cli.config, predict_config_handlers(cli));
    cli.cfg.score_fn = score_fn_from_string(cli.score_fn);
    cli.cfg.fallback = fallback_from_string(cli.fallback);
    cli.cfg.validate();

    const LoadedCheckpoint loaded = load_checkpoint(cli.checkpoint);
    const Corpus train = load_corpus_pair(cli.train_corpus, cli.inventory);
    const std::vector<Instance> instances =
        load_instances(cli.in_path, train.inventory, /*require_gold=*/false);

    const std::string bank_path = cli.bank.empty() ? cli.checkpoint + ".bank.json" : cli.bank;
    const SupportBank bank =
        obtain_bank(bank_path, cli.checkpoint, train, loaded.model, cli.cfg);

    std::vector<Prediction> preds;
    preds.reserve(instances.size());
    for (const Instance& inst : instances) {
        preds.push_back(predict(inst, bank, loaded.model, train.inventory, cli.cfg));
    }
    write_predictions(cli.out_path, preds);
    std::printf("predict: %zu instances -> %s\n", preds.size(), cli.out_path.c_str());
    return 0;
}

// ---- eval ----

struct EvalCli {
    std::string pred;
    std::string gold;
    std::string inventory;
    std::string train_corpus;
    std::string buckets = "10,50";
    std::string json_out;
};

int cmd_eval(const EvalCli& cli) {
    const SenseInventory inventory = load_inventory(cli.inventory);
    const std::vector<Instance> gold =
        load_instances(cli.gold, inventory, /*require_gold=*/true);
    const std::vector<Prediction> preds = read_predictions(cli.pred);

    Corpus train;
    const bool have_train = !cli.train_corpus.empty();
    if (have_train) train = load_corpus(cli.train_corpus, inventory);

    BucketSpec buckets;
    buckets.upper_edges = parse_bucket_edges(cli.buckets);

    const EvalReport report =
        evaluate(preds, gold, have_train ? &train : nullptr, buckets);
    std::fputs(report_to_text(report).c_str(), stdout);
    if (!cli.json_out.empty()) {
        std::ofstream out(cli.json_out, std::ios::binary);
        if (!out) throw DataError("cannot write report: " + cli.json_out);
        out << report_to_json(report) << '\n';
    }
    return 0;
}

// ---- baselines ----

struct BaselinesCli {
    std::string train_corpus;
    std::string inventory;
    std::string gold;
    std::string checkpoint;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::string score_fn = "dot";
    std::size_t supports_per_sense = 30;
    std::size_t classifier_epochs = 20;
    std::size_t batch_size = 4;
    double learning_rate = 1e-3;
    std::string buckets = "10,50";
};

int cmd_baselines(const BaselinesCli& cli) {
    const Corpus train = load_corpus_pair(cli.train_corpus, cli.inventory);
    const std::vector<Instance> gold =
        load_instances(cli.gold, train.inventory, /*require_gold=*/true);
    const LoadedCheckpoint loaded = load_checkpoint(cli.checkpoint);

    InferenceConfig icfg;
    icfg.supports_per_sense = cli.supports_per_sense;
    icfg.seed = cli.seed;
    icfg.score_fn = score_fn_from_string(cli.score_fn);
    icfg.validate();

    BucketSpec buckets;
    buckets.upper_edges = parse_bucket_edges(cli.buckets);

    fs::create_directories(cli.out_dir);
    const fs::path dir(cli.out_dir);

    std::map<std::string, std::vector<Prediction>> runs;

    {
        const std::string bank_path = cli.checkpoint + ".bank.json";
        const SupportBank bank =
            obtain_bank(bank_path, cli.checkpoint, train, loaded.model, icfg);
        auto& preds = runs["metric"];
        for (const Instance& inst : gold) {
            preds.push_back(predict(inst, bank, loaded.model, train.inventory, icfg));
        }
    }
    {
        auto& preds = runs["s1"];
        for (const Instance& inst : gold) preds.push_back(s1_baseline(inst, train.inventory));
    }
    {
        auto& preds = runs["mfs"];
        for (const Instance& inst : gold) {
            preds.push_back(mfs_baseline(inst, train, train.inventory));
        }
    }
    {
        const EncoderModel frozen = init_encoder(loaded.model.config);
        const SupportBank frozen_bank = build_support_bank(train, frozen, icfg);
        auto& preds = runs["knn"];
        for (const Instance& inst : gold) {
            preds.push_back(knn_baseline(inst, frozen_bank, frozen, train.inventory, icfg));
        }
    }
    {
        ClassifierConfig ccfg;
        ccfg.encoder = loaded.model.config;
        ccfg.encoder.seed = cli.seed;
        ccfg.optim.learning_rate = cli.learning_rate;
        ccfg.epochs = cli.classifier_epochs;
        ccfg.batch_size = cli.batch_size;
        ccfg.seed = cli.seed;
        const ClassifierModel clf = classifier_baseline_train(train, train.inventory, ccfg);
        auto& preds = runs["classifier"];
        for (const Instance& inst : gold) {
            preds.push_back(classifier_baseline_predict(clf, inst, train.inventory));
        }
    }

    std::map<std::string, EvalReport> reports;
    for (const auto& [name, preds] : runs) {
        write_predictions((dir / ("predictions_" + name + ".jsonl")).string(), preds);
        reports[name] = evaluate(preds, gold, &train, buckets);
        std::ofstream out(dir / ("report_" + name + ".json"), std::ios::binary);
        if (!out) throw DataError("cannot write report for " + name);
        out << report_to_json(reports[name]) << '\n';
    }

    std::printf("%-12s %10s %14s %15s\n", "model", "overall-F1", "word-low-acc",
                "sense-low-acc");
    const std::string low_label = buckets.labels().size() > 1 ? buckets.labels()[1] : "0";
    auto bucket_acc = [&](const std::vector<BucketRow>& rows) {
        for (const auto& row : rows) {
            if (row.label == low_label) return row.accuracy;
        }
        return 0.0;
    };
    for (const char* name : {"s1", "mfs", "knn", "classifier", "metric"}) {
        const EvalReport& r = reports.at(name);
        std::printf("%-12s %10.4f %14.4f %15.4f\n", name, r.overall.f1,
                    bucket_acc(r.word_freq), bucket_acc(r.sense_freq));
    }
    for (const char* name : {"s1", "mfs", "knn", "classifier"}) {
        std::printf("\nmetric minus %s:\n", name);
        std::fputs(diff_to_text(compare_reports(reports.at(name), reports.at("metric"))).c_str(),
                   stdout);
    }
    return 0;
}

// ---- dump-embeddings ----

struct DumpCli {
    std::string checkpoint;
    std::string corpus;
    std::string inventory;
    std::string out;
};

int cmd_dump_embeddings(const DumpCli& cli) {
    const LoadedCheckpoint loaded = load_checkpoint(cli.checkpoint);
    const SenseInventory inventory = load_inventory(cli.inventory);
    const std::vector<Instance> instances =
        load_instances(cli.corpus, inventory, /*require_gold=*/true);

    std::ofstream out(cli.out, std::ios::binary);
    if (!out) throw DataError("cannot write embeddings: " + cli.out);
    out << "d=" << loaded.model.config.embedding_dim << '\n';
    char buf[64];
    for (const Instance& inst : instances) {
        const ContextVector vec = encode(loaded.model, inst);
        out << inst.id << '\t' << inst.gold.value();
        for (double v : vec) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << '\t' << buf;
        }
        out << '\n';
    }
    std::printf("dump-embeddings: %zu rows -> %s\n", instances.size(), cli.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"episodic few-shot word sense disambiguation toolkit"};
    app.require_subcommand(1);

    FixtureCli fixture;
    auto* fixture_cmd = app.add_subcommand("fixture", "generate a synthetic long-tail corpus");
    fixture_cmd->add_option("--out-dir", fixture.out_dir, "output directory")->required();
    fixture_cmd->add_option("--seed", fixture.seed, "rng seed")->required();
    fixture_cmd->add_option("--words", fixture.words, "number of words");
    fixture_cmd->add_option("--peak", fixture.peak, "instance count at rank 1");
    fixture_cmd->add_option("--zipf", fixture.zipf, "rank-decay exponent");
    fixture_cmd->add_option("--senses-min", fixture.senses_min, "minimum senses per word");
    fixture_cmd->add_option("--senses-max", fixture.senses_max, "maximum senses per word");
    fixture_cmd->add_option("--sense-skew", fixture.sense_skew, "within-word sense imbalance");
    fixture_cmd->add_option("--signature-prob", fixture.signature_prob,
                            "chance a slot draws a sense-signature token");
    fixture_cmd->add_option("--train-frac", fixture.train_frac, "train split fraction");
    fixture_cmd->add_option("--dev-frac", fixture.dev_frac, "dev split fraction");

    std::string stats_corpus, stats_inventory;
    std::size_t stats_threshold = 10;
    auto* stats_cmd = app.add_subcommand("stats", "print corpus statistics");
    stats_cmd->add_option("--corpus", stats_corpus, "corpus JSONL")->required();
    stats_cmd->add_option("--inventory", stats_inventory, "inventory JSON")->required();
    stats_cmd->add_option("--threshold", stats_threshold, "low-frequency threshold");

    SampleCli sample;
    auto* sample_cmd = app.add_subcommand("sample", "dump one epoch of episodes");
    sample_cmd->add_option("--corpus", sample.corpus, "corpus JSONL")->required();
    sample_cmd->add_option("--inventory", sample.inventory, "inventory JSON")->required();
    sample_cmd->add_option("--seed", sample.seed, "rng seed")->required();
    sample_cmd->add_option("--epoch", sample.epoch, "epoch index");
    sample_cmd->add_option("--strategy", sample.strategy, "balanced | uniform");
    sample_cmd->add_option("--max-support", sample.max_support, "support cap");
    sample_cmd->add_option("--support-ratio", sample.support_ratio, "support share");
    sample_cmd->add_option("--out", sample.out, "write JSON here instead of stdout");

    TrainCli train_cli;
    auto* train_cmd = app.add_subcommand("train", "train the episodic model");
    train_cmd->add_option("--corpus", train_cli.corpus, "training corpus JSONL")->required();
    train_cmd->add_option("--inventory", train_cli.inventory, "inventory JSON")->required();
    train_cmd->add_option("--out", train_cli.out_dir, "output directory")->required();
    train_cmd->add_option("--seed", train_cli.cfg.seed, "rng seed")->required();
    train_cmd->add_option("--dev", train_cli.dev, "dev corpus JSONL for model selection");
    train_cmd->add_option("--config", train_cli.config, "key=value file; overrides flags");
    train_cmd->add_option("--resume", train_cli.resume, "resume from this checkpoint");
    train_cmd->add_option("--epochs", train_cli.cfg.epochs, "training epochs");
    train_cmd->add_option("--accumulate-episodes", train_cli.cfg.accumulate_episodes,
                          "episodes per optimizer step");
    train_cmd->add_option("--learning-rate", train_cli.cfg.optim.learning_rate, "step size");
    train_cmd->add_option("--weight-decay", train_cli.cfg.optim.weight_decay,
                          "decoupled decay factor");
    train_cmd->add_option("--dev-eval-every", train_cli.cfg.dev_eval_every,
                          "epochs between dev evaluations");
    train_cmd->add_option("--max-support", train_cli.cfg.sampling.max_support, "support cap");
    train_cmd->add_option("--support-ratio", train_cli.cfg.sampling.support_ratio,
                          "support share of a word's instances");
    std::string train_strategy = "balanced";
    train_cmd->add_option("--strategy", train_strategy, "balanced | uniform");
    std::string train_score_fn = "dot";
    train_cmd->add_option("--score-fn", train_score_fn, "dot | neg_sq_l2");
    train_cmd->add_option("--embedding-dim", train_cli.cfg.encoder.embedding_dim,
                          "encoder output dimension");
    train_cmd->add_option("--hash-buckets", train_cli.cfg.encoder.hash_buckets,
                          "embedding table rows");
    train_cmd->add_option("--context-window", train_cli.cfg.encoder.context_window,
                          "tokens each side of the target");
    train_cmd->add_option("--supports-per-sense", train_cli.cfg.supports_per_sense,
                          "bank size for dev evaluation");
    train_cmd->add_option("--parallel", train_cli.cfg.threads,
                          "encode episodes with this many threads");

    PredictCli predict_cli;
    auto* predict_cmd = app.add_subcommand("predict", "label instances with a checkpoint");
    predict_cmd->add_option("--checkpoint", predict_cli.checkpoint, "model file")->required();
    predict_cmd->add_option("--train-corpus", predict_cli.train_corpus,
                            "training corpus for the support bank")
        ->required();
    predict_cmd->add_option("--inventory", predict_cli.inventory, "inventory JSON")->required();
    predict_cmd->add_option("--in", predict_cli.in_path, "instances JSONL")->required();
    predict_cmd->add_option("--out", predict_cli.out_path, "predictions JSONL")->required();
    predict_cmd->add_option("--seed", predict_cli.cfg.seed, "rng seed")->required();
    predict_cmd->add_option("--bank", predict_cli.bank,
                            "support bank cache (default: <checkpoint>.bank.json)");
    predict_cmd->add_option("--config", predict_cli.config, "key=value file; overrides flags");
    predict_cmd->add_option("--score-fn", predict_cli.score_fn, "dot | neg_sq_l2");
    predict_cmd->add_option("--supports-per-sense", predict_cli.cfg.supports_per_sense,
                            "per-sense bank cap");
    predict_cmd->add_option("--fallback", predict_cli.fallback,
                            "unseen-word fallback: s1 | mfs");

    EvalCli eval_cli;
    auto* eval_cmd = app.add_subcommand("eval", "score predictions against gold");
    eval_cmd->add_option("--pred", eval_cli.pred, "predictions JSONL")->required();
    eval_cmd->add_option("--gold", eval_cli.gold, "gold instances JSONL")->required();
    eval_cmd->add_option("--inventory", eval_cli.inventory, "inventory JSON")->required();
    eval_cmd->add_option("--train-corpus", eval_cli.train_corpus,
                         "training corpus for frequency buckets");
    eval_cmd->add_option("--buckets", eval_cli.buckets, "bucket upper edges, e.g. 10,50");
    eval_cmd->add_option("--json", eval_cli.json_out, "also write the report as JSON here");

    BaselinesCli baselines_cli;
    auto* baselines_cmd =
        app.add_subcommand("baselines", "run all baselines plus the metric model");
    baselines_cmd->add_option("--train-corpus", baselines_cli.train_corpus, "training corpus")
        ->required();
    baselines_cmd->add_option("--inventory", baselines_cli.inventory, "inventory JSON")
        ->required();
    baselines_cmd->add_option("--gold", baselines_cli.gold, "gold instances JSONL")->required();
    baselines_cmd->add_option("--checkpoint", baselines_cli.checkpoint, "trained model")
        ->required();
    baselines_cmd->add_option("--out", baselines_cli.out_dir, "output directory")->required();
    baselines_cmd->add_option("--seed", baselines_cli.seed, "rng seed")->required();
    baselines_cmd->add_option("--score-fn", baselines_cli.score_fn, "dot | neg_sq_l2");
    baselines_cmd->add_option("--supports-per-sense", baselines_cli.supports_per_sense,
                              "per-sense bank cap");
    baselines_cmd->add_option("--classifier-epochs", baselines_cli.classifier_epochs,
                              "classifier baseline epochs");
    baselines_cmd->add_option("--batch-size", baselines_cli.batch_size,
                              "classifier mini-batch size");
    baselines_cmd->add_option("--learning-rate", baselines_cli.learning_rate,
                              "classifier learning rate");
    baselines_cmd->add_option("--buckets", baselines_cli.buckets, "bucket upper edges");

    DumpCli dump_cli;
    auto* dump_cmd =
        app.add_subcommand("dump-embeddings", "write encoded vectors with sense labels");
    dump_cmd->add_option("--checkpoint", dump_cli.checkpoint, "model file")->required();
    dump_cmd->add_option("--corpus", dump_cli.corpus, "instances JSONL")->required();
    dump_cmd->add_option("--inventory", dump_cli.inventory, "inventory JSON")->required();
    dump_cmd->add_option("--out", dump_cli.out, "output matrix file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*fixture_cmd) return cmd_fixture(fixture);
        if (*stats_cmd) return cmd_stats(stats_corpus, stats_inventory, stats_threshold);
        if (*sample_cmd) return cmd_sample(sample);
        if (*train_cmd) {
            train_cli.cfg.sampling.strategy = strategy_from_string(train_strategy);
            train_cli.cfg.score_fn = score_fn_from_string(train_score_fn);
            return cmd_train(train_cli);
        }
        if (*predict_cmd) return cmd_predict(predict_cli);
        if (*eval_cmd) return cmd_eval(eval_cli);
        if (*baselines_cmd) return cmd_baselines(baselines_cli);
        if (*dump_cmd) return cmd_dump_embeddings(dump_cli);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
