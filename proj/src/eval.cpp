#include "wsd/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "wsd/errors.hpp"
#include "wsd/rng.hpp"

namespace wsd {

using nlohmann::json;

namespace {

void finalize(F1Result& r) {
    r.precision = r.attempted > 0
                      ? static_cast<double>(r.correct) / static_cast<double>(r.attempted)
                      : 0.0;
    r.recall = r.total > 0 ? static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
    // Equal precision and recall mean f1 equals both; taking the value
    // directly keeps that identity exact instead of one ulp off.
    r.f1 = r.precision == r.recall
               ? r.precision
               : 2.0 * r.precision * r.recall / (r.precision + r.recall);
}

std::string digest_gold(const std::vector<Instance>& gold) {
    std::vector<std::string> lines;
    lines.reserve(gold.size());
    for (const auto& inst : gold) {
        lines.push_back(inst.id + '\t' + inst.gold.value() + '\t' + inst.dataset);
    }
    std::sort(lines.begin(), lines.end());
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& line : lines) {
        h = splitmix64(h ^ hash64(line));
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

}  // namespace

F1Result f1(const std::vector<Prediction>& predictions, const std::vector<Instance>& gold) {
    if (gold.empty()) throw DataError("empty gold set");
    std::map<std::string, const Instance*> by_id;
    for (const auto& inst : gold) {
        if (!inst.gold.has_value()) {
            throw DataError("gold instance '" + inst.id + "' lacks a sense");
        }
        if (!by_id.emplace(inst.id, &inst).second) {
            throw DataError("duplicate gold instance id '" + inst.id + "'");
        }
    }

    F1Result r;
    r.total = gold.size();
    std::map<std::string, bool> seen;
    for (const auto& pred : predictions) {
        auto it = by_id.find(pred.instance_id);
        if (it == by_id.end()) {
            throw DataError("prediction for unknown instance id '" + pred.instance_id + "'");
        }
        if (!seen.emplace(pred.instance_id, true).second) {
            throw DataError("duplicate prediction for instance id '" + pred.instance_id + "'");
        }
        ++r.attempted;
        if (pred.sense == *it->second->gold) ++r.correct;
    }
    finalize(r);
    return r;
}

void BucketSpec::validate() const {
    std::size_t prev = 0;
    for (std::size_t edge : upper_edges) {
        if (edge < 1 || edge <= prev) {
            throw ConfigError("bucket edges must be strictly increasing and >= 1");
        }
        prev = edge;
    }
}

std::vector<std::string> BucketSpec::labels() const {
    std::vector<std::string> out;
    out.push_back("0");
    std::size_t lo = 1;
    for (std::size_t edge : upper_edges) {
        out.push_back(std::to_string(lo) + "-" + std::to_string(edge));
        lo = edge + 1;
    }
    out.push_back(std::to_string(lo) + "+");
    return out;
}

std::string BucketSpec::bucket_for(std::size_t count) const {
    if (count == 0) return "0";
    std::size_t lo = 1;
    for (std::size_t edge : upper_edges) {
        if (count <= edge) return std::to_string(lo) + "-" + std::to_string(edge);
        lo = edge + 1;
    }
    return std::to_string(lo) + "+";
}

EvalReport evaluate(const std::vector<Prediction>& predictions,
                    const std::vector<Instance>& gold, const Corpus* train_corpus,
                    const BucketSpec& buckets) {
    buckets.validate();
    EvalReport report;
    report.overall = f1(predictions, gold);
    report.gold_digest = digest_gold(gold);

    std::map<std::string, const Prediction*> pred_by_id;
    for (const auto& pred : predictions) pred_by_id[pred.instance_id] = &pred;

    auto add_to = [&](F1Result& cell, const Instance& inst) {
        ++cell.total;
        auto it = pred_by_id.find(inst.id);
        if (it == pred_by_id.end()) return;
        ++cell.attempted;
        if (it->second->sense == *inst.gold) ++cell.correct;
    };

    for (const auto& inst : gold) {
        add_to(report.per_pos[std::string(1, pos_to_char(inst.word.pos))], inst);
        const std::string tag = inst.dataset.empty() ? "default" : inst.dataset;
        add_to(report.per_dataset[tag], inst);
        add_to(report.per_dataset["ALL"], inst);
    }
    for (auto& [pos, cell] : report.per_pos) finalize(cell);
    for (auto& [tag, cell] : report.per_dataset) finalize(cell);

    if (train_corpus != nullptr) {
        report.bucket_edges = buckets.upper_edges;
        std::map<std::string, BucketRow> word_rows;
        std::map<std::string, BucketRow> sense_rows;
        for (const auto& label : buckets.labels()) {
            word_rows[label].label = label;
            sense_rows[label].label = label;
        }

        for (const auto& inst : gold) {
            const WordTask* task = train_corpus->task_for(inst.word);
            const std::size_t word_count = task == nullptr ? 0 : task->instances.size();
            std::size_t sense_count = 0;
            if (task != nullptr) {
                for (const auto& tr : task->instances) {
                    if (tr.gold.has_value() && *tr.gold == *inst.gold) ++sense_count;
                }
            }

            auto it = pred_by_id.find(inst.id);
            const bool correct = it != pred_by_id.end() && it->second->sense == *inst.gold;

            BucketRow& wrow = word_rows.at(buckets.bucket_for(word_count));
            ++wrow.count;
            if (correct) ++wrow.correct;
            BucketRow& srow = sense_rows.at(buckets.bucket_for(sense_count));
            ++srow.count;
            if (correct) ++srow.correct;
        }

        for (const auto& label : buckets.labels()) {
            BucketRow wrow = word_rows.at(label);
            BucketRow srow = sense_rows.at(label);
            wrow.accuracy = wrow.count > 0
                                ? static_cast<double>(wrow.correct) /
                                      static_cast<double>(wrow.count)
                                : 0.0;
            srow.accuracy = srow.count > 0
                                ? static_cast<double>(srow.correct) /
                                      static_cast<double>(srow.count)
                                : 0.0;
            report.word_freq.push_back(std::move(wrow));
            report.sense_freq.push_back(std::move(srow));
        }
    }
    return report;
}

namespace {

std::map<std::string, double> report_cells(const EvalReport& r) {
    std::map<std::string, double> cells;
    cells["overall.precision"] = r.overall.precision;
    cells["overall.recall"] = r.overall.recall;
    cells["overall.f1"] = r.overall.f1;
    for (const auto& [pos, cell] : r.per_pos) cells["pos." + pos + ".f1"] = cell.f1;
    for (const auto& [tag, cell] : r.per_dataset) cells["dataset." + tag + ".f1"] = cell.f1;
    for (const auto& row : r.word_freq) {
        cells["word_freq." + row.label + ".accuracy"] = row.accuracy;
    }
    for (const auto& row : r.sense_freq) {
        cells["sense_freq." + row.label + ".accuracy"] = row.accuracy;
    }
    return cells;
}

json f1_to_json(const F1Result& r) {
    return json{{"attempted", r.attempted}, {"correct", r.correct}, {"f1", r.f1},
                {"precision", r.precision}, {"recall", r.recall},  {"total", r.total}};
}

json buckets_to_json(const std::vector<BucketRow>& rows) {
    json out = json::array();
    for (const auto& row : rows) {
        out.push_back(json{{"accuracy", row.accuracy},
                           {"correct", row.correct},
                           {"count", row.count},
                           {"label", row.label}});
    }
    return out;
}

}  // namespace

std::map<std::string, double> compare_reports(const EvalReport& a, const EvalReport& b) {
    if (a.gold_digest != b.gold_digest) {
        throw DataError("cannot compare reports over different gold sets");
    }
    const auto cells_a = report_cells(a);
    const auto cells_b = report_cells(b);
    if (cells_a.size() != cells_b.size()) throw DataError("reports do not align");

    std::map<std::string, double> diff;
    for (const auto& [key, value_a] : cells_a) {
        auto it = cells_b.find(key);
        if (it == cells_b.end()) throw DataError("reports do not align on cell '" + key + "'");
        diff[key] = it->second - value_a;
    }
    return diff;
}

std::string report_to_json(const EvalReport& report) {
    json root;
    root["overall"] = f1_to_json(report.overall);
    json pos = json::object();
    for (const auto& [p, cell] : report.per_pos) pos[p] = f1_to_json(cell);
    root["per_pos"] = std::move(pos);
    json ds = json::object();
    for (const auto& [tag, cell] : report.per_dataset) ds[tag] = f1_to_json(cell);
    root["per_dataset"] = std::move(ds);
    if (!report.bucket_edges.empty()) {
        root["bucket_edges"] = report.bucket_edges;
        root["bucket_edges_note"] = "tool defaults";
        root["word_freq"] = buckets_to_json(report.word_freq);
        root["sense_freq"] = buckets_to_json(report.sense_freq);
    }
    root["gold_digest"] = report.gold_digest;
    return root.dump();
}

namespace {

void append_f1_line(std::ostringstream& out, const std::string& label, const F1Result& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%-12s P=%.4f R=%.4f F1=%.4f  (correct %zu / attempted %zu / total %zu)\n",
                  label.c_str(), r.precision, r.recall, r.f1, r.correct, r.attempted, r.total);
    out << buf;
}

void append_bucket_table(std::ostringstream& out, const std::string& title,
                         const std::vector<BucketRow>& rows) {
    out << title << '\n';
    for (const auto& row : rows) {
        char buf[120];
        std::snprintf(buf, sizeof(buf), "  %-8s acc=%.4f  (correct %zu / %zu)\n",
                      row.label.c_str(), row.accuracy, row.correct, row.count);
        out << buf;
    }
}

}  // namespace

std::string report_to_text(const EvalReport& report) {
    std::ostringstream out;
    append_f1_line(out, "overall", report.overall);
    for (const auto& [pos, cell] : report.per_pos) append_f1_line(out, "pos " + pos, cell);
    for (const auto& [tag, cell] : report.per_dataset) {
        append_f1_line(out, "set " + tag, cell);
    }
    if (!report.bucket_edges.empty()) {
        std::ostringstream edges;
        for (std::size_t i = 0; i < report.bucket_edges.size(); ++i) {
            if (i > 0) edges << ", ";
            edges << report.bucket_edges[i];
        }
        append_bucket_table(out,
                            "word-frequency buckets (edges " + edges.str() + "; tool defaults)",
                            report.word_freq);
        append_bucket_table(out,
                            "sense-frequency buckets (edges " + edges.str() + "; tool defaults)",
                            report.sense_freq);
    }
    return out.str();
}

std::string diff_to_text(const std::map<std::string, double>& diff) {
    std::ostringstream out;
    for (const auto& [key, delta] : diff) {
        char buf[120];
        std::snprintf(buf, sizeof(buf), "%-28s %+.4f\n", key.c_str(), delta);
        out << buf;
    }
    return out.str();
}

}  // namespace wsd
