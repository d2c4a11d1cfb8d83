#pragma once

#include <map>
#include <string>
#include <vector>

#include "wsd/corpus.hpp"
#include "wsd/inference.hpp"

namespace wsd {

struct F1Result {
    std::size_t total = 0;      // gold instances
    std::size_t attempted = 0;  // instances with a prediction
    std::size_t correct = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// precision = correct/attempted (0 when nothing attempted), recall =
// correct/total, f1 = harmonic mean. Unattempted instances count against
// recall only.
F1Result f1(const std::vector<Prediction>& predictions, const std::vector<Instance>& gold);

// Upper edges of the finite frequency buckets; {10, 50} yields buckets
// 0, 1-10, 11-50, 51+. Edges must be strictly increasing and >= 1.
struct BucketSpec {
    std::vector<std::size_t> upper_edges = {10, 50};

    void validate() const;
    std::vector<std::string> labels() const;           // one per bucket, in order
    std::string bucket_for(std::size_t count) const;   // label for a training count
};

struct BucketRow {
    std::string label;
    std::size_t count = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
};

struct EvalReport {
    F1Result overall;
    std::map<std::string, F1Result> per_pos;      // keys "n","v","a","r" as observed
    std::map<std::string, F1Result> per_dataset;  // dataset tags plus "ALL"
    // Word buckets key on the word's training instance count, sense buckets
    // on the training count of the instance's gold sense. Empty when no
    // train corpus was supplied. Edges are tool defaults, not a published
    // protocol.
    std::vector<BucketRow> word_freq;
    std::vector<BucketRow> sense_freq;
    std::vector<std::size_t> bucket_edges;
    std::string gold_digest;  // identity of the gold set, for report comparison
};

// Pure function of its inputs. Gold instances need a sense and may carry a
// dataset tag (untagged ones land in "default").
EvalReport evaluate(const std::vector<Prediction>& predictions,
                    const std::vector<Instance>& gold, const Corpus* train_corpus,
                    const BucketSpec& buckets = {});

// Per-cell deltas, second report minus first. Both reports must describe the
// same gold set.
std::map<std::string, double> compare_reports(const EvalReport& a, const EvalReport& b);

std::string report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);
std::string diff_to_text(const std::map<std::string, double>& diff);

}  // namespace wsd
