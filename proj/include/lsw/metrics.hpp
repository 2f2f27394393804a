#pragma once

#include <string>
#include <vector>

#include "lsw/data.hpp"
#include "lsw/model.hpp"
#include "lsw/tensor.hpp"

namespace lsw {

struct ClassCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
};

struct MetricsReport {
    double macro_f1 = 0, macro_precision = 0, macro_recall = 0;
    double micro_f1 = 0, micro_precision = 0, micro_recall = 0;
    std::vector<ClassCounts> per_class;
    double threshold = 0.5;
};

// Thresholds probabilities at `threshold` (prediction = p >= threshold),
// accumulates per-class TP/FP/FN and derives the six micro/macro metrics.
// A class with TP=FP=FN=0 contributes 0 to the macro means; pass
// skip_empty_classes=true to average over non-empty classes instead.
MetricsReport compute_metrics(const std::vector<Tensor1>& probabilities,
                              const std::vector<Tensor1>& gold, double threshold,
                              bool skip_empty_classes = false);

// "method, macro_f1, ..., micro_recall" rows, fractions with 4 decimals.
void write_metrics_csv(const std::string& path, const std::string& method,
                       const MetricsReport& report);

struct MetricsRow {
    std::string method;
    double values[6];  // macro_f1, macro_p, macro_r, micro_f1, micro_p, micro_r
};

std::vector<MetricsRow> read_metrics_csv(const std::string& path);

struct MetricsDelta {
    double delta[6];  // a - b
    char better[6];   // 'a', 'b' or '=' per metric
};

// Per-metric differences between two reports; throws CompatError when the
// label spaces (per-class count vectors) are not the same size.
MetricsDelta compare_runs(const MetricsReport& a, const MetricsReport& b);

// CSV-level comparison of two single-method metrics files: emits rows for a,
// b, delta and the better-value marker per metric column.
void write_compare_csv(const std::string& path, const MetricsRow& a, const MetricsRow& b);

// ---- section-weight explainability ----

struct WeightReport {
    std::vector<std::string> section_names;
    std::vector<std::string> doc_ids;
    std::vector<Tensor1> rows;        // per-document weights, each sums to 1
    Tensor1 mean;                     // corpus mean per section
    Tensor1 stddev;                   // population std per section
    std::vector<std::vector<long>> histogram;  // [section][bin], bins of bin_width over [0,1]
    double bin_width = 0.05;
};

// Runs the LSW forward over every document and collects w_k rows plus
// summary statistics. Throws CompatError for baseline kinds (they carry no
// section weights).
WeightReport export_weights(const std::vector<DocumentRecord>& docs, const Vocab& vocab,
                            EncoderParams& enc, LswParams& params, const ModelConfig& cfg,
                            const LabelIndex& labels, double bin_width = 0.05);

// Per-document CSV (id, one column per section) and summary CSV (per-section
// mean, std and histogram counts).
void write_weight_csvs(const WeightReport& report, const std::string& per_doc_path,
                       const std::string& summary_path);

}  // namespace lsw
