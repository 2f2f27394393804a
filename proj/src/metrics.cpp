#include "lsw/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lsw/errors.hpp"

namespace lsw {

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

std::string fixed4(double x) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << x;
    return os.str();
}

}  // namespace

MetricsReport compute_metrics(const std::vector<Tensor1>& probabilities,
                              const std::vector<Tensor1>& gold, double threshold,
                              bool skip_empty_classes) {
    if (probabilities.size() != gold.size()) {
        throw std::invalid_argument("compute_metrics: " + std::to_string(probabilities.size()) +
                                    " prediction rows vs " + std::to_string(gold.size()) +
                                    " gold rows");
    }
    if (probabilities.empty()) {
        throw std::invalid_argument("compute_metrics: no rows");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("compute_metrics: threshold must be in (0,1)");
    }
    const std::size_t m = probabilities[0].len();

    MetricsReport rep;
    rep.threshold = threshold;
    rep.per_class.assign(m, ClassCounts{});
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        if (probabilities[i].len() != m || gold[i].len() != m) {
            throw std::invalid_argument("compute_metrics: row " + std::to_string(i) +
                                        " has inconsistent width");
        }
        for (std::size_t c = 0; c < m; ++c) {
            const bool pred = probabilities[i][c] >= threshold;
            const bool is_gold = gold[i][c] >= 0.5;
            if (pred && is_gold) ++rep.per_class[c].tp;
            else if (pred && !is_gold) ++rep.per_class[c].fp;
            else if (!pred && is_gold) ++rep.per_class[c].fn;
        }
    }

    long tp = 0, fp = 0, fn = 0;
    double sum_p = 0, sum_r = 0, sum_f1 = 0;
    std::size_t macro_classes = 0;
    for (const ClassCounts& c : rep.per_class) {
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
        if (skip_empty_classes && c.tp + c.fp + c.fn == 0) continue;
        const double p = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
        const double r = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
        sum_p += p;
        sum_r += r;
        sum_f1 += f1_of(p, r);
        ++macro_classes;
    }
    const double denom = macro_classes == 0 ? 1.0 : static_cast<double>(macro_classes);
    rep.macro_precision = sum_p / denom;
    rep.macro_recall = sum_r / denom;
    rep.macro_f1 = sum_f1 / denom;
    rep.micro_precision = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
    rep.micro_recall = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
    rep.micro_f1 = f1_of(rep.micro_precision, rep.micro_recall);
    return rep;
}

void write_metrics_csv(const std::string& path, const std::string& method,
                       const MetricsReport& r) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("write_metrics_csv: cannot open '" + path + "'");
    }
    out << "method,macro_f1,macro_precision,macro_recall,micro_f1,micro_precision,micro_recall\n";
    out << method << ',' << fixed4(r.macro_f1) << ',' << fixed4(r.macro_precision) << ','
        << fixed4(r.macro_recall) << ',' << fixed4(r.micro_f1) << ','
        << fixed4(r.micro_precision) << ',' << fixed4(r.micro_recall) << "\n";
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_metrics_csv: cannot open '" + path + "'");
    }
    std::vector<MetricsRow> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::istringstream ls(line);
        MetricsRow row;
        std::string field;
        if (!std::getline(ls, row.method, ',')) continue;
        bool ok = true;
        for (double& v : row.values) {
            if (!std::getline(ls, field, ',')) {
                ok = false;
                break;
            }
            v = std::stod(field);
        }
        if (ok) rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw std::runtime_error("read_metrics_csv: no data rows in '" + path + "'");
    }
    return rows;
}

MetricsDelta compare_runs(const MetricsReport& a, const MetricsReport& b) {
    if (a.per_class.size() != b.per_class.size()) {
        throw CompatError("compare_runs: label spaces differ (" +
                          std::to_string(a.per_class.size()) + " vs " +
                          std::to_string(b.per_class.size()) + " classes)");
    }
    const double av[6] = {a.macro_f1, a.macro_precision, a.macro_recall,
                          a.micro_f1, a.micro_precision, a.micro_recall};
    const double bv[6] = {b.macro_f1, b.macro_precision, b.macro_recall,
                          b.micro_f1, b.micro_precision, b.micro_recall};
    MetricsDelta d;
    for (int i = 0; i < 6; ++i) {
        d.delta[i] = av[i] - bv[i];
        d.better[i] = d.delta[i] > 0 ? 'a' : (d.delta[i] < 0 ? 'b' : '=');
    }
    return d;
}

void write_compare_csv(const std::string& path, const MetricsRow& a, const MetricsRow& b) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("write_compare_csv: cannot open '" + path + "'");
    }
    out << "row,macro_f1,macro_precision,macro_recall,micro_f1,micro_precision,micro_recall\n";
    auto emit = [&](const std::string& name, const double* v) {
        out << name;
        for (int i = 0; i < 6; ++i) out << ',' << fixed4(v[i]);
        out << "\n";
    };
    emit(a.method, a.values);
    emit(b.method, b.values);
    double delta[6];
    out << "delta";
    for (int i = 0; i < 6; ++i) {
        delta[i] = a.values[i] - b.values[i];
        out << ',' << fixed4(delta[i]);
    }
    out << "\nbetter";
    for (int i = 0; i < 6; ++i) {
        out << ',' << (delta[i] > 0 ? a.method : (delta[i] < 0 ? b.method : "="));
    }
    out << "\n";
}

WeightReport export_weights(const std::vector<DocumentRecord>& docs, const Vocab& vocab,
                            EncoderParams& enc, LswParams& params, const ModelConfig& cfg,
                            const LabelIndex& labels, double bin_width) {
    if (cfg.kind != ModelKind::kLsw) {
        throw CompatError("export_weights: model has no section weights (kind " +
                          std::string(to_string(cfg.kind)) + ")");
    }
    if (docs.empty()) {
        throw std::invalid_argument("export_weights: no documents");
    }
    if (!(bin_width > 0.0 && bin_width <= 1.0)) {
        throw std::invalid_argument("export_weights: bin width must be in (0,1]");
    }
    const std::size_t K = cfg.section_names.size();
    const auto n_bins = static_cast<std::size_t>(std::ceil(1.0 / bin_width));

    WeightReport rep;
    rep.section_names = cfg.section_names;
    rep.bin_width = bin_width;
    rep.histogram.assign(K, std::vector<long>(n_bins, 0));
    Tensor1 sum(K, 0.0), sum_sq(K, 0.0);
    for (const DocumentRecord& doc : docs) {
        ForwardTrace trace = forward(doc, vocab, enc, params, cfg, labels);
        rep.doc_ids.push_back(doc.id);
        for (std::size_t k = 0; k < K; ++k) {
            const double w = trace.weights[k];
            sum[k] += w;
            sum_sq[k] += w * w;
            auto bin = static_cast<std::size_t>(w / bin_width);
            if (bin >= n_bins) bin = n_bins - 1;  // w == 1.0 lands in the top bin
            ++rep.histogram[k][bin];
        }
        rep.rows.push_back(std::move(trace.weights));
    }
    const double n = static_cast<double>(rep.rows.size());
    rep.mean = Tensor1(K);
    rep.stddev = Tensor1(K);
    for (std::size_t k = 0; k < K; ++k) {
        rep.mean[k] = sum[k] / n;
        const double var = std::max(0.0, sum_sq[k] / n - rep.mean[k] * rep.mean[k]);
        rep.stddev[k] = std::sqrt(var);
    }
    return rep;
}

void write_weight_csvs(const WeightReport& rep, const std::string& per_doc_path,
                       const std::string& summary_path) {
    {
        std::ofstream out(per_doc_path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("write_weight_csvs: cannot open '" + per_doc_path + "'");
        }
        out << "id";
        for (const std::string& s : rep.section_names) out << ',' << s;
        out << "\n";
        for (std::size_t i = 0; i < rep.rows.size(); ++i) {
            out << rep.doc_ids[i];
            for (std::size_t k = 0; k < rep.rows[i].len(); ++k) {
                out << ',' << fixed4(rep.rows[i][k]);
            }
            out << "\n";
        }
    }
    {
        std::ofstream out(summary_path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("write_weight_csvs: cannot open '" + summary_path + "'");
        }
        out << "section,mean,std";
        const std::size_t n_bins = rep.histogram.empty() ? 0 : rep.histogram[0].size();
        for (std::size_t b = 0; b < n_bins; ++b) {
            out << ",bin_" << fixed4(static_cast<double>(b) * rep.bin_width);
        }
        out << "\n";
        for (std::size_t k = 0; k < rep.section_names.size(); ++k) {
            out << rep.section_names[k] << ',' << fixed4(rep.mean[k]) << ','
                << fixed4(rep.stddev[k]);
            for (long c : rep.histogram[k]) out << ',' << c;
            out << "\n";
        }
    }
}

}  // namespace lsw
