#include "lsw/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "lsw/rng.hpp"

namespace lsw {

using ordered_json = nlohmann::ordered_json;

const std::string* DocumentRecord::section_text(const std::string& name) const {
    for (const auto& [n, text] : sections) {
        if (n == name) return &text;
    }
    return nullptr;
}

LabelIndex LabelIndex::from_labels(const std::vector<std::string>& sorted_unique_names) {
    LabelIndex idx;
    idx.names = sorted_unique_names;
    for (std::size_t i = 0; i < idx.names.size(); ++i) {
        idx.index.emplace(idx.names[i], static_cast<int>(i));
    }
    return idx;
}

int LabelIndex::lookup(const std::string& name) const {
    auto it = index.find(name);
    return it == index.end() ? -1 : it->second;
}

namespace {

constexpr std::size_t kMaxWarnings = 50;

void warn(LoadResult& out, std::size_t line_no, const std::string& why) {
    ++out.malformed_lines;
    if (out.warnings.size() < kMaxWarnings) {
        out.warnings.push_back("line " + std::to_string(line_no) + ": " + why);
    }
}

// Returns false (with a reason) instead of throwing so the caller can skip
// the line and keep a count.
bool parse_line(const std::string& line, DocumentRecord& rec,
                std::vector<std::string>& section_order, std::string& why) {
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        why = "not a JSON object";
        return false;
    }
    if (!j.contains("id") || !j["id"].is_string()) {
        why = "missing string key 'id'";
        return false;
    }
    if (!j.contains("sections") || !j["sections"].is_object()) {
        why = "missing object key 'sections'";
        return false;
    }
    if (!j.contains("labels") || !j["labels"].is_array()) {
        why = "missing array key 'labels'";
        return false;
    }
    rec.id = j["id"].get<std::string>();
    rec.sections.clear();
    section_order.clear();
    for (auto& [name, text] : j["sections"].items()) {
        if (!text.is_string()) {
            why = "section '" + name + "' is not a string";
            return false;
        }
        rec.sections.emplace_back(name, text.get<std::string>());
        section_order.push_back(name);
    }
    std::set<std::string> labels;
    for (auto& l : j["labels"]) {
        if (!l.is_string()) {
            why = "label entry is not a string";
            return false;
        }
        labels.insert(l.get<std::string>());
    }
    if (labels.empty()) {
        why = "empty label set";
        return false;
    }
    rec.labels.assign(labels.begin(), labels.end());
    return true;
}

}  // namespace

LoadResult load_corpus(const std::string& path, std::vector<std::string> declared_sections) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_corpus: cannot open '" + path + "'");
    }
    LoadResult out;
    out.declared_sections = std::move(declared_sections);

    std::unordered_set<std::string> seen_ids;
    std::set<std::string> all_labels;
    std::string line;
    std::size_t line_no = 0;
    std::size_t nonempty_lines = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ++nonempty_lines;

        DocumentRecord rec;
        std::vector<std::string> order;
        std::string why;
        if (!parse_line(line, rec, order, why)) {
            warn(out, line_no, why);
            continue;
        }
        if (!seen_ids.insert(rec.id).second) {
            warn(out, line_no, "duplicate id '" + rec.id + "'");
            continue;
        }
        if (out.declared_sections.empty()) {
            out.declared_sections = order;  // adopt the first well-formed line's order
        }

        // normalize to the declared section list
        DocumentRecord norm;
        norm.id = std::move(rec.id);
        norm.labels = std::move(rec.labels);
        for (const std::string& name : out.declared_sections) {
            const std::string* text = rec.section_text(name);
            if (text == nullptr) ++out.missing_section_fills;
            norm.sections.emplace_back(name, text ? *text : std::string());
        }
        for (const auto& [name, text] : rec.sections) {
            (void)text;
            if (std::find(out.declared_sections.begin(), out.declared_sections.end(), name) ==
                out.declared_sections.end()) {
                if (out.warnings.size() < kMaxWarnings) {
                    out.warnings.push_back("line " + std::to_string(line_no) +
                                           ": ignoring undeclared section '" + name + "'");
                }
            }
        }
        for (const std::string& l : norm.labels) all_labels.insert(l);
        out.records.push_back(std::move(norm));
    }

    if (out.records.empty()) {
        throw std::runtime_error("load_corpus: empty corpus in '" + path + "'");
    }
    if (10 * out.malformed_lines > nonempty_lines) {
        throw std::runtime_error("load_corpus: " + std::to_string(out.malformed_lines) + " of " +
                                 std::to_string(nonempty_lines) +
                                 " lines malformed (>10%) in '" + path + "'");
    }
    out.labels =
        LabelIndex::from_labels(std::vector<std::string>(all_labels.begin(), all_labels.end()));
    return out;
}

void save_corpus(const std::string& path, const std::vector<DocumentRecord>& records) {
    std::ofstream outf(path, std::ios::binary);  // binary: byte-identical across platforms
    if (!outf) {
        throw std::runtime_error("save_corpus: cannot open '" + path + "' for writing");
    }
    for (const DocumentRecord& r : records) {
        ordered_json j;
        j["id"] = r.id;
        ordered_json secs = ordered_json::object();
        for (const auto& [name, text] : r.sections) secs[name] = text;
        j["sections"] = std::move(secs);
        j["labels"] = r.labels;
        outf << j.dump() << "\n";
    }
}

std::size_t validation_count(std::size_t n, double fraction) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

Split split(const std::vector<DocumentRecord>& records, const SplitSpec& spec) {
    if (records.size() < 10) {
        throw std::invalid_argument("split: need at least 10 records, got " +
                                    std::to_string(records.size()));
    }
    if (spec.validation_fraction <= 0.0 || spec.validation_fraction >= 1.0) {
        throw std::invalid_argument("split: validation fraction must be in (0,1)");
    }
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix64(spec.seed));
    rng.shuffle(order);

    const std::size_t n_val = validation_count(records.size(), spec.validation_fraction);
    Split out;
    out.validation.reserve(n_val);
    out.train.reserve(records.size() - n_val);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_val ? out.validation : out.train).push_back(records[order[i]]);
    }
    return out;
}

SynthResult gen_synthetic(const SynthSpec& spec) {
    if (spec.sections < 1 || spec.classes < 1 || spec.docs < 1) {
        throw std::invalid_argument("gen_synthetic: sections, classes and docs must be positive");
    }
    if (spec.informative_section < 0 || spec.informative_section >= spec.sections) {
        throw std::invalid_argument("gen_synthetic: informative section index " +
                                    std::to_string(spec.informative_section) + " outside [0," +
                                    std::to_string(spec.sections) + ")");
    }
    if (spec.noise < 0.0 || spec.noise > 1.0) {
        throw std::invalid_argument("gen_synthetic: noise level must be in [0,1]");
    }
    if (spec.tokens_per_section < 1 || spec.signature_tokens_per_class < 1 ||
        spec.noise_pool < 1 || spec.max_labels < 1) {
        throw std::invalid_argument(
            "gen_synthetic: token, signature, pool and label counts must be positive");
    }

    SynthResult out;
    for (int k = 0; k < spec.sections; ++k) out.section_names.push_back("sec_" + std::to_string(k));
    for (int c = 0; c < spec.classes; ++c) out.label_names.push_back("class_" + std::to_string(c));
    out.signature_tokens.resize(spec.classes);
    for (int c = 0; c < spec.classes; ++c) {
        for (int s = 0; s < spec.signature_tokens_per_class; ++s) {
            out.signature_tokens[c].push_back("sig" + std::to_string(c) + "x" + std::to_string(s));
        }
    }

    Rng rng(mix64(spec.seed));
    auto noise_token = [&] { return "noise" + std::to_string(rng.index(spec.noise_pool)); };

    out.records.reserve(spec.docs);
    for (int i = 0; i < spec.docs; ++i) {
        DocumentRecord rec;
        rec.id = "doc" + std::to_string(i);

        std::vector<int> label_ids{static_cast<int>(rng.index(spec.classes))};
        for (int extra = 1; extra < spec.max_labels; ++extra) {
            if (rng.uniform() < spec.extra_label_prob) {
                int c = static_cast<int>(rng.index(spec.classes));
                if (std::find(label_ids.begin(), label_ids.end(), c) == label_ids.end()) {
                    label_ids.push_back(c);
                }
            }
        }
        std::set<std::string> labels;
        for (int c : label_ids) labels.insert(out.label_names[c]);
        rec.labels.assign(labels.begin(), labels.end());

        for (int k = 0; k < spec.sections; ++k) {
            std::string text;
            for (int t = 0; t < spec.tokens_per_section; ++t) {
                std::string tok;
                if (k == spec.informative_section && rng.uniform() >= spec.noise) {
                    const int c = label_ids[rng.index(label_ids.size())];
                    tok = out.signature_tokens[c][rng.index(out.signature_tokens[c].size())];
                } else {
                    tok = noise_token();
                }
                if (!text.empty()) text += ' ';
                text += tok;
            }
            rec.sections.emplace_back(out.section_names[k], std::move(text));
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

void save_synthetic(const std::string& path, const SynthSpec& spec, const SynthResult& result) {
    save_corpus(path, result.records);

    ordered_json manifest;
    manifest["seed"] = spec.seed;
    manifest["spec"] = {{"sections", spec.sections},
                        {"classes", spec.classes},
                        {"docs", spec.docs},
                        {"informative_section", spec.informative_section},
                        {"noise", spec.noise},
                        {"tokens_per_section", spec.tokens_per_section},
                        {"signature_tokens_per_class", spec.signature_tokens_per_class},
                        {"noise_pool", spec.noise_pool},
                        {"extra_label_prob", spec.extra_label_prob},
                        {"max_labels", spec.max_labels}};
    manifest["section_names"] = result.section_names;
    manifest["label_names"] = result.label_names;
    ordered_json sig = ordered_json::object();
    for (std::size_t c = 0; c < result.label_names.size(); ++c) {
        sig[result.label_names[c]] = result.signature_tokens[c];
    }
    manifest["signature_tokens"] = std::move(sig);

    std::ofstream mf(path + ".gen.json", std::ios::binary);
    if (!mf) {
        throw std::runtime_error("save_synthetic: cannot write sidecar for '" + path + "'");
    }
    mf << manifest.dump(2) << "\n";
}

}  // namespace lsw
