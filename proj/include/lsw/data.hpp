#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace lsw {

// One document: id, section texts in the corpus-declared order, gold labels
// (kept sorted and de-duplicated).
struct DocumentRecord {
    std::string id;
    std::vector<std::pair<std::string, std::string>> sections;  // name -> text, ordered
    std::vector<std::string> labels;

    const std::string* section_text(const std::string& name) const;
};

// label name -> class index, lexicographic for reproducibility.
struct LabelIndex {
    std::vector<std::string> names;              // index -> name
    std::unordered_map<std::string, int> index;  // name -> index

    static LabelIndex from_labels(const std::vector<std::string>& sorted_unique_names);
    int size() const { return static_cast<int>(names.size()); }
    int lookup(const std::string& name) const;  // -1 if unknown
};

struct LoadResult {
    std::vector<DocumentRecord> records;
    LabelIndex labels;
    std::vector<std::string> declared_sections;
    std::size_t missing_section_fills = 0;
    std::size_t malformed_lines = 0;
    std::vector<std::string> warnings;  // "line N: <reason>", capped
};

// Reads UTF-8 JSON-lines with keys `id`, `sections`, `labels`. Every record
// is normalized to carry all declared sections (missing ones become empty
// text and are counted). Pass an empty declared list to adopt the section
// order of the first well-formed line. Malformed lines are skipped and
// reported; more than 10% malformed (or zero usable records) is a hard error.
LoadResult load_corpus(const std::string& path, std::vector<std::string> declared_sections = {});

void save_corpus(const std::string& path, const std::vector<DocumentRecord>& records);

struct SplitSpec {
    double validation_fraction = 0.10;
    std::uint64_t seed = 1;
};

struct Split {
    std::vector<DocumentRecord> train;
    std::vector<DocumentRecord> validation;
};

// round(fraction * n), the held-out size used by split().
std::size_t validation_count(std::size_t n, double fraction);

// Deterministic seeded shuffle then partition; requires at least 10 records.
Split split(const std::vector<DocumentRecord>& records, const SplitSpec& spec);

// ---- synthetic corpus with planted section informativeness ----

struct SynthSpec {
    int sections = 3;
    int classes = 8;
    int docs = 2000;
    int informative_section = 0;
    double noise = 0.3;  // fraction of noise tokens inside the informative section
    std::uint64_t seed = 7;

    int tokens_per_section = 30;
    int signature_tokens_per_class = 4;
    int noise_pool = 200;
    double extra_label_prob = 0.25;  // chance of each additional label, up to max_labels
    int max_labels = 3;
};

struct SynthResult {
    std::vector<DocumentRecord> records;
    std::vector<std::string> section_names;
    std::vector<std::string> label_names;
    // label -> its signature tokens; written to the sidecar manifest so the
    // corpus can be audited.
    std::vector<std::vector<std::string>> signature_tokens;
};

// Labels are sampled first; the informative section then mixes label
// signature tokens with shared-pool noise at the requested noise level, while
// every other section draws noise tokens only. Deterministic by seed.
SynthResult gen_synthetic(const SynthSpec& spec);

// Writes records as JSONL plus `<path>.gen.json` (seed, spec, signature
// token table).
void save_synthetic(const std::string& path, const SynthSpec& spec, const SynthResult& result);

}  // namespace lsw
