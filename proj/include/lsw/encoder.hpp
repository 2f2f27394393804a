#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lsw/data.hpp"
#include "lsw/tape.hpp"
#include "lsw/tensor.hpp"

namespace lsw {

// Section-vector width used with full-scale transformer encoders; the desk
// default is kDefaultSectionDim.
inline constexpr int kFullScaleSectionDim = 768;
inline constexpr int kDefaultSectionDim = 64;

// Lowercases, splits on Unicode whitespace and strips leading/trailing ASCII
// punctuation per token; tokens that become empty are dropped. Lowercasing
// and punctuation handling are ASCII-level; multi-byte characters pass
// through untouched.
std::vector<std::string> tokenize(std::string_view text);

struct Vocab {
    static constexpr int kUnknown = 0;
    static constexpr int kPad = 1;

    std::vector<std::string> tokens;              // index -> token, [0]="<unk>", [1]="<pad>"
    std::unordered_map<std::string, int> index;   // token -> index
    int min_count = 1;

    int size() const { return static_cast<int>(tokens.size()); }
    int lookup(const std::string& token) const;  // kUnknown for out-of-vocab

    // One token per line after a 2-line header (format version, min_count).
    void save(const std::string& path) const;
    static Vocab load(const std::string& path);
};

// Counts tokens over all sections of the given documents (pass the training
// split only — validation text must not leak into the vocabulary), keeps
// those with frequency >= min_count, and orders them by frequency descending
// then lexicographic. Throws on an empty corpus.
Vocab build_vocab(const std::vector<DocumentRecord>& train_docs, int min_count);

struct SectionVector {
    Tensor1 values;
    std::string section_name;
};

// Shared embedding-bag encoder: mean of token embeddings followed by a d->d
// projection and relu. One instance serves every section of every document.
struct EncoderParams {
    ParamGroup embedding;   // vocab_size x d, weight-only
    ParamGroup projection;  // d x d with bias

    static EncoderParams init(int vocab_size, int d, std::uint64_t seed);

    bool frozen() const { return embedding.frozen && projection.frozen; }
    void set_frozen(bool f) { embedding.frozen = projection.frozen = f; }
    int dim() const { return static_cast<int>(projection.weight.rows); }
};

std::vector<int> token_ids(const std::vector<std::string>& tokens, const Vocab& vocab);

// Value-only encoding. An empty token list encodes the zero vector, so the
// result is relu(projection bias).
SectionVector encode_section(const std::vector<std::string>& tokens, const Vocab& vocab,
                             const EncoderParams& params, std::string section_name = {});

// Tape-recorded variant used by training forwards.
Tape::NodeId encode_section_on_tape(Tape& tape, const std::vector<int>& ids,
                                    EncoderParams& params);

}  // namespace lsw
