#include "lsw/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "lsw/rng.hpp"

namespace lsw {

namespace {

// Unicode whitespace codepoints beyond ASCII.
bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case 0x0085:
        case 0x00A0:
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202F:
        case 0x205F:
        case 0x3000:
            return true;
        default:
            return (cp >= 0x2000 && cp <= 0x200A) || (cp >= 0x09 && cp <= 0x0D) || cp == 0x20;
    }
}

// Decodes one UTF-8 codepoint at s[i]; advances i by the sequence length.
// Invalid bytes are passed through as single-byte codepoints.
char32_t next_codepoint(std::string_view s, std::size_t& i, std::size_t& seq_len) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = b0;
    if ((b0 & 0x80u) != 0) {
        if ((b0 & 0xE0u) == 0xC0u) {
            len = 2;
            cp = b0 & 0x1Fu;
        } else if ((b0 & 0xF0u) == 0xE0u) {
            len = 3;
            cp = b0 & 0x0Fu;
        } else if ((b0 & 0xF8u) == 0xF0u) {
            len = 4;
            cp = b0 & 0x07u;
        } else {
            len = 1;  // stray continuation byte
        }
        if (i + len > s.size()) len = 1;
        for (std::size_t k = 1; k < len; ++k) {
            const auto bk = static_cast<unsigned char>(s[i + k]);
            if ((bk & 0xC0u) != 0x80u) {
                len = 1;
                cp = b0;
                break;
            }
            cp = (cp << 6) | (bk & 0x3Fu);
        }
    }
    seq_len = len;
    i += len;
    return cp;
}

void strip_and_emit(std::string token, std::vector<std::string>& out) {
    std::size_t b = 0;
    std::size_t e = token.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(token[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(token[e - 1]))) --e;
    if (e > b) out.push_back(token.substr(b, e - b));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        std::size_t seq_len = 0;
        const char32_t cp = next_codepoint(text, i, seq_len);
        if (is_unicode_space(cp)) {
            if (!current.empty()) {
                strip_and_emit(std::move(current), out);
                current.clear();
            }
        } else if (seq_len == 1) {
            current.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(text[start]))));
        } else {
            current.append(text.substr(start, seq_len));
        }
    }
    if (!current.empty()) strip_and_emit(std::move(current), out);
    return out;
}

int Vocab::lookup(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? kUnknown : it->second;
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("vocab: cannot open '" + path + "' for writing");
    }
    out << "lsw-vocab-v1\n" << min_count << "\n";
    for (const std::string& t : tokens) out << t << "\n";
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("vocab: cannot open '" + path + "'");
    }
    std::string header;
    if (!std::getline(in, header) || header != "lsw-vocab-v1") {
        throw std::runtime_error("vocab: bad header in '" + path + "'");
    }
    Vocab v;
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("vocab: truncated header in '" + path + "'");
    }
    v.min_count = std::stoi(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        v.index.emplace(line, static_cast<int>(v.tokens.size()));
        v.tokens.push_back(line);
    }
    if (v.tokens.size() < 2 || v.tokens[0] != "<unk>" || v.tokens[1] != "<pad>") {
        throw std::runtime_error("vocab: reserved entries missing in '" + path + "'");
    }
    return v;
}

Vocab build_vocab(const std::vector<DocumentRecord>& train_docs, int min_count) {
    if (min_count < 1) {
        throw std::invalid_argument("build_vocab: min_count must be >= 1");
    }
    if (train_docs.empty()) {
        throw std::invalid_argument("build_vocab: empty corpus");
    }
    std::unordered_map<std::string, std::size_t> counts;
    for (const DocumentRecord& doc : train_docs) {
        for (const auto& [name, text] : doc.sections) {
            (void)name;
            for (std::string& tok : tokenize(text)) {
                ++counts[std::move(tok)];
            }
        }
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    kept.reserve(counts.size());
    for (auto& [tok, cnt] : counts) {
        if (cnt >= static_cast<std::size_t>(min_count)) kept.emplace_back(tok, cnt);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocab v;
    v.min_count = min_count;
    v.tokens = {"<unk>", "<pad>"};  // tokenize() strips '<'/'>', so no collision is possible
    for (auto& [tok, cnt] : kept) {
        (void)cnt;
        v.tokens.push_back(tok);
    }
    for (std::size_t i = 0; i < v.tokens.size(); ++i) {
        v.index.emplace(v.tokens[i], static_cast<int>(i));
    }
    return v;
}

EncoderParams EncoderParams::init(int vocab_size, int d, std::uint64_t seed) {
    if (vocab_size < 2 || d < 1) {
        throw std::invalid_argument("encoder: vocab_size must be >= 2 and d >= 1");
    }
    EncoderParams p;
    p.embedding = ParamGroup("encoder.embedding", static_cast<std::size_t>(vocab_size),
                             static_cast<std::size_t>(d), /*with_bias=*/false);
    uniform_init(p.embedding.weight, -0.05, 0.05, mix64(seed ^ fnv1a64("encoder.embedding")));
    p.projection = ParamGroup("encoder.projection", static_cast<std::size_t>(d),
                              static_cast<std::size_t>(d));
    glorot_init(p.projection, mix64(seed ^ fnv1a64("encoder.projection")));
    return p;
}

std::vector<int> token_ids(const std::vector<std::string>& tokens, const Vocab& vocab) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const std::string& t : tokens) ids.push_back(vocab.lookup(t));
    return ids;
}

SectionVector encode_section(const std::vector<std::string>& tokens, const Vocab& vocab,
                             const EncoderParams& params, std::string section_name) {
    const std::size_t d = params.projection.weight.rows;
    Tensor1 bag(d, 0.0);
    if (!tokens.empty()) {
        const std::vector<int> ids = token_ids(tokens, vocab);
        for (int id : ids) {
            for (std::size_t c = 0; c < d; ++c) {
                bag[c] += params.embedding.weight.at(static_cast<std::size_t>(id), c);
            }
        }
        const double inv = 1.0 / static_cast<double>(ids.size());
        for (double& x : bag.v) x *= inv;
    }
    SectionVector out;
    out.values = relu(dense_forward(params.projection, bag));
    out.section_name = std::move(section_name);
    return out;
}

Tape::NodeId encode_section_on_tape(Tape& tape, const std::vector<int>& ids,
                                    EncoderParams& params) {
    const Tape::NodeId bag = tape.embedding_mean(params.embedding, ids);
    return tape.relu(tape.dense(params.projection, bag));
}

}  // namespace lsw
