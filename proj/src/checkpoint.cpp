#include "lsw/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "lsw/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts need byte swaps");

namespace lsw {

namespace {

constexpr char kMagic[8] = {'L', 'S', 'W', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint8_t kKindModel = 0;
constexpr std::uint8_t kKindTrainState = 1;

using json = nlohmann::json;

void put_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void put(std::ostream& os, T v) {
    put_bytes(os, &v, sizeof(T));
}

void put_string(std::ostream& os, const std::string& s) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    put_bytes(os, s.data(), s.size());
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
    put_bytes(os, v.data(), v.size() * sizeof(double));
}

void get_bytes(std::istream& is, void* p, std::size_t n, const char* what) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
        throw CompatError(std::string("checkpoint: truncated while reading ") + what);
    }
}

template <typename T>
T get(std::istream& is, const char* what) {
    T v{};
    get_bytes(is, &v, sizeof(T), what);
    return v;
}

std::string get_string(std::istream& is, const char* what) {
    const auto n = get<std::uint32_t>(is, what);
    if (n > (1u << 24)) {
        throw CompatError(std::string("checkpoint: implausible string length for ") + what);
    }
    std::string s(n, '\0');
    get_bytes(is, s.data(), n, what);
    return s;
}

void get_doubles(std::istream& is, std::vector<double>& v, const char* what) {
    get_bytes(is, v.data(), v.size() * sizeof(double), what);
}

void put_param(std::ostream& os, const ParamGroup& g) {
    put_string(os, g.name);
    put<std::uint8_t>(os, g.bias.len() > 0 ? 2 : 1);
    put<std::uint64_t>(os, g.weight.rows);
    put<std::uint64_t>(os, g.weight.cols);
    put_doubles(os, g.weight.v);
    if (g.bias.len() > 0) {
        put<std::uint64_t>(os, g.bias.len());
        put_doubles(os, g.bias.v);
    }
}

void get_param(std::istream& is, ParamGroup& g) {
    const std::string name = get_string(is, "param name");
    if (name != g.name) {
        throw CompatError("checkpoint: expected parameter block '" + g.name + "', found '" +
                          name + "'");
    }
    const auto blocks = get<std::uint8_t>(is, "param block count");
    const auto rows = get<std::uint64_t>(is, "param rows");
    const auto cols = get<std::uint64_t>(is, "param cols");
    if (rows != g.weight.rows || cols != g.weight.cols) {
        throw CompatError("checkpoint: parameter '" + g.name + "' has shape " +
                          std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                          std::to_string(g.weight.rows) + "x" + std::to_string(g.weight.cols));
    }
    get_doubles(is, g.weight.v, g.name.c_str());
    const bool want_bias = g.bias.len() > 0;
    if ((blocks == 2) != want_bias) {
        throw CompatError("checkpoint: parameter '" + g.name + "' bias presence mismatch");
    }
    if (want_bias) {
        const auto blen = get<std::uint64_t>(is, "bias length");
        if (blen != g.bias.len()) {
            throw CompatError("checkpoint: parameter '" + g.name + "' bias length " +
                              std::to_string(blen) + ", expected " +
                              std::to_string(g.bias.len()));
        }
        get_doubles(is, g.bias.v, g.name.c_str());
    }
}

void put_slot(std::ostream& os, const AdamState::Slot& s) {
    put_doubles(os, s.m_weight.v);
    put_doubles(os, s.v_weight.v);
    put_doubles(os, s.m_bias.v);
    put_doubles(os, s.v_bias.v);
}

void get_slot(std::istream& is, AdamState::Slot& s) {
    get_doubles(is, s.m_weight.v, "adam m_weight");
    get_doubles(is, s.v_weight.v, "adam v_weight");
    get_doubles(is, s.m_bias.v, "adam m_bias");
    get_doubles(is, s.v_bias.v, "adam v_bias");
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) {
            throw std::runtime_error("checkpoint: cannot open '" + tmp + "' for writing");
        }
        put_bytes(os, kMagic, sizeof(kMagic));
        put<std::uint8_t>(os, ckpt.has_train_state ? kKindTrainState : kKindModel);

        json cfg;
        cfg["model_kind"] = to_string(ckpt.config.kind);
        cfg["output"] = to_string(ckpt.config.output);
        cfg["d"] = ckpt.config.d;
        cfg["p"] = ckpt.config.p;
        cfg["m"] = ckpt.config.m;
        cfg["K"] = ckpt.config.K();
        cfg["section_names"] = ckpt.config.section_names;
        cfg["weight_head_relu"] = ckpt.config.weight_head_relu;
        cfg["mask_empty_sections"] = ckpt.config.mask_empty_sections;
        cfg["label_names"] = ckpt.label_names;
        cfg["min_count"] = ckpt.min_count;
        cfg["val_fraction"] = ckpt.val_fraction;
        cfg["seed"] = ckpt.train_seed;
        const std::string cfg_str = cfg.dump();
        put<std::uint64_t>(os, cfg_str.size());
        put_bytes(os, cfg_str.data(), cfg_str.size());

        put<std::uint64_t>(os, ckpt.vocab.tokens.size());
        for (const std::string& t : ckpt.vocab.tokens) put_string(os, t);
        put<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.vocab.min_count));

        std::vector<const ParamGroup*> groups{&ckpt.encoder.embedding, &ckpt.encoder.projection};
        if (ckpt.config.kind == ModelKind::kLsw) {
            groups.push_back(&ckpt.model.weight_hidden);
            groups.push_back(&ckpt.model.weight_score);
        }
        groups.push_back(&ckpt.model.classifier_hidden);
        groups.push_back(&ckpt.model.classifier_out);
        put<std::uint32_t>(os, static_cast<std::uint32_t>(groups.size()));
        for (const ParamGroup* g : groups) put_param(os, *g);

        if (ckpt.has_train_state) {
            put<std::int64_t>(os, ckpt.adam.t_);
            put<double>(os, ckpt.adam.config.lr);
            put<double>(os, ckpt.adam.config.beta1);
            put<double>(os, ckpt.adam.config.beta2);
            put<double>(os, ckpt.adam.config.eps);
            if (ckpt.adam.slots.size() != groups.size()) {
                throw std::logic_error("checkpoint: adam slots do not match parameter groups");
            }
            for (const AdamState::Slot& s : ckpt.adam.slots) put_slot(os, s);
            put<std::int32_t>(os, ckpt.epochs_done);
            put<double>(os, ckpt.best_val_micro_f1);
        }
        if (!os) {
            throw std::runtime_error("checkpoint: write failed for '" + tmp + "'");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw std::runtime_error("checkpoint: cannot move '" + tmp + "' to '" + path + "'");
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    }
    char magic[8];
    get_bytes(is, magic, sizeof(magic), "magic");
    for (std::size_t i = 0; i < sizeof(magic); ++i) {
        if (magic[i] != kMagic[i]) {
            throw CompatError("checkpoint: bad magic in '" + path + "'");
        }
    }
    const auto state_kind = get<std::uint8_t>(is, "state kind");
    if (state_kind != kKindModel && state_kind != kKindTrainState) {
        throw CompatError("checkpoint: unknown state kind " + std::to_string(state_kind));
    }

    const auto cfg_len = get<std::uint64_t>(is, "config length");
    if (cfg_len > (1u << 26)) {
        throw CompatError("checkpoint: implausible config length");
    }
    std::string cfg_str(cfg_len, '\0');
    get_bytes(is, cfg_str.data(), cfg_len, "config json");
    json cfg = json::parse(cfg_str, nullptr, false);
    if (cfg.is_discarded()) {
        throw CompatError("checkpoint: config echo is not valid JSON");
    }

    Checkpoint ckpt;
    try {
        ckpt.config.kind = model_kind_from(cfg.at("model_kind").get<std::string>());
        ckpt.config.output = output_from(cfg.at("output").get<std::string>());
        ckpt.config.d = cfg.at("d").get<int>();
        ckpt.config.p = cfg.at("p").get<int>();
        ckpt.config.m = cfg.at("m").get<int>();
        ckpt.config.section_names = cfg.at("section_names").get<std::vector<std::string>>();
        ckpt.config.weight_head_relu = cfg.at("weight_head_relu").get<bool>();
        ckpt.config.mask_empty_sections = cfg.at("mask_empty_sections").get<bool>();
        ckpt.label_names = cfg.at("label_names").get<std::vector<std::string>>();
        ckpt.min_count = cfg.at("min_count").get<int>();
        ckpt.val_fraction = cfg.at("val_fraction").get<double>();
        ckpt.train_seed = cfg.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw CompatError(std::string("checkpoint: config echo missing fields: ") + e.what());
    }
    ckpt.config.validate();

    const auto n_tokens = get<std::uint64_t>(is, "vocab size");
    if (n_tokens < 2 || n_tokens > (1u << 28)) {
        throw CompatError("checkpoint: implausible vocab size");
    }
    ckpt.vocab.tokens.reserve(n_tokens);
    for (std::uint64_t i = 0; i < n_tokens; ++i) {
        std::string t = get_string(is, "vocab token");
        ckpt.vocab.index.emplace(t, static_cast<int>(i));
        ckpt.vocab.tokens.push_back(std::move(t));
    }
    ckpt.vocab.min_count = static_cast<int>(get<std::uint32_t>(is, "vocab min_count"));

    ckpt.encoder = EncoderParams::init(static_cast<int>(n_tokens), ckpt.config.d, 0);
    ckpt.model = LswParams::init(ckpt.config, 0);
    std::vector<ParamGroup*> groups{&ckpt.encoder.embedding, &ckpt.encoder.projection};
    if (ckpt.config.kind == ModelKind::kLsw) {
        groups.push_back(&ckpt.model.weight_hidden);
        groups.push_back(&ckpt.model.weight_score);
    }
    groups.push_back(&ckpt.model.classifier_hidden);
    groups.push_back(&ckpt.model.classifier_out);

    const auto n_groups = get<std::uint32_t>(is, "param group count");
    if (n_groups != groups.size()) {
        throw CompatError("checkpoint: has " + std::to_string(n_groups) +
                          " parameter blocks, expected " + std::to_string(groups.size()));
    }
    for (ParamGroup* g : groups) get_param(is, *g);
    ckpt.encoder.set_frozen(ckpt.config.kind == ModelKind::kBaseline3);

    if (state_kind == kKindTrainState) {
        ckpt.has_train_state = true;
        ckpt.adam = AdamState(AdamConfig{}, groups);
        ckpt.adam.t_ = get<std::int64_t>(is, "adam step");
        ckpt.adam.config.lr = get<double>(is, "adam lr");
        ckpt.adam.config.beta1 = get<double>(is, "adam beta1");
        ckpt.adam.config.beta2 = get<double>(is, "adam beta2");
        ckpt.adam.config.eps = get<double>(is, "adam eps");
        for (AdamState::Slot& s : ckpt.adam.slots) get_slot(is, s);
        ckpt.epochs_done = get<std::int32_t>(is, "epoch counter");
        ckpt.best_val_micro_f1 = get<double>(is, "best validation micro-F1");
    }
    return ckpt;
}

}  // namespace lsw
