#include "lsw/model.hpp"

#include <stdexcept>

#include "lsw/rng.hpp"

namespace lsw {

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::kLsw: return "lsw";
        case ModelKind::kBaseline1: return "baseline1";
        case ModelKind::kBaseline2: return "baseline2";
        case ModelKind::kBaseline3: return "baseline3";
    }
    return "?";
}

const char* to_string(OutputActivation out) {
    return out == OutputActivation::kSigmoid ? "sigmoid" : "softmax";
}

ModelKind model_kind_from(const std::string& s) {
    if (s == "lsw") return ModelKind::kLsw;
    if (s == "baseline1") return ModelKind::kBaseline1;
    if (s == "baseline2") return ModelKind::kBaseline2;
    if (s == "baseline3") return ModelKind::kBaseline3;
    throw std::invalid_argument("unknown model kind '" + s + "'");
}

OutputActivation output_from(const std::string& s) {
    if (s == "sigmoid") return OutputActivation::kSigmoid;
    if (s == "softmax") return OutputActivation::kSoftmax;
    throw std::invalid_argument("unknown output activation '" + s + "'");
}

void ModelConfig::validate() const {
    if (d < 1 || p < 1 || m < 1) {
        throw std::invalid_argument("model config: d, p and m must be positive");
    }
    if (section_names.empty()) {
        throw std::invalid_argument("model config: at least one section required");
    }
}

LswParams LswParams::init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const auto d = static_cast<std::size_t>(cfg.d);
    const auto p = static_cast<std::size_t>(cfg.p);
    const auto m = static_cast<std::size_t>(cfg.m);
    LswParams out;
    out.weight_hidden = ParamGroup("weight_head.hidden", p, d);
    out.weight_score = ParamGroup("weight_head.score", 1, p);
    out.classifier_hidden =
        ParamGroup("classifier.hidden", p, static_cast<std::size_t>(cfg.classifier_input_dim()));
    out.classifier_out = ParamGroup("classifier.out", m, p);
    for (ParamGroup* g : out.groups()) {
        glorot_init(*g, mix64(seed ^ fnv1a64(g->name)));
    }
    return out;
}

std::vector<ParamGroup*> LswParams::groups() {
    return {&weight_hidden, &weight_score, &classifier_hidden, &classifier_out};
}

std::vector<const ParamGroup*> LswParams::groups() const {
    return {&weight_hidden, &weight_score, &classifier_hidden, &classifier_out};
}

std::vector<ParamGroup*> trainable_groups(EncoderParams& enc, LswParams& params, ModelKind kind) {
    std::vector<ParamGroup*> out{&enc.embedding, &enc.projection};
    if (kind == ModelKind::kLsw) {
        out.push_back(&params.weight_hidden);
        out.push_back(&params.weight_score);
    }
    out.push_back(&params.classifier_hidden);
    out.push_back(&params.classifier_out);
    return out;
}

Tensor1 section_weights(const std::vector<SectionVector>& cls, const LswParams& params,
                        bool head_relu) {
    if (cls.empty()) {
        throw std::invalid_argument("section_weights: no sections");
    }
    Tensor1 scores(cls.size());
    for (std::size_t k = 0; k < cls.size(); ++k) {
        const Tensor1 hidden = relu(dense_forward(params.weight_hidden, cls[k].values));
        double s = dense_forward(params.weight_score, hidden)[0];
        if (head_relu && s < 0.0) s = 0.0;
        scores[k] = s;
    }
    return softmax(scores);
}

Tensor1 fuse(const std::vector<SectionVector>& cls, const Tensor1& weights) {
    if (cls.size() != weights.len()) {
        throw std::invalid_argument("fuse: " + std::to_string(cls.size()) + " sections vs " +
                                    std::to_string(weights.len()) + " weights");
    }
    if (cls.empty()) {
        throw std::invalid_argument("fuse: no sections");
    }
    const std::size_t d = cls[0].values.len();
    Tensor1 out(d, 0.0);
    for (std::size_t k = 0; k < cls.size(); ++k) {
        if (cls[k].values.len() != d) {
            throw std::invalid_argument("fuse: section " + std::to_string(k) + " has length " +
                                        std::to_string(cls[k].values.len()) + ", expected " +
                                        std::to_string(d));
        }
        for (std::size_t i = 0; i < d; ++i) out[i] += weights[k] * cls[k].values[i];
    }
    return out;
}

Tensor1 classify(const Tensor1& y, const LswParams& params, OutputActivation output) {
    const Tensor1 hidden = relu(dense_forward(params.classifier_hidden, y));
    const Tensor1 logits = dense_forward(params.classifier_out, hidden);
    return output == OutputActivation::kSigmoid ? sigmoid(logits) : softmax(logits);
}

TokenizedDoc tokenize_document(const DocumentRecord& doc, const Vocab& vocab,
                               const ModelConfig& cfg, const LabelIndex& labels) {
    TokenizedDoc out;
    out.id = doc.id;
    out.section_ids.reserve(cfg.section_names.size());
    for (const std::string& name : cfg.section_names) {
        const std::string* text = doc.section_text(name);
        if (text == nullptr) {
            throw std::invalid_argument("document '" + doc.id + "' is missing declared section '" +
                                        name + "'");
        }
        out.section_ids.push_back(token_ids(tokenize(*text), vocab));
    }
    out.targets = Tensor1(static_cast<std::size_t>(cfg.m), 0.0);
    for (const std::string& l : doc.labels) {
        const int idx = labels.lookup(l);
        if (idx >= 0) out.targets[static_cast<std::size_t>(idx)] = 1.0;
    }
    return out;
}

namespace {

// Sections participating in weighting/fusion. With masking on, empty sections
// are excluded unless every section is empty (then all stay in, keeping the
// softmax well defined).
std::vector<std::size_t> active_sections(const TokenizedDoc& doc, const ModelConfig& cfg) {
    std::vector<std::size_t> active;
    if (cfg.mask_empty_sections) {
        for (std::size_t k = 0; k < doc.section_ids.size(); ++k) {
            if (!doc.section_ids[k].empty()) active.push_back(k);
        }
    }
    if (active.empty()) {
        active.resize(doc.section_ids.size());
        for (std::size_t k = 0; k < active.size(); ++k) active[k] = k;
    }
    return active;
}

}  // namespace

ForwardTrace forward(const TokenizedDoc& doc, EncoderParams& enc, LswParams& params,
                     const ModelConfig& cfg) {
    cfg.validate();
    const std::size_t K = cfg.section_names.size();
    if (doc.section_ids.size() != K) {
        throw std::invalid_argument("forward: document '" + doc.id + "' has " +
                                    std::to_string(doc.section_ids.size()) + " sections, model " +
                                    std::to_string(K));
    }

    ForwardTrace trace;
    Tape& t = trace.tape;

    std::vector<Tape::NodeId> cls(K);
    for (std::size_t k = 0; k < K; ++k) {
        cls[k] = encode_section_on_tape(t, doc.section_ids[k], enc);
        trace.section_vectors.push_back(t.value(cls[k]));
    }

    const std::vector<std::size_t> active = active_sections(doc, cfg);
    std::vector<Tape::NodeId> active_cls;
    active_cls.reserve(active.size());
    for (std::size_t k : active) active_cls.push_back(cls[k]);

    Tape::NodeId pooled = 0;
    if (cfg.kind == ModelKind::kLsw) {
        std::vector<Tape::NodeId> scores;
        scores.reserve(active.size());
        for (Tape::NodeId c : active_cls) {
            Tape::NodeId s = t.dense(params.weight_score,
                                     t.relu(t.dense(params.weight_hidden, c)));
            if (cfg.weight_head_relu) s = t.relu(s);
            scores.push_back(s);
        }
        const Tape::NodeId weights = t.softmax(t.concat(scores));
        pooled = t.weighted_sum(active_cls, weights);

        trace.weight_logits = Tensor1(K, 0.0);
        trace.weights = Tensor1(K, 0.0);
        const Tensor1& w = t.value(weights);
        for (std::size_t j = 0; j < active.size(); ++j) {
            trace.weight_logits[active[j]] = t.value(scores[j])[0];
            trace.weights[active[j]] = w[j];
        }
        trace.has_weights = true;
        trace.fused = t.value(pooled);
    } else if (cfg.kind == ModelKind::kBaseline2) {
        pooled = t.concat(cls);  // fixed-width concatenation over all K slots
    } else {
        // kBaseline1 / kBaseline3: unweighted mean over active sections
        const double inv = 1.0 / static_cast<double>(active.size());
        pooled = t.weighted_sum(active_cls, t.leaf(Tensor1(active.size(), inv)));
        trace.fused = t.value(pooled);
    }

    const Tape::NodeId hidden = t.relu(t.dense(params.classifier_hidden, pooled));
    trace.logits_node = t.dense(params.classifier_out, hidden);
    trace.probs_node = cfg.output == OutputActivation::kSigmoid ? t.sigmoid(trace.logits_node)
                                                                : t.softmax(trace.logits_node);
    trace.probabilities = t.value(trace.probs_node);
    return trace;
}

ForwardTrace forward(const DocumentRecord& doc, const Vocab& vocab, EncoderParams& enc,
                     LswParams& params, const ModelConfig& cfg, const LabelIndex& labels) {
    return forward(tokenize_document(doc, vocab, cfg, labels), enc, params, cfg);
}

Tape::NodeId add_loss(ForwardTrace& trace, const Tensor1& targets, const ModelConfig& cfg) {
    if (cfg.output == OutputActivation::kSigmoid) {
        return trace.tape.bce_with_logits(trace.logits_node, targets);
    }
    return trace.tape.bce_on_probs(trace.probs_node, targets);
}

}  // namespace lsw
