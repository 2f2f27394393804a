#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsw/data.hpp"
#include "lsw/encoder.hpp"
#include "lsw/tape.hpp"
#include "lsw/tensor.hpp"

namespace lsw {

enum class ModelKind { kLsw, kBaseline1, kBaseline2, kBaseline3 };
enum class OutputActivation { kSigmoid, kSoftmax };

const char* to_string(ModelKind kind);
const char* to_string(OutputActivation out);
ModelKind model_kind_from(const std::string& s);
OutputActivation output_from(const std::string& s);

// Hidden width used with full-scale encoders; desk default is kDefaultHiddenDim.
inline constexpr int kFullScaleHiddenDim = 256;
inline constexpr int kDefaultHiddenDim = 32;

struct ModelConfig {
    int d = kDefaultSectionDim;
    int p = kDefaultHiddenDim;
    int m = 0;  // number of classes
    std::vector<std::string> section_names;
    ModelKind kind = ModelKind::kLsw;
    OutputActivation output = OutputActivation::kSigmoid;
    bool weight_head_relu = true;       // relu on the per-section score before softmax
    bool mask_empty_sections = false;   // drop empty sections from the softmax/fusion

    int K() const { return static_cast<int>(section_names.size()); }
    // Baseline kBaseline2 classifies the concatenation of all K section vectors.
    int classifier_input_dim() const { return kind == ModelKind::kBaseline2 ? K() * d : d; }
    void validate() const;
};

// Trainable groups of the section-weight head and the two-layer classifier.
// The weight head is allocated for every kind (so an identically seeded
// baseline shares the classifier initialization with its LSW counterpart)
// but only the LSW forward touches it.
struct LswParams {
    ParamGroup weight_hidden;     // p x d
    ParamGroup weight_score;      // 1 x p
    ParamGroup classifier_hidden; // p x d (p x K*d for kBaseline2)
    ParamGroup classifier_out;    // m x p

    static LswParams init(const ModelConfig& cfg, std::uint64_t seed);
    std::vector<ParamGroup*> groups();
    std::vector<const ParamGroup*> groups() const;
};

// Trainable groups of (encoder, model) in checkpoint order for the given kind.
std::vector<ParamGroup*> trainable_groups(EncoderParams& enc, LswParams& params, ModelKind kind);

struct ForwardTrace {
    Tape tape;
    std::vector<Tensor1> section_vectors;  // encoded CLS_k values
    Tensor1 weight_logits;                 // per-section scores fed to the softmax (LSW only)
    Tensor1 weights;                       // w_k, length K (LSW only)
    Tensor1 fused;                         // weighted sum (not built for kBaseline2)
    Tensor1 probabilities;
    Tape::NodeId logits_node = 0;          // classifier output, pre-activation
    Tape::NodeId probs_node = 0;
    bool has_weights = false;
};

// ---- value-only ops ----

// softmax over k of relu(score(relu(hidden(CLS_k)))); positive, sums to 1.
Tensor1 section_weights(const std::vector<SectionVector>& cls, const LswParams& params,
                        bool head_relu = true);

// y = sum_k weights[k] * cls[k].
Tensor1 fuse(const std::vector<SectionVector>& cls, const Tensor1& weights);

// dense -> relu -> dense -> sigmoid|softmax.
Tensor1 classify(const Tensor1& y, const LswParams& params, OutputActivation output);

// ---- full forwards (tape-recorded; cfg.kind selects the path) ----

struct TokenizedDoc {
    std::string id;
    std::vector<std::vector<int>> section_ids;  // per declared section
    Tensor1 targets;                            // length m, binary
};

TokenizedDoc tokenize_document(const DocumentRecord& doc, const Vocab& vocab,
                               const ModelConfig& cfg, const LabelIndex& labels);

ForwardTrace forward(const TokenizedDoc& doc, EncoderParams& enc, LswParams& params,
                     const ModelConfig& cfg);

// Convenience: tokenizes and runs forward for one raw record.
ForwardTrace forward(const DocumentRecord& doc, const Vocab& vocab, EncoderParams& enc,
                     LswParams& params, const ModelConfig& cfg, const LabelIndex& labels);

// Appends the configured loss node (fused sigmoid-BCE, or BCE on softmax
// probabilities) for this trace; returns the node for backward().
Tape::NodeId add_loss(ForwardTrace& trace, const Tensor1& targets, const ModelConfig& cfg);

}  // namespace lsw
