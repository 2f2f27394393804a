#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsw/adam.hpp"
#include "lsw/checkpoint.hpp"
#include "lsw/data.hpp"
#include "lsw/encoder.hpp"
#include "lsw/metrics.hpp"
#include "lsw/model.hpp"

namespace lsw {

// The two studied corpus styles differ in their declared sections
// ([abstract, title, keywords] vs [abstract, title]); the tuned epoch counts
// differ per model kind for the three-section corpus.
enum class CorpusStyle { kThreeSection, kTwoSection };

int tuned_epochs(ModelKind kind, CorpusStyle style);

struct TrainConfig {
    ModelKind kind = ModelKind::kLsw;
    double lr = 1e-5;
    int epochs = 10;
    int batch = 32;
    std::uint64_t seed = 1;
    int d = kDefaultSectionDim;
    int p = kDefaultHiddenDim;
    OutputActivation output = OutputActivation::kSigmoid;
    bool mask_empty_sections = false;
    bool weight_head_relu = true;
    std::string checkpoint_path;  // empty: keep everything in memory

    int min_count = 2;
    double val_fraction = 0.10;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double threshold = 0.5;
    bool quiet = true;  // per-epoch stdout lines off by default (CLI turns them on)

    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
    MetricsReport val_metrics;
    double seconds = 0;
    std::uint64_t encoder_checksum = 0;
};

// "epoch,train_loss,val_loss,<6 metric columns>,seconds"
void write_epoch_log_csv(const std::string& path, const std::vector<EpochLog>& logs);

struct TrainResult {
    ModelConfig model_config;
    Vocab vocab;
    EncoderParams encoder;
    LswParams params;
    LabelIndex labels;
    AdamState adam;
    std::vector<EpochLog> logs;
    std::uint64_t initial_encoder_checksum = 0;  // before any step of this run
    int best_epoch = -1;                 // epoch index with the best validation micro-F1
    double best_val_micro_f1 = -1.0;
    Checkpoint best_checkpoint;          // parameters at the best epoch
    int epochs_done = 0;
    std::uint64_t seed = 0;
};

// Splits the corpus (deterministic by seed), builds the vocabulary from the
// training split only, then runs seeded minibatch training: BCE accumulated
// over each batch, one Adam step per batch, validation metrics after every
// epoch. Keeps a snapshot of the best-validation-micro-F1 epoch; when
// config.checkpoint_path is set it writes that snapshot there plus a full
// train-state checkpoint at "<path>.last" for resuming. A non-finite batch
// loss aborts with a NumericError naming the offending documents.
TrainResult train(const TrainConfig& config, const std::vector<DocumentRecord>& corpus);

// Continues training from a train-state checkpoint up to config.epochs total
// epochs. The checkpoint's seed, dimensions and model kind are authoritative;
// mismatched d/p/m/K/kind against the corpus or config is a hard error naming
// the field. A run trained 2+2 epochs equals a straight 4-epoch run.
TrainResult resume(const std::string& checkpoint_path, const TrainConfig& config,
                   const std::vector<DocumentRecord>& corpus);

// Evaluates a checkpoint over the given documents: probabilities, loss and
// metrics at the threshold.
struct EvalResult {
    double loss = 0;
    MetricsReport metrics;
    std::vector<Tensor1> probabilities;
    std::vector<std::string> doc_ids;
};

EvalResult evaluate(Checkpoint& ckpt, const std::vector<DocumentRecord>& docs, double threshold);

std::uint64_t encoder_checksum(const EncoderParams& enc);

}  // namespace lsw
