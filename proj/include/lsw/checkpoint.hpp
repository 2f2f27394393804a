#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsw/adam.hpp"
#include "lsw/encoder.hpp"
#include "lsw/model.hpp"

namespace lsw {

// Single-file checkpoint: 8-byte magic + version, a JSON config echo
// (d, p, m, K, section names, output activation, model kind, label names),
// the vocabulary, then ordered named parameter blocks (name, shape, row-major
// f64 little-endian). Train-state checkpoints append Adam moments, the step
// counter and the epoch counter so training can resume exactly.
struct Checkpoint {
    ModelConfig config;
    std::vector<std::string> label_names;
    int min_count = 2;
    double val_fraction = 0.10;

    Vocab vocab;
    EncoderParams encoder;
    LswParams model;

    bool has_train_state = false;
    AdamState adam;
    std::int32_t epochs_done = 0;
    double best_val_micro_f1 = -1.0;
    std::uint64_t train_seed = 0;
};

// Writes to a temp file then renames, so a failed write never leaves a
// truncated checkpoint behind.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Throws CompatError on a bad magic/version or truncated file; nothing is
// mutated on failure (the checkpoint is built locally and returned whole).
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lsw
