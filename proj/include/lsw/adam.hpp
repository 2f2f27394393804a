#pragma once

#include <cstdint>
#include <vector>

#include "lsw/tensor.hpp"

namespace lsw {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a fixed list of ParamGroups. Moment slots are
// allocated at construction and stay parallel to that list; checkpointing
// serializes them in the same order.
class AdamState {
public:
    struct Slot {
        Tensor2 m_weight, v_weight;
        Tensor1 m_bias, v_bias;
    };

    AdamState() = default;
    AdamState(AdamConfig config, const std::vector<ParamGroup*>& groups);

    // One update step. Frozen groups are skipped entirely (parameters and
    // moments bit-identical). Throws NumericError-free std::logic_error if an
    // unfrozen group has no gradients populated for this step.
    void step(const std::vector<ParamGroup*>& groups);

    std::int64_t step_count() const { return t_; }

    AdamConfig config;
    std::vector<Slot> slots;

    // serialized/restored by checkpoint code
    std::int64_t t_ = 0;
};

inline void adam_step(const std::vector<ParamGroup*>& groups, AdamState& state) {
    state.step(groups);
}

}  // namespace lsw
