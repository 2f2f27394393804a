#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace lsw {

// Dense 1-D / 2-D double tensors. Shapes are fixed at construction; all ops
// validate conformance and throw std::invalid_argument naming both shapes.
struct Tensor1 {
    std::vector<double> v;

    Tensor1() = default;
    explicit Tensor1(std::size_t n, double fill = 0.0) : v(n, fill) {}
    Tensor1(std::initializer_list<double> xs) : v(xs) {}

    std::size_t len() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    double sum() const;
    double l2() const;
    bool all_finite() const;
};

struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;  // row-major

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
    std::size_t size() const { return v.size(); }
    bool all_finite() const;
};

// One named trainable (weight, bias) pair with matching gradient buffers.
// Bias of length 0 is allowed: embedding tables are weight-only groups.
// While `frozen` is set an optimizer step leaves the group bit-identical and
// the tape skips gradient accumulation for it.
struct ParamGroup {
    std::string name;
    Tensor2 weight;
    Tensor1 bias;
    Tensor2 grad_weight;
    Tensor1 grad_bias;
    bool frozen = false;
    bool has_grad = false;  // set by Tape::backward, consumed by adam_step

    ParamGroup() = default;
    ParamGroup(std::string group_name, std::size_t out_dim, std::size_t in_dim,
               bool with_bias = true);

    void zero_grad();
    std::size_t param_count() const { return weight.size() + bias.len(); }
    double weight_l2() const;
    double grad_max_abs() const;
};

// FNV-1a over the raw f64 bytes of weights and biases, in list order.
// Bit-exact: used for freeze contracts and run-determinism checks.
std::uint64_t params_checksum(const std::vector<const ParamGroup*>& groups);

// ---- value-only numeric kernels (the Tape mirrors these with gradients) ----

// max(0, x) elementwise.
Tensor1 relu(const Tensor1& x);

// Softmax with max-subtraction; output entries positive and summing to 1.
// Throws on empty input.
Tensor1 softmax(const Tensor1& logits);

Tensor1 sigmoid(const Tensor1& x);

// weight * x + bias. Throws on shape mismatch naming both shapes.
Tensor1 dense_forward(const ParamGroup& layer, const Tensor1& x);

// Mean over classes of binary cross-entropy between sigmoid(logits) and
// targets, computed in the fused log1p(exp(-|z|)) form so extreme logits do
// not produce log(0).
double sigmoid_bce(const Tensor1& logits, const Tensor1& targets);

// ---- initialization ----

// Scaled uniform in [-b, b], b = sqrt(6 / (fan_in + fan_out)); bias zeroed.
void glorot_init(ParamGroup& g, std::uint64_t seed);

void uniform_init(Tensor2& t, double lo, double hi, std::uint64_t seed);

}  // namespace lsw
