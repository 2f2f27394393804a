#include "lsw/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lsw/rng.hpp"

namespace lsw {

namespace {

std::string shape1(const Tensor1& t) { return "(" + std::to_string(t.len()) + ")"; }

std::string shape2(const Tensor2& t) {
    return "(" + std::to_string(t.rows) + "x" + std::to_string(t.cols) + ")";
}

}  // namespace

double Tensor1::sum() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

double Tensor1::l2() const {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

bool Tensor1::all_finite() const {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool Tensor2::all_finite() const {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

ParamGroup::ParamGroup(std::string group_name, std::size_t out_dim, std::size_t in_dim,
                       bool with_bias)
    : name(std::move(group_name)),
      weight(out_dim, in_dim),
      bias(with_bias ? out_dim : 0),
      grad_weight(out_dim, in_dim),
      grad_bias(with_bias ? out_dim : 0) {}

void ParamGroup::zero_grad() {
    std::fill(grad_weight.v.begin(), grad_weight.v.end(), 0.0);
    std::fill(grad_bias.v.begin(), grad_bias.v.end(), 0.0);
    has_grad = false;
}

double ParamGroup::weight_l2() const {
    double s = 0.0;
    for (double x : weight.v) s += x * x;
    for (double x : bias.v) s += x * x;
    return std::sqrt(s);
}

double ParamGroup::grad_max_abs() const {
    double m = 0.0;
    for (double x : grad_weight.v) m = std::max(m, std::fabs(x));
    for (double x : grad_bias.v) m = std::max(m, std::fabs(x));
    return m;
}

std::uint64_t params_checksum(const std::vector<const ParamGroup*>& groups) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const ParamGroup* g : groups) {
        h = fnv1a64(g->name);
        h = fnv1a64(g->weight.v.data(), g->weight.v.size() * sizeof(double), h);
        h = fnv1a64(g->bias.v.data(), g->bias.v.size() * sizeof(double), h);
    }
    return h;
}

Tensor1 relu(const Tensor1& x) {
    Tensor1 out(x.len());
    for (std::size_t i = 0; i < x.len(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
    return out;
}

Tensor1 softmax(const Tensor1& logits) {
    if (logits.len() == 0) {
        throw std::invalid_argument("softmax: empty input");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (double z : logits.v) mx = std::max(mx, z);
    Tensor1 out(logits.len());
    double denom = 0.0;
    for (std::size_t i = 0; i < logits.len(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        denom += out[i];
    }
    for (double& p : out.v) p /= denom;
    return out;
}

Tensor1 sigmoid(const Tensor1& x) {
    Tensor1 out(x.len());
    for (std::size_t i = 0; i < x.len(); ++i) {
        const double z = x[i];
        out[i] = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                          : std::exp(z) / (1.0 + std::exp(z));
    }
    return out;
}

Tensor1 dense_forward(const ParamGroup& layer, const Tensor1& x) {
    if (x.len() != layer.weight.cols) {
        throw std::invalid_argument("dense_forward[" + layer.name + "]: weight " +
                                    shape2(layer.weight) + " does not accept input " + shape1(x));
    }
    Tensor1 out(layer.weight.rows);
    for (std::size_t r = 0; r < layer.weight.rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < layer.weight.cols; ++c) {
            acc += layer.weight.at(r, c) * x[c];
        }
        out[r] = acc + (layer.bias.len() > 0 ? layer.bias[r] : 0.0);
    }
    return out;
}

double sigmoid_bce(const Tensor1& logits, const Tensor1& targets) {
    if (logits.len() != targets.len()) {
        throw std::invalid_argument("sigmoid_bce: logits " + shape1(logits) + " vs targets " +
                                    shape1(targets));
    }
    if (logits.len() == 0) {
        throw std::invalid_argument("sigmoid_bce: empty input");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < logits.len(); ++i) {
        const double z = logits[i];
        const double t = targets[i];
        total += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::fabs(z)));
    }
    return total / static_cast<double>(logits.len());
}

void glorot_init(ParamGroup& g, std::uint64_t seed) {
    const double fan_in = static_cast<double>(g.weight.cols);
    const double fan_out = static_cast<double>(g.weight.rows);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng(seed);
    for (double& w : g.weight.v) w = rng.uniform(-bound, bound);
    std::fill(g.bias.v.begin(), g.bias.v.end(), 0.0);
}

void uniform_init(Tensor2& t, double lo, double hi, std::uint64_t seed) {
    Rng rng(seed);
    for (double& w : t.v) w = rng.uniform(lo, hi);
}

}  // namespace lsw
