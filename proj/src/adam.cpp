#include "lsw/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace lsw {

AdamState::AdamState(AdamConfig cfg_in, const std::vector<ParamGroup*>& groups)
    : config(cfg_in) {
    slots.reserve(groups.size());
    for (const ParamGroup* g : groups) {
        Slot s;
        s.m_weight = Tensor2(g->weight.rows, g->weight.cols, 0.0);
        s.v_weight = Tensor2(g->weight.rows, g->weight.cols, 0.0);
        s.m_bias = Tensor1(g->bias.len(), 0.0);
        s.v_bias = Tensor1(g->bias.len(), 0.0);
        slots.push_back(std::move(s));
    }
}

namespace {

void update_span(double* w, const double* g, double* m, double* v, std::size_t n,
                 const AdamConfig& c, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        w[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
}

}  // namespace

void AdamState::step(const std::vector<ParamGroup*>& groups) {
    if (groups.size() != slots.size()) {
        throw std::logic_error("adam_step: group list does not match optimizer state (" +
                               std::to_string(groups.size()) + " vs " +
                               std::to_string(slots.size()) + ")");
    }
    for (const ParamGroup* g : groups) {
        if (!g->frozen && !g->has_grad) {
            throw std::logic_error("adam_step: missing gradients for group '" + g->name + "'");
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < groups.size(); ++k) {
        ParamGroup& g = *groups[k];
        if (g.frozen) continue;
        Slot& s = slots[k];
        update_span(g.weight.v.data(), g.grad_weight.v.data(), s.m_weight.v.data(),
                    s.v_weight.v.data(), g.weight.v.size(), config, bc1, bc2);
        update_span(g.bias.v.data(), g.grad_bias.v.data(), s.m_bias.v.data(),
                    s.v_bias.v.data(), g.bias.v.size(), config, bc1, bc2);
        g.has_grad = false;
    }
}

}  // namespace lsw
