#include "lsw/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace lsw {

namespace {
constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
    return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}
}  // namespace

Tape::NodeId Tape::push(Tensor1 value, std::function<void(Tape&, NodeId)> back) {
    const std::size_t n = value.len();
    nodes_.push_back(Node{std::move(value), Tensor1(n, 0.0), std::move(back)});
    return nodes_.size() - 1;
}

Tape::NodeId Tape::require(NodeId id) const {
    if (id >= nodes_.size()) {
        throw std::invalid_argument("tape: node id " + std::to_string(id) + " out of range");
    }
    return id;
}

double Tape::scalar(NodeId id) const {
    require(id);
    if (nodes_[id].value.len() != 1) {
        throw std::invalid_argument("tape: node is not scalar");
    }
    return nodes_[id].value[0];
}

Tape::NodeId Tape::leaf(Tensor1 value) { return push(std::move(value), nullptr); }

Tape::NodeId Tape::embedding_mean(ParamGroup& table, std::vector<int> token_ids) {
    const std::size_t d = table.weight.cols;
    Tensor1 out(d, 0.0);
    for (int id : token_ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= table.weight.rows) {
            throw std::invalid_argument("embedding_mean[" + table.name + "]: token id " +
                                        std::to_string(id) + " outside table of " +
                                        std::to_string(table.weight.rows) + " rows");
        }
        const auto row = static_cast<std::size_t>(id);
        for (std::size_t c = 0; c < d; ++c) out[c] += table.weight.at(row, c);
    }
    if (!token_ids.empty()) {
        const double inv = 1.0 / static_cast<double>(token_ids.size());
        for (double& x : out.v) x *= inv;
    }
    ParamGroup* tbl = &table;
    return push(std::move(out), [tbl, ids = std::move(token_ids)](Tape& t, NodeId self) {
        if (tbl->frozen || ids.empty()) return;
        const Tensor1& a = t.adj(self);
        const double inv = 1.0 / static_cast<double>(ids.size());
        for (int id : ids) {
            const auto row = static_cast<std::size_t>(id);
            for (std::size_t c = 0; c < tbl->grad_weight.cols; ++c) {
                tbl->grad_weight.at(row, c) += a[c] * inv;
            }
        }
        tbl->has_grad = true;
    });
}

Tape::NodeId Tape::dense(ParamGroup& layer, NodeId x) {
    require(x);
    Tensor1 out = dense_forward(layer, in(x));
    ParamGroup* lay = &layer;
    return push(std::move(out), [lay, x](Tape& t, NodeId self) {
        const Tensor1& a = t.adj(self);
        const Tensor1& xin = t.in(x);
        if (!lay->frozen) {
            for (std::size_t r = 0; r < lay->weight.rows; ++r) {
                for (std::size_t c = 0; c < lay->weight.cols; ++c) {
                    lay->grad_weight.at(r, c) += a[r] * xin[c];
                }
                if (lay->grad_bias.len() > 0) lay->grad_bias[r] += a[r];
            }
            lay->has_grad = true;
        }
        Tensor1& ax = t.adj(x);
        for (std::size_t c = 0; c < lay->weight.cols; ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < lay->weight.rows; ++r) {
                acc += lay->weight.at(r, c) * a[r];
            }
            ax[c] += acc;
        }
    });
}

Tape::NodeId Tape::relu(NodeId x) {
    require(x);
    const Tensor1& xin = in(x);
    for (double v : xin.v) {
        min_abs_relu_input_ = std::min(min_abs_relu_input_, std::fabs(v));
    }
    return push(lsw::relu(xin), [x](Tape& t, NodeId self) {
        const Tensor1& a = t.adj(self);
        const Tensor1& xin2 = t.in(x);
        Tensor1& ax = t.adj(x);
        for (std::size_t i = 0; i < a.len(); ++i) {
            if (xin2[i] > 0.0) ax[i] += a[i];
        }
    });
}

Tape::NodeId Tape::softmax(NodeId logits) {
    require(logits);
    return push(lsw::softmax(in(logits)), [logits](Tape& t, NodeId self) {
        const Tensor1& s = t.in(self);
        const Tensor1& a = t.adj(self);
        double dot = 0.0;
        for (std::size_t i = 0; i < s.len(); ++i) dot += a[i] * s[i];
        Tensor1& ax = t.adj(logits);
        for (std::size_t i = 0; i < s.len(); ++i) {
            ax[i] += s[i] * (a[i] - dot);
        }
    });
}

Tape::NodeId Tape::sigmoid(NodeId x) {
    require(x);
    return push(lsw::sigmoid(in(x)), [x](Tape& t, NodeId self) {
        const Tensor1& s = t.in(self);
        const Tensor1& a = t.adj(self);
        Tensor1& ax = t.adj(x);
        for (std::size_t i = 0; i < s.len(); ++i) {
            ax[i] += a[i] * s[i] * (1.0 - s[i]);
        }
    });
}

Tape::NodeId Tape::concat(const std::vector<NodeId>& parts) {
    if (parts.empty()) {
        throw std::invalid_argument("concat: no parts");
    }
    std::size_t total = 0;
    for (NodeId p : parts) total += in(require(p)).len();
    Tensor1 out(total);
    std::size_t off = 0;
    for (NodeId p : parts) {
        const Tensor1& v = in(p);
        for (std::size_t i = 0; i < v.len(); ++i) out[off + i] = v[i];
        off += v.len();
    }
    return push(std::move(out), [parts](Tape& t, NodeId self) {
        const Tensor1& a = t.adj(self);
        std::size_t off2 = 0;
        for (NodeId p : parts) {
            Tensor1& ap = t.adj(p);
            for (std::size_t i = 0; i < ap.len(); ++i) ap[i] += a[off2 + i];
            off2 += ap.len();
        }
    });
}

Tape::NodeId Tape::weighted_sum(const std::vector<NodeId>& vectors, NodeId weights) {
    require(weights);
    const Tensor1& w = in(weights);
    if (w.len() != vectors.size()) {
        throw std::invalid_argument("weighted_sum: " + std::to_string(vectors.size()) +
                                    " vectors vs " + std::to_string(w.len()) + " weights");
    }
    if (vectors.empty()) {
        throw std::invalid_argument("weighted_sum: no vectors");
    }
    const std::size_t d = in(require(vectors[0])).len();
    Tensor1 out(d, 0.0);
    for (std::size_t k = 0; k < vectors.size(); ++k) {
        const Tensor1& v = in(require(vectors[k]));
        if (v.len() != d) {
            throw std::invalid_argument("weighted_sum: vector " + std::to_string(k) +
                                        " has length " + std::to_string(v.len()) +
                                        ", expected " + std::to_string(d));
        }
        for (std::size_t i = 0; i < d; ++i) out[i] += w[k] * v[i];
    }
    return push(std::move(out), [vectors, weights](Tape& t, NodeId self) {
        const Tensor1& a = t.adj(self);
        const Tensor1& w2 = t.in(weights);
        Tensor1& aw = t.adj(weights);
        for (std::size_t k = 0; k < vectors.size(); ++k) {
            const Tensor1& v = t.in(vectors[k]);
            Tensor1& av = t.adj(vectors[k]);
            double dot = 0.0;
            for (std::size_t i = 0; i < a.len(); ++i) {
                av[i] += w2[k] * a[i];
                dot += v[i] * a[i];
            }
            aw[k] += dot;
        }
    });
}

Tape::NodeId Tape::bce_with_logits(NodeId logits, Tensor1 targets) {
    require(logits);
    const double loss = sigmoid_bce(in(logits), targets);
    return push(Tensor1{loss}, [logits, tg = std::move(targets)](Tape& t, NodeId self) {
        const double a = t.adj(self)[0];
        const Tensor1& z = t.in(logits);
        const Tensor1 s = lsw::sigmoid(z);
        Tensor1& az = t.adj(logits);
        const double inv = 1.0 / static_cast<double>(z.len());
        for (std::size_t i = 0; i < z.len(); ++i) {
            az[i] += a * (s[i] - tg[i]) * inv;
        }
    });
}

Tape::NodeId Tape::bce_on_probs(NodeId probs, Tensor1 targets) {
    require(probs);
    const Tensor1& p = in(probs);
    if (p.len() != targets.len()) {
        throw std::invalid_argument("bce_on_probs: probs (" + std::to_string(p.len()) +
                                    ") vs targets (" + std::to_string(targets.len()) + ")");
    }
    if (p.len() == 0) {
        throw std::invalid_argument("bce_on_probs: empty input");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < p.len(); ++i) {
        const double pc = clamp_prob(p[i]);
        total += -(targets[i] * std::log(pc) + (1.0 - targets[i]) * std::log(1.0 - pc));
    }
    total /= static_cast<double>(p.len());
    return push(Tensor1{total}, [probs, tg = std::move(targets)](Tape& t, NodeId self) {
        const double a = t.adj(self)[0];
        const Tensor1& p2 = t.in(probs);
        Tensor1& ap = t.adj(probs);
        const double inv = 1.0 / static_cast<double>(p2.len());
        for (std::size_t i = 0; i < p2.len(); ++i) {
            const double pc = clamp_prob(p2[i]);
            ap[i] += a * inv * (-tg[i] / pc + (1.0 - tg[i]) / (1.0 - pc));
        }
    });
}

Tape::NodeId Tape::mean_of_scalars(const std::vector<NodeId>& scalars) {
    if (scalars.empty()) {
        throw std::invalid_argument("mean_of_scalars: no inputs");
    }
    double total = 0.0;
    for (NodeId s : scalars) total += scalar(s);
    total /= static_cast<double>(scalars.size());
    return push(Tensor1{total}, [scalars](Tape& t, NodeId self) {
        const double a = t.adj(self)[0] / static_cast<double>(scalars.size());
        for (NodeId s : scalars) t.adj(s)[0] += a;
    });
}

void Tape::backward(NodeId loss, double seed) {
    if (nodes_.empty()) {
        throw std::logic_error("tape: backward called before any forward op was recorded");
    }
    require(loss);
    if (nodes_[loss].value.len() != 1) {
        throw std::invalid_argument("tape: backward root must be scalar");
    }
    if (backward_run_) {
        throw std::logic_error("tape: backward already ran on this tape");
    }
    backward_run_ = true;
    nodes_[loss].adjoint[0] = seed;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back(*this, i);
    }
}

}  // namespace lsw
