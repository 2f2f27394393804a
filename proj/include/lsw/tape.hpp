#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "lsw/tensor.hpp"

namespace lsw {

// Reverse-mode tape over 1-D value nodes.
//
// Every op appends a node holding the forward value plus a closure that
// scatters the node's adjoint back to its input nodes and into ParamGroup
// gradient buffers. backward() walks nodes in reverse creation order, which
// is a valid topological order because ops can only consume nodes that
// already exist.
//
// Closures capture node indices, never `this`, so a Tape stays valid when
// moved (ForwardTrace returns one by value). ParamGroups referenced by ops
// must outlive the tape; gradient accumulation is skipped for frozen groups.
class Tape {
public:
    using NodeId = std::size_t;

    // Constant input; receives an adjoint but propagates nowhere.
    NodeId leaf(Tensor1 value);

    // Mean of the table rows selected by token_ids; empty ids yield a zero
    // vector of width table.cols. Backward adds adjoint / n to each used row.
    NodeId embedding_mean(ParamGroup& table, std::vector<int> token_ids);

    // weight * x + bias.
    NodeId dense(ParamGroup& layer, NodeId x);

    NodeId relu(NodeId x);
    NodeId softmax(NodeId logits);
    NodeId sigmoid(NodeId x);

    NodeId concat(const std::vector<NodeId>& parts);

    // sum_k weights[k] * vectors[k]; weights is a node of length K.
    NodeId weighted_sum(const std::vector<NodeId>& vectors, NodeId weights);

    // Scalar node: mean over classes of the numerically stable fused BCE
    // between sigmoid(logits) and binary targets.
    NodeId bce_with_logits(NodeId logits, Tensor1 targets);

    // Scalar node: BCE on already-materialized probabilities (softmax output
    // mode); probabilities are clamped to [1e-12, 1 - 1e-12] inside the log.
    NodeId bce_on_probs(NodeId probs, Tensor1 targets);

    // Scalar node: mean of scalar nodes (minibatch loss reduction).
    NodeId mean_of_scalars(const std::vector<NodeId>& scalars);

    const Tensor1& value(NodeId id) const { return nodes_[id].value; }
    double scalar(NodeId id) const;
    const Tensor1& adjoint(NodeId id) const { return nodes_[id].adjoint; }

    // Seeds d(loss)/d(loss) = seed and propagates. Throws if nothing was
    // recorded, the node is not scalar, or backward already ran on this tape.
    void backward(NodeId loss, double seed = 1.0);

    bool backward_run() const { return backward_run_; }
    std::size_t size() const { return nodes_.size(); }

    // Smallest |x| seen at any relu input on this tape. Gradient checks use
    // it to reject configurations sitting on the relu kink.
    double min_abs_relu_input() const { return min_abs_relu_input_; }

private:
    struct Node {
        Tensor1 value;
        Tensor1 adjoint;
        std::function<void(Tape&, NodeId)> back;  // (tape, own id); null for leaves
    };

    NodeId push(Tensor1 value, std::function<void(Tape&, NodeId)> back);
    const Tensor1& in(NodeId id) const { return nodes_[id].value; }
    Tensor1& adj(NodeId id) { return nodes_[id].adjoint; }
    NodeId require(NodeId id) const;

    std::vector<Node> nodes_;
    bool backward_run_ = false;
    double min_abs_relu_input_ = std::numeric_limits<double>::infinity();
};

}  // namespace lsw
