#pragma once

#include <functional>
#include <vector>

#include "kernclass/tensor.hpp"

namespace kernclass {

using NodeId = int;

// Reverse-mode differentiation tape. Nodes are recorded in execution order;
// backward() walks them once in reverse. Gradients are tracked only for
// nodes derived from leaf() inputs, so large constant inputs never allocate
// gradient buffers. A tape is single-threaded and single-use: build a graph,
// call backward() at most once, read gradients, discard.
//
// No operation carries a bias term, and relu's subgradient at exactly 0 is 0,
// so all-zero input regions produce exactly-zero features and gradients.
class Tape {
public:
    // Untracked input; no gradient is ever computed for it.
    NodeId constant(Tensor value);
    // Tracked input (model parameter); grad(id) is valid after backward().
    NodeId leaf(Tensor value);

    const Tensor& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Tensor& grad(NodeId id) const;
    bool tracked(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].tracked; }
    int node_count() const { return static_cast<int>(nodes_.size()); }

    // x [a] or [r, a], w [a, b] -> [b] or [r, b]. Plain matrix product, no bias.
    NodeId linear(NodeId x, NodeId w);
    // x [T, c], w [n*c, k] -> [T, k]; output row t sees rows [t, t+n) of x,
    // zero-padded past T.
    NodeId conv_time(NodeId x, NodeId w, int n);
    // x [T, P, c], w [n*c, k] -> [T, P, k]; the same filter bank slides along
    // every voice independently.
    NodeId conv_time_voices(NodeId x, NodeId w, int n);
    // f [T, P, N], w [j*P, k] -> [T, N, k]; output (t, u) sees the slice
    // f[t, :, u:u+j] flattened voice-major, zero-padded above N.
    NodeId conv_pitch(NodeId f, NodeId w, int j);
    NodeId relu(NodeId x);
    // [T, P, k] -> [k], dividing by T*P regardless of content.
    NodeId mean_pool_all(NodeId x);
    // [T, k] -> [k], dividing by T.
    NodeId mean_pool_rows(NodeId x);
    // [T, P, c] -> [T, c], dividing by P.
    NodeId mean_over_axis1(NodeId x);
    NodeId add(NodeId a, NodeId b);
    NodeId scale(NodeId x, double c);
    // -log softmax(logits)[label], max-subtracted for stability -> [1].
    NodeId softmax_cross_entropy(NodeId logits, int label);

    // Seeds d(root)=1 and accumulates gradients into every tracked node.
    // `root` must hold exactly one element.
    void backward(NodeId root);

private:
    struct Node {
        Tensor value;
        Tensor grad;  // allocated only when tracked
        bool tracked = false;
        std::function<void(Tape&)> back;  // null for inputs
    };

    NodeId push(Tensor value, bool tracked, std::function<void(Tape&)> back);
    void set_back(NodeId id, std::function<void(Tape&)> back);
    Tensor& grad_mut(NodeId id) { return nodes_[static_cast<std::size_t>(id)].grad; }

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

}  // namespace kernclass
