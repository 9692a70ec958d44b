#include "kernclass/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace kernclass {

namespace {

double eval_loss(std::vector<Tensor>& params, const GraphBuilder& build) {
    Tape tape;
    std::vector<NodeId> nodes;
    nodes.reserve(params.size());
    for (const Tensor& p : params) nodes.push_back(tape.leaf(p));
    NodeId root = build(tape, nodes);
    return tape.value(root)[0];
}

}  // namespace

double gradient_check(std::vector<Tensor>& params, const GraphBuilder& build,
                      std::mt19937_64& rng, const GradCheckOptions& options) {
    // One reverse pass for the analytic gradients.
    std::vector<Tensor> analytic;
    {
        Tape tape;
        std::vector<NodeId> nodes;
        for (const Tensor& p : params) nodes.push_back(tape.leaf(p));
        NodeId root = build(tape, nodes);
        tape.backward(root);
        for (NodeId n : nodes) analytic.push_back(tape.grad(n));
    }

    double max_rel = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = params[pi];
        const std::size_t size = p.size();
        if (size == 0) continue;
        std::size_t want = static_cast<std::size_t>(
            std::ceil(options.fraction * static_cast<double>(size)));
        want = std::min(size, std::max<std::size_t>(want, static_cast<std::size_t>(options.min_coords)));

        // Sample distinct coordinates without replacement.
        std::vector<std::size_t> coords;
        if (want >= size) {
            coords.resize(size);
            for (std::size_t i = 0; i < size; ++i) coords[i] = i;
        } else {
            std::vector<std::size_t> pool(size);
            for (std::size_t i = 0; i < size; ++i) pool[i] = i;
            for (std::size_t i = 0; i < want; ++i) {
                std::size_t r = i + static_cast<std::size_t>(uniform01(rng) * double(size - i));
                std::swap(pool[i], pool[r]);
                coords.push_back(pool[i]);
            }
        }

        for (std::size_t c : coords) {
            const double original = p[c];
            p[c] = original + options.step;
            double up = eval_loss(params, build);
            p[c] = original - options.step;
            double down = eval_loss(params, build);
            p[c] = original;
            double numeric = (up - down) / (2.0 * options.step);
            double a = analytic[pi][c];
            double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace kernclass
