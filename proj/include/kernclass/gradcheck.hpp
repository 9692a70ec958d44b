#pragma once

#include <functional>
#include <random>
#include <vector>

#include "kernclass/tape.hpp"
#include "kernclass/tensor.hpp"

namespace kernclass {

// Builds a scalar loss node on the tape from leaf nodes created for the given
// parameter tensors (same order).
using GraphBuilder = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;

struct GradCheckOptions {
    double step = 1e-5;       // central-difference step
    double fraction = 0.01;   // coordinates sampled per tensor
    int min_coords = 8;       // at least this many per tensor (capped by size)
};

// Compares reverse-mode gradients against central finite differences on a
// random coordinate subset of each parameter tensor. Returns the max relative
// error |a - g| / max(1, |a| + |g|) over all checked coordinates.
double gradient_check(std::vector<Tensor>& params, const GraphBuilder& build,
                      std::mt19937_64& rng, const GradCheckOptions& options = {});

}  // namespace kernclass
