#pragma once

#include <vector>

#include "kernclass/tensor.hpp"

namespace kernclass {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard bias-corrected Adam. Moments are allocated on first use and keyed
// by position, so the same parameter list (same order, same shapes) must be
// passed to every step.
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    const AdamConfig& config() const { return config_; }
    long step_count() const { return step_; }

    void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

private:
    AdamConfig config_;
    long step_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace kernclass
