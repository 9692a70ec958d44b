#include "kernclass/adam.hpp"

#include <cmath>

#include "kernclass/errors.hpp"

namespace kernclass {

void Adam::step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
    if (params.size() != grads.size()) throw ShapeMismatch("adam: params/grads count mismatch");
    if (m_.empty()) {
        for (const Tensor* p : params) {
            m_.emplace_back(p->shape());
            v_.emplace_back(p->shape());
        }
    }
    if (m_.size() != params.size()) throw ShapeMismatch("adam: parameter list changed size");

    ++step_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        if (!p.same_shape(g) || !p.same_shape(m_[i]))
            throw ShapeMismatch("adam: shape mismatch at parameter " + std::to_string(i));
        g.check_finite("gradient");
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t q = 0; q < p.size(); ++q) {
            m[q] = config_.beta1 * m[q] + (1.0 - config_.beta1) * g[q];
            v[q] = config_.beta2 * v[q] + (1.0 - config_.beta2) * g[q] * g[q];
            double mhat = m[q] / c1;
            double vhat = v[q] / c2;
            p[q] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
        }
        p.check_finite("parameter after adam step");
    }
}

}  // namespace kernclass
