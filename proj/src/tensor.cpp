#include "kernclass/tensor.hpp"

#include <cmath>

#include "kernclass/errors.hpp"

namespace kernclass {

namespace {
std::size_t shape_size(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw ShapeMismatch("negative tensor dimension");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(shape_size(shape_), 0.0);
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data) {
    if (shape_size(shape) != data.size())
        throw ShapeMismatch("tensor data size does not match its shape");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Tensor::shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

void Tensor::check_finite(const std::string& what) const {
    for (double v : data_)
        if (!std::isfinite(v)) throw NonFiniteError(what + " contains a non-finite value");
}

Tensor uniform_tensor(std::vector<int> shape, double lo, double hi, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = lo + (hi - lo) * uniform01(rng);
    return t;
}

}  // namespace kernclass
