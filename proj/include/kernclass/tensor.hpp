#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace kernclass {

// Dense row-major 64-bit float tensor with an explicit shape. All model
// parameters, activations, and gradients use this type.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    static Tensor from(std::vector<int> shape, std::vector<double> data);
    static Tensor scalar(double v);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_str() const;

    // Throws NonFiniteError naming `what` if any entry is NaN or infinite.
    void check_finite(const std::string& what) const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

// Deterministic uniform double in [0, 1) built from the raw 64-bit stream,
// so results do not depend on the standard library's distribution internals.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Tensor uniform_tensor(std::vector<int> shape, double lo, double hi, std::mt19937_64& rng);

}  // namespace kernclass
