#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace gencodec {

// Dense row-major double tensor. Copies share storage (refcounted, like the
// usual inference-runtime Mat types); use clone() for a deep copy. Operators
// always allocate fresh outputs, so sharing is only visible to code that
// mutates through data().
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, double fill);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, double v) { return Tensor(std::move(shape), v); }
    static Tensor scalar(double v) { return Tensor({1}, v); }
    static Tensor from(std::vector<int> shape, std::vector<double> values);

    bool defined() const { return store_ != nullptr; }
    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    std::int64_t numel() const;

    double* data() { return store_->data(); }
    const double* data() const { return store_->data(); }

    double& operator[](std::int64_t i) { return (*store_)[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return (*store_)[static_cast<std::size_t>(i)]; }

    // CHW accessor for the common 3-d case.
    double& at(int c, int h, int w);
    double at(int c, int h, int w) const;

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    Tensor clone() const;
    // Same storage, new shape (numel must match).
    Tensor reshaped(std::vector<int> shape) const;

    void fill(double v);
    void zero() { fill(0.0); }

    // Elementwise in-place += (used for gradient accumulation).
    void add_(const Tensor& o);

    double min() const;
    double max() const;
    double sum() const;
    double mean() const;
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::shared_ptr<std::vector<double>> store_;
};

inline std::int64_t numel_of(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

} // namespace gencodec
