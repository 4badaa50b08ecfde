#include "gencodec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gencodec/errors.hpp"

namespace gencodec {

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)),
      store_(std::make_shared<std::vector<double>>(static_cast<std::size_t>(numel_of(shape_)), 0.0)) {}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)),
      store_(std::make_shared<std::vector<double>>(static_cast<std::size_t>(numel_of(shape_)), fill)) {}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
    if (numel_of(shape) != static_cast<std::int64_t>(values.size()))
        throw InvalidArgument("Tensor::from: value count does not match shape");
    Tensor t;
    t.shape_ = std::move(shape);
    t.store_ = std::make_shared<std::vector<double>>(std::move(values));
    return t;
}

std::int64_t Tensor::numel() const {
    return store_ ? static_cast<std::int64_t>(store_->size()) : 0;
}

double& Tensor::at(int c, int h, int w) {
    const int H = shape_[1], W = shape_[2];
    return (*store_)[static_cast<std::size_t>((static_cast<std::int64_t>(c) * H + h) * W + w)];
}

double Tensor::at(int c, int h, int w) const {
    const int H = shape_[1], W = shape_[2];
    return (*store_)[static_cast<std::size_t>((static_cast<std::int64_t>(c) * H + h) * W + w)];
}

Tensor Tensor::clone() const {
    Tensor t;
    t.shape_ = shape_;
    if (store_) t.store_ = std::make_shared<std::vector<double>>(*store_);
    return t;
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
    if (numel_of(shape) != numel())
        throw InvalidArgument("reshape: numel mismatch " + shape_str());
    Tensor t;
    t.shape_ = std::move(shape);
    t.store_ = store_;
    return t;
}

void Tensor::fill(double v) {
    std::fill(store_->begin(), store_->end(), v);
}

void Tensor::add_(const Tensor& o) {
    const double* src = o.data();
    double* dst = data();
    const std::int64_t n = numel();
    for (std::int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

double Tensor::min() const { return *std::min_element(store_->begin(), store_->end()); }
double Tensor::max() const { return *std::max_element(store_->begin(), store_->end()); }
double Tensor::sum() const { return std::accumulate(store_->begin(), store_->end(), 0.0); }
double Tensor::mean() const { return sum() / static_cast<double>(numel()); }

bool Tensor::all_finite() const {
    for (double v : *store_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << "]";
    return os.str();
}

} // namespace gencodec
