// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "spannet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "spannet/error.hpp"

namespace spannet {

std::size_t shape_size(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (shape_size(shape_) != data_.size()) {
    throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                      " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = n_rows ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(n_rows * n_cols);
  for (const auto& r : rows) {
    if (r.size() != n_cols) throw ConfigError("ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({n_rows, n_cols}, std::move(data));
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t width = shape_.back();
  return {data_.data() + r * width, width};
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t width = shape_.back();
  return {data_.data() + r * width, width};
}

MatrixMap Tensor::mat() {
  if (rank() == 1) return MatrixMap(data_.data(), static_cast<Eigen::Index>(shape_[0]), 1);
  return MatrixMap(data_.data(), static_cast<Eigen::Index>(shape_[0]),
                   static_cast<Eigen::Index>(size() / std::max<std::size_t>(shape_[0], 1)));
}

ConstMatrixMap Tensor::mat() const {
  if (rank() == 1) return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(shape_[0]), 1);
  return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(shape_[0]),
                        static_cast<Eigen::Index>(size() / std::max<std::size_t>(shape_[0], 1)));
}

VectorMap Tensor::vec() { return VectorMap(data_.data(), static_cast<Eigen::Index>(size())); }
ConstVectorMap Tensor::vec() const { return ConstVectorMap(data_.data(), static_cast<Eigen::Index>(size())); }

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace spannet
