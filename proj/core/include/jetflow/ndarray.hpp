#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace jetflow {

/// Dense row-major real array with a runtime shape.
class NdArray {
 public:
  NdArray() = default;
  explicit NdArray(std::vector<std::size_t> shape)
      : shape_(std::move(shape)),
        data_(std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>{}), 0.0) {}
  NdArray(std::initializer_list<std::size_t> shape) : NdArray(std::vector<std::size_t>(shape)) {}

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_[axis]; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  template <class... I>
  double& operator()(I... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <class... I>
  double operator()(I... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    assert(idx.size() == shape_.size());
    std::size_t off = 0;
    std::size_t a = 0;
    for (std::size_t i : idx) {
      assert(i < shape_[a]);
      off = off * shape_[a++] + i;
    }
    return off;
  }

  NdArray& operator+=(const NdArray& o) {
    assert(o.shape_ == shape_);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  NdArray& operator-=(const NdArray& o) {
    assert(o.shape_ == shape_);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  NdArray& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }
  friend NdArray operator+(NdArray a, const NdArray& b) { return a += b; }
  friend NdArray operator-(NdArray a, const NdArray& b) { return a -= b; }
  friend NdArray operator*(double s, NdArray a) { return a *= s; }

  /// Same data under a new shape with the same total size.
  NdArray reshaped(std::vector<std::size_t> shape) const {
    NdArray out(std::move(shape));
    assert(out.size() == data_.size());
    out.data_ = data_;
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Largest |predicted - native| / max(1, |native|) over matching entries.
inline double max_relative_error(const NdArray& predicted, const NdArray& native) {
  assert(predicted.shape() == native.shape());
  double worst = 0.0;
  for (std::size_t k = 0; k < native.size(); ++k) {
    double d = std::abs(predicted[k] - native[k]) / std::max(1.0, std::abs(native[k]));
    if (std::isnan(d)) return d;
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace jetflow
