#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "cwa/error.hpp"

namespace cwa {

// Dense row-major tensor. Storage scalar is a template parameter: production
// code uses float, verification oracles instantiate double.
template <typename Scalar>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<int> shape, Scalar fill = Scalar(0))
      : shape_(std::move(shape)), data_(checked_numel(shape_), fill) {}

  TensorT(std::initializer_list<int> shape, Scalar fill = Scalar(0))
      : TensorT(std::vector<int>(shape), fill) {}

  static TensorT from_data(std::vector<int> shape, std::vector<Scalar> data) {
    TensorT t;
    if (checked_numel(shape) != static_cast<std::int64_t>(data.size())) {
      throw InvalidInputError("tensor data length does not match shape");
    }
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::vector<Scalar>& vec() { return data_; }
  const std::vector<Scalar>& vec() const { return data_; }

  Scalar& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  Scalar operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // Indexed access for the ranks used in practice.
  Scalar& at(int i, int j) { return data_[idx2(i, j)]; }
  Scalar at(int i, int j) const { return data_[idx2(i, j)]; }
  Scalar& at(int i, int j, int k) { return data_[idx3(i, j, k)]; }
  Scalar at(int i, int j, int k) const { return data_[idx3(i, j, k)]; }
  Scalar& at(int i, int j, int k, int l) { return data_[idx4(i, j, k, l)]; }
  Scalar at(int i, int j, int k, int l) const { return data_[idx4(i, j, k, l)]; }

  void fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (Scalar v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <typename Other>
  TensorT<Other> cast() const {
    TensorT<Other> out(shape_);
    for (std::int64_t i = 0; i < numel(); ++i) {
      out[i] = static_cast<Other>(data_[static_cast<std::size_t>(i)]);
    }
    return out;
  }

  static std::int64_t checked_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw InvalidInputError("tensor dims must be positive");
      n *= d;
    }
    return n;
  }

 private:
  std::size_t idx2(int i, int j) const {
    return static_cast<std::size_t>(i) * shape_[1] + j;
  }
  std::size_t idx3(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k;
  }
  std::size_t idx4(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l;
  }

  std::vector<int> shape_;
  std::vector<Scalar> data_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

inline std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// --- small numeric helpers used by the attack loops ---

template <typename Scalar>
double dot(const TensorT<Scalar>& a, const TensorT<Scalar>& b) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

template <typename Scalar>
double l2_norm_sq(const TensorT<Scalar>& a) {
  return dot(a, a);
}

template <typename Scalar>
double linf_norm(const TensorT<Scalar>& a) {
  double m = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i])));
  }
  return m;
}

// out = a + c * b
template <typename Scalar>
TensorT<Scalar> add_scaled(const TensorT<Scalar>& a, const TensorT<Scalar>& b, double c) {
  TensorT<Scalar> out = a;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    out[i] = static_cast<Scalar>(static_cast<double>(a[i]) + c * static_cast<double>(b[i]));
  }
  return out;
}

template <typename Scalar>
TensorT<Scalar> sub(const TensorT<Scalar>& a, const TensorT<Scalar>& b) {
  TensorT<Scalar> out = a;
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] - b[i];
  return out;
}

template <typename Scalar>
void clamp01_inplace(TensorT<Scalar>& a) {
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    a[i] = std::min(Scalar(1), std::max(Scalar(0), a[i]));
  }
}

}  // namespace cwa
