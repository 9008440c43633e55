#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbi/common.hpp"
#include "sbi/rng.hpp"

namespace sbi {

// Dense row-major real array. Rank is 1 or 2 in practice; rank-1 tensors are
// treated as single-row matrices by the tape ops.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<double> v;

  Tensor() = default;

  static Tensor zeros(std::vector<std::int64_t> shape);
  static Tensor full(std::vector<std::int64_t> shape, double value);
  static Tensor from(std::vector<std::int64_t> shape, std::vector<double> values);
  static Tensor scalar(double value) { return from({1}, {value}); }
  static Tensor randn(std::vector<std::int64_t> shape, RngStream& rng, double sd = 1.0);

  std::int64_t size() const { return static_cast<std::int64_t>(v.size()); }
  std::int64_t rows() const;
  std::int64_t cols() const;

  double& at(std::int64_t r, std::int64_t c) { return v[static_cast<std::size_t>(r * cols() + c)]; }
  double at(std::int64_t r, std::int64_t c) const { return v[static_cast<std::size_t>(r * cols() + c)]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  std::string shape_str() const;
};

}  // namespace sbi
