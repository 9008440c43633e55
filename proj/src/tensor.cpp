#include "sbi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sbi {

namespace {
std::int64_t shape_size(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw DimensionError("negative dimension");
    n *= d;
  }
  return n;
}
}  // namespace

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
  Tensor t;
  t.shape = std::move(shape);
  t.v.assign(static_cast<std::size_t>(shape_size(t.shape)), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value) {
  Tensor t = zeros(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::from(std::vector<std::int64_t> shape, std::vector<double> values) {
  if (shape_size(shape) != static_cast<std::int64_t>(values.size()))
    throw DimensionError("Tensor::from: shape does not match value count");
  Tensor t;
  t.shape = std::move(shape);
  t.v = std::move(values);
  return t;
}

Tensor Tensor::randn(std::vector<std::int64_t> shape, RngStream& rng, double sd) {
  Tensor t = zeros(std::move(shape));
  for (auto& x : t.v) x = sd * rng.gaussian();
  return t;
}

std::int64_t Tensor::rows() const {
  if (shape.empty()) return 0;
  return shape.size() == 1 ? 1 : shape[0];
}

std::int64_t Tensor::cols() const {
  if (shape.empty()) return 0;
  return shape.size() == 1 ? shape[0] : shape[1];
}

bool Tensor::all_finite() const {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

}  // namespace sbi
