#pragma once

#include <string>
#include <vector>

#include "sbi/common.hpp"
#include "sbi/rng.hpp"
#include "sbi/tensor.hpp"

namespace sbi {

// Independent uniform box over named parameters. Log density is the constant
// -sum(log width) inside and kLogZero outside.
struct UniformBoxPrior {
  std::vector<std::string> names;
  std::vector<double> lo, hi;

  static UniformBoxPrior make(std::vector<std::string> names, std::vector<double> lo, std::vector<double> hi);

  std::int64_t dim() const { return static_cast<std::int64_t>(names.size()); }
  double width(std::size_t j) const { return hi[j] - lo[j]; }
  std::vector<double> center() const;

  Tensor sample(std::int64_t n, RngStream& rng) const;
  bool inside(const double* theta) const;
  bool inside(const std::vector<double>& theta) const { return inside(theta.data()); }
  double log_pdf(const double* theta) const;
  double log_pdf(const std::vector<double>& theta) const { return log_pdf(theta.data()); }
};

}  // namespace sbi
