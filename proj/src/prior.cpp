#include "sbi/prior.hpp"

#include <cmath>

namespace sbi {

UniformBoxPrior UniformBoxPrior::make(std::vector<std::string> names, std::vector<double> lo, std::vector<double> hi) {
  if (names.size() != lo.size() || names.size() != hi.size()) throw ContractViolation("prior: size mismatch");
  for (std::size_t j = 0; j < names.size(); ++j)
    if (!(lo[j] < hi[j])) throw ContractViolation("prior: low must be below high for " + names[j]);
  UniformBoxPrior p;
  p.names = std::move(names);
  p.lo = std::move(lo);
  p.hi = std::move(hi);
  return p;
}

std::vector<double> UniformBoxPrior::center() const {
  std::vector<double> c(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) c[j] = 0.5 * (lo[j] + hi[j]);
  return c;
}

Tensor UniformBoxPrior::sample(std::int64_t n, RngStream& rng) const {
  if (n < 1) throw ContractViolation("prior sample: n must be >= 1");
  Tensor out = Tensor::zeros({n, dim()});
  for (std::int64_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < names.size(); ++j) out.at(i, static_cast<std::int64_t>(j)) = rng.uniform(lo[j], hi[j]);
  return out;
}

bool UniformBoxPrior::inside(const double* theta) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (theta[j] < lo[j] || theta[j] > hi[j]) return false;
  return true;
}

double UniformBoxPrior::log_pdf(const double* theta) const {
  if (!inside(theta)) return kLogZero;
  double s = 0.0;
  for (std::size_t j = 0; j < names.size(); ++j) s -= std::log(hi[j] - lo[j]);
  return s;
}

}  // namespace sbi
