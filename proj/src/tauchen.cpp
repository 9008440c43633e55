#include "sbi/tauchen.hpp"

#include <cmath>

#include "sbi/common.hpp"

namespace sbi {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

MarkovChain tauchen(double rho, double sigma, int n_states, double width_m) {
  if (n_states < 3) throw ContractViolation("tauchen: need at least 3 states");
  if (rho < 0.0 || rho >= 1.0) throw ContractViolation("tauchen: rho must be in [0,1)");
  if (!(sigma > 0.0)) throw ContractViolation("tauchen: sigma must be positive");
  MarkovChain mc;
  const double sd_uncond = sigma / std::sqrt(1.0 - rho * rho);
  const double top = width_m * sd_uncond;
  mc.grid.resize(static_cast<std::size_t>(n_states));
  for (int i = 0; i < n_states; ++i)
    mc.grid[static_cast<std::size_t>(i)] = -top + 2.0 * top * i / (n_states - 1);
  const double half = top / (n_states - 1);  // half the grid spacing
  mc.P = Tensor::zeros({n_states, n_states});
  for (int i = 0; i < n_states; ++i) {
    const double m = rho * mc.grid[static_cast<std::size_t>(i)];
    for (int j = 0; j < n_states; ++j) {
      const double z = mc.grid[static_cast<std::size_t>(j)];
      double p;
      if (j == 0)
        p = normal_cdf((z + half - m) / sigma);
      else if (j == n_states - 1)
        p = 1.0 - normal_cdf((z - half - m) / sigma);
      else
        p = normal_cdf((z + half - m) / sigma) - normal_cdf((z - half - m) / sigma);
      mc.P.at(i, j) = p;
    }
    // normalize away the last ulps so each row sums to one exactly enough
    double s = 0.0;
    for (int j = 0; j < n_states; ++j) s += mc.P.at(i, j);
    for (int j = 0; j < n_states; ++j) mc.P.at(i, j) /= s;
  }
  return mc;
}

std::vector<double> MarkovChain::stationary(int power_iters) const {
  const std::int64_t n = P.rows();
  std::vector<double> pi(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  std::vector<double> next(static_cast<std::size_t>(n));
  for (int it = 0; it < power_iters; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j) next[static_cast<std::size_t>(j)] += pi[static_cast<std::size_t>(i)] * P.at(i, j);
    pi.swap(next);
  }
  return pi;
}

}  // namespace sbi
