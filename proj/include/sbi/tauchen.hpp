#pragma once

#include <vector>

#include "sbi/tensor.hpp"

namespace sbi {

// Finite-state approximation of log z' = rho log z + eps, eps ~ N(0, sigma^2).
struct MarkovChain {
  std::vector<double> grid;  // log-space nodes, symmetric about 0
  Tensor P;                  // row-stochastic transition matrix

  std::vector<double> stationary(int power_iters = 2000) const;
};

MarkovChain tauchen(double rho, double sigma, int n_states, double width_m = 3.0);

double normal_cdf(double x);

}  // namespace sbi
