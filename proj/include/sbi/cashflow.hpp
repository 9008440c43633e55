#pragma once

#include <vector>

#include "sbi/embed.hpp"
#include "sbi/tauchen.hpp"

namespace sbi {

// Risk-neutral firm choosing investment against profits z k^alpha, discounting
// at 1/(1+r).
struct CashflowParams {
  double alpha = 0.5;   // profit curvature
  double delta = 0.1;   // depreciation
  double rho = 0.75;    // log-productivity persistence
  double sigma = 0.15;  // shock sd
  double r = 0.05;      // interest rate

  double beta() const { return 1.0 / (1.0 + r); }
  double k_star() const;  // MPK = r + delta
  void validate() const;
};

struct CashflowGridConfig {
  int nk = 100;
  double k_lo_frac = 0.1;
  double k_hi_frac = 3.0;
  int nz = 7;
  double width_m = 3.0;
  int max_iter = 5000;
  double tol = 1e-6;  // sup-norm Bellman residual
};

struct CashflowSolution {
  std::vector<double> k_grid;
  std::vector<double> z_grid;  // log nodes
  MarkovChain chain;
  Tensor value;             // nk x nz
  std::vector<int> policy;  // next-capital grid index, k-major (ik * nz + iz)
  std::vector<double> sup_err_trace;
};

// One Bellman sweep: returns max over k' of profit - investment + beta E V.
Tensor cashflow_bellman_step(const CashflowParams& p, const std::vector<double>& k_grid,
                             const std::vector<double>& z_grid, const Tensor& P, const Tensor& V,
                             std::vector<int>* policy = nullptr);

CashflowSolution solve_cashflow_vfi(const CashflowParams& p, const CashflowGridConfig& cfg = {});

// Capital-level panel after dropping burn_in; productivity follows the
// discretized chain with seeded draws.
SeriesPanel simulate_cashflow(const CashflowParams& p, std::int64_t T, std::int64_t burn_in, std::uint64_t seed,
                              const CashflowGridConfig& cfg = {});

}  // namespace sbi
