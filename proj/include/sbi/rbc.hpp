#pragma once

#include <vector>

#include "sbi/embed.hpp"
#include "sbi/tauchen.hpp"

namespace sbi {

struct RBCParams {
  double alpha = 0.36;   // capital share
  double beta = 0.96;    // discount factor
  double delta = 0.1;    // depreciation
  double rho = 0.9;      // log-productivity persistence
  double sigma_eps = 0.02;  // productivity shock sd
  double gamma = 2.0;    // CRRA coefficient
  double labor = 1.0;    // fixed labor

  void validate() const;
};

struct RBCSteadyState {
  double K, C, Y;
};

// K* solves beta (alpha K^(alpha-1) + 1 - delta) = 1 at unit productivity.
RBCSteadyState rbc_steady_state(const RBCParams& p);

struct RbcGridConfig {
  int nk = 100;
  double k_lo_frac = 0.25;  // grid bounds as fractions of K*
  double k_hi_frac = 4.0;
  int nz = 7;
  double width_m = 3.0;
  int nm = 140;      // internal cash-on-hand grid
  int max_iter = 1000;
  double tol = 1e-9;  // sup-norm policy change, consumption units of C*
};

// Converged consumption policy tabulated on (capital, log productivity).
struct PolicyGrid {
  std::vector<double> k_grid;
  std::vector<double> z_grid;  // log nodes
  Tensor table;                // consumption, nk x nz
  MarkovChain chain;
  std::vector<double> sup_err_trace;

  // bilinear with edge clamping
  double interp(double k, double log_z) const;
};

// Time iteration on the Euler equation, stepped on an endogenous cash-on-hand
// grid and tabulated back onto the capital grid. Throws SimulationFailure when
// the policy has not settled within max_iter sweeps.
PolicyGrid solve_rbc(const RBCParams& p, const RbcGridConfig& cfg = {});

// Relative Euler-equation residual at (k, z-node j) using the tabulated policy.
double rbc_euler_residual(const RBCParams& p, const PolicyGrid& grid, double k, int j);

// Panel of (C, I, Z) after dropping burn_in periods; Z follows the continuous
// log-AR(1) with seeded shocks and the policy is interpolated in (k, log z).
SeriesPanel simulate_rbc(const RBCParams& p, std::int64_t T, std::int64_t burn_in, std::uint64_t seed,
                         const RbcGridConfig& cfg = {});
SeriesPanel simulate_rbc_with(const RBCParams& p, const PolicyGrid& grid, std::int64_t T, std::int64_t burn_in,
                              std::uint64_t seed);

}  // namespace sbi
