#pragma once

#include "sbi/embed.hpp"
#include "sbi/tensor.hpp"

namespace sbi {

// Linear-Gaussian state-space model
//   x_1 ~ N(mu0, Sigma0),  x_t = A x_{t-1} + w_t,  w ~ N(0, Q)
//   y_t = C x_t + v_t,     v ~ N(0, R)
struct LinearGaussianSSM {
  Tensor A;              // S x S
  Tensor C;              // V x S
  Tensor Q;              // S x S
  Tensor R;              // V x V
  std::vector<double> mu0;
  Tensor Sigma0;         // S x S

  std::int64_t state_dim() const { return A.rows(); }
  std::int64_t obs_dim() const { return C.rows(); }
  void validate() const;  // shape consistency + symmetry of Q, R, Sigma0

  static LinearGaussianSSM scalar(double a, double c, double q, double r, double m0, double s0);
};

// Exact log-likelihood by the Kalman predict/update recursion with the
// Joseph-form covariance update. Throws NumericError if an innovation
// covariance loses positive definiteness.
double kalman_loglik(const LinearGaussianSSM& ssm, const SeriesPanel& panel);

// Seeded simulation of the model; pure in (ssm, T, seed).
SeriesPanel simulate_lgssm(const LinearGaussianSSM& ssm, std::int64_t T, std::uint64_t seed);

}  // namespace sbi
