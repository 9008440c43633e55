#include "sbi/cashflow.hpp"

#include <algorithm>
#include <cmath>

#include "sbi/common.hpp"

namespace sbi {

void CashflowParams::validate() const {
  if (!(alpha > 0 && alpha < 1) || !(delta > 0 && delta <= 1) || !(rho >= 0 && rho < 1) || !(sigma > 0) || !(r > 0))
    throw ContractViolation("CashflowParams out of range");
}

double CashflowParams::k_star() const { return std::pow(alpha / (r + delta), 1.0 / (1.0 - alpha)); }

Tensor cashflow_bellman_step(const CashflowParams& p, const std::vector<double>& k_grid,
                             const std::vector<double>& z_grid, const Tensor& P, const Tensor& V,
                             std::vector<int>* policy) {
  const std::int64_t nk = static_cast<std::int64_t>(k_grid.size());
  const std::int64_t nz = static_cast<std::int64_t>(z_grid.size());
  const double beta = p.beta();
  // EV(k', j) = sum_j' P(j, j') V(k', j')
  Tensor EV = Tensor::zeros({nk, nz});
  for (std::int64_t ik = 0; ik < nk; ++ik)
    for (std::int64_t j = 0; j < nz; ++j) {
      double s = 0.0;
      for (std::int64_t jn = 0; jn < nz; ++jn) s += P.at(j, jn) * V.at(ik, jn);
      EV.at(ik, j) = s;
    }
  Tensor out = Tensor::zeros({nk, nz});
  if (policy) policy->assign(static_cast<std::size_t>(nk * nz), 0);
  for (std::int64_t ik = 0; ik < nk; ++ik) {
    const double k = k_grid[static_cast<std::size_t>(ik)];
    const double keep = (1.0 - p.delta) * k;
    for (std::int64_t j = 0; j < nz; ++j) {
      const double profit = std::exp(z_grid[static_cast<std::size_t>(j)]) * std::pow(k, p.alpha);
      double best = -1e308;
      std::int64_t best_idx = 0;
      for (std::int64_t in = 0; in < nk; ++in) {
        const double cand = profit - (k_grid[static_cast<std::size_t>(in)] - keep) + beta * EV.at(in, j);
        if (cand > best) {
          best = cand;
          best_idx = in;
        }
      }
      out.at(ik, j) = best;
      if (policy) (*policy)[static_cast<std::size_t>(ik * nz + j)] = static_cast<int>(best_idx);
    }
  }
  return out;
}

CashflowSolution solve_cashflow_vfi(const CashflowParams& p, const CashflowGridConfig& cfg) {
  p.validate();
  CashflowSolution sol;
  sol.chain = tauchen(p.rho, p.sigma, cfg.nz, cfg.width_m);
  sol.z_grid = sol.chain.grid;
  const double ks = p.k_star();
  sol.k_grid.resize(static_cast<std::size_t>(cfg.nk));
  for (int i = 0; i < cfg.nk; ++i)
    sol.k_grid[static_cast<std::size_t>(i)] = cfg.k_lo_frac * ks + (cfg.k_hi_frac - cfg.k_lo_frac) * ks * i / (cfg.nk - 1);

  sol.value = Tensor::zeros({cfg.nk, cfg.nz});
  bool converged = false;
  for (int it = 0; it < cfg.max_iter; ++it) {
    Tensor next = cashflow_bellman_step(p, sol.k_grid, sol.z_grid, sol.chain.P, sol.value, &sol.policy);
    double err = 0.0;
    for (std::size_t i = 0; i < next.v.size(); ++i) err = std::max(err, std::fabs(next.v[i] - sol.value.v[i]));
    sol.value = std::move(next);
    sol.sup_err_trace.push_back(err);
    if (err < cfg.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw SimulationFailure("solve_cashflow_vfi: Bellman iteration did not converge in " +
                            std::to_string(cfg.max_iter) + " sweeps");
  return sol;
}

SeriesPanel simulate_cashflow(const CashflowParams& p, std::int64_t T, std::int64_t burn_in, std::uint64_t seed,
                              const CashflowGridConfig& cfg) {
  if (T < 1) throw ContractViolation("simulate_cashflow: T must be positive");
  const CashflowSolution sol = solve_cashflow_vfi(p, cfg);
  const std::int64_t nz = static_cast<std::int64_t>(sol.z_grid.size());
  RngStream rng(seed);
  // start at the grid point closest to K*, middle productivity
  std::int64_t ik = 0;
  double best = 1e308;
  for (std::size_t i = 0; i < sol.k_grid.size(); ++i) {
    const double d = std::fabs(sol.k_grid[i] - p.k_star());
    if (d < best) {
      best = d;
      ik = static_cast<std::int64_t>(i);
    }
  }
  std::int64_t iz = nz / 2;
  SeriesPanel panel = SeriesPanel::make(T, 1);
  for (std::int64_t t = 0; t < burn_in + T; ++t) {
    if (t >= burn_in) panel.values.at(t - burn_in, 0) = sol.k_grid[static_cast<std::size_t>(ik)];
    ik = sol.policy[static_cast<std::size_t>(ik * nz + iz)];
    const double u = rng.uniform();
    double acc = 0.0;
    std::int64_t next = nz - 1;
    for (std::int64_t j = 0; j < nz; ++j) {
      acc += sol.chain.P.at(iz, j);
      if (u <= acc) {
        next = j;
        break;
      }
    }
    iz = next;
  }
  return panel;
}

}  // namespace sbi
