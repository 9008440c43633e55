#include "sbi/rbc.hpp"

#include <algorithm>
#include <cmath>

#include "sbi/common.hpp"

namespace sbi {

namespace {

double interp1(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) {
    // linear extension from the first segment
    const double t = (x - xs[0]) / (xs[1] - xs[0]);
    return ys[0] + t * (ys[1] - ys[0]);
  }
  if (x >= xs.back()) {
    const std::size_t n = xs.size();
    const double t = (x - xs[n - 2]) / (xs[n - 1] - xs[n - 2]);
    return ys[n - 2] + t * (ys[n - 1] - ys[n - 2]);
  }
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] + t * (ys[i + 1] - ys[i]);
}

}  // namespace

void RBCParams::validate() const {
  if (!(alpha > 0 && alpha < 1) || !(beta > 0 && beta < 1) || !(delta > 0 && delta <= 1) || !(rho >= 0 && rho < 1) ||
      !(gamma > 0) || !(sigma_eps >= 0))
    throw ContractViolation("RBCParams out of range");
}

RBCSteadyState rbc_steady_state(const RBCParams& p) {
  p.validate();
  const double denom = 1.0 / p.beta - 1.0 + p.delta;
  if (!(denom > 0)) throw NumericError("rbc_steady_state: no interior steady state");
  RBCSteadyState ss;
  ss.K = std::pow(p.alpha * std::pow(p.labor, 1.0 - p.alpha) / denom, 1.0 / (1.0 - p.alpha));
  ss.Y = std::pow(ss.K, p.alpha) * std::pow(p.labor, 1.0 - p.alpha);
  ss.C = ss.Y - p.delta * ss.K;
  if (!(ss.C > 0)) throw NumericError("rbc_steady_state: negative steady-state consumption");
  return ss;
}

double PolicyGrid::interp(double k, double log_z) const {
  const double kc = std::clamp(k, k_grid.front(), k_grid.back());
  const double zc = std::clamp(log_z, z_grid.front(), z_grid.back());
  auto kit = std::upper_bound(k_grid.begin(), k_grid.end(), kc);
  std::size_t i = kit == k_grid.begin() ? 0 : static_cast<std::size_t>(kit - k_grid.begin()) - 1;
  i = std::min(i, k_grid.size() - 2);
  auto zit = std::upper_bound(z_grid.begin(), z_grid.end(), zc);
  std::size_t j = zit == z_grid.begin() ? 0 : static_cast<std::size_t>(zit - z_grid.begin()) - 1;
  j = std::min(j, z_grid.size() - 2);
  const double tk = (kc - k_grid[i]) / (k_grid[i + 1] - k_grid[i]);
  const double tz = (zc - z_grid[j]) / (z_grid[j + 1] - z_grid[j]);
  const double a = table.at(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j));
  const double b = table.at(static_cast<std::int64_t>(i + 1), static_cast<std::int64_t>(j));
  const double c = table.at(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j + 1));
  const double d = table.at(static_cast<std::int64_t>(i + 1), static_cast<std::int64_t>(j + 1));
  return (1 - tk) * (1 - tz) * a + tk * (1 - tz) * b + (1 - tk) * tz * c + tk * tz * d;
}

PolicyGrid solve_rbc(const RBCParams& p, const RbcGridConfig& cfg) {
  p.validate();
  const RBCSteadyState ss = rbc_steady_state(p);
  const double sigma_z = std::max(p.sigma_eps, 1e-8);
  MarkovChain chain = tauchen(p.rho, sigma_z, cfg.nz, cfg.width_m);

  PolicyGrid grid;
  grid.chain = chain;
  grid.z_grid = chain.grid;
  grid.k_grid.resize(static_cast<std::size_t>(cfg.nk));
  const double k_lo = cfg.k_lo_frac * ss.K, k_hi = cfg.k_hi_frac * ss.K;
  for (int i = 0; i < cfg.nk; ++i)
    grid.k_grid[static_cast<std::size_t>(i)] = k_lo + (k_hi - k_lo) * i / (cfg.nk - 1);

  const int nz = cfg.nz;
  std::vector<double> z_level(static_cast<std::size_t>(nz));
  for (int j = 0; j < nz; ++j) z_level[static_cast<std::size_t>(j)] = std::exp(chain.grid[static_cast<std::size_t>(j)]);

  auto resources = [&](double k, double z) { return (1.0 - p.delta) * k + z * std::pow(k, p.alpha) * std::pow(p.labor, 1.0 - p.alpha); };

  // cash-on-hand grid spanning all reachable resources
  std::vector<double> m_grid(static_cast<std::size_t>(cfg.nm));
  const double m_lo = resources(k_lo, z_level.front());
  const double m_hi = resources(k_hi, z_level.back());
  for (int i = 0; i < cfg.nm; ++i)
    m_grid[static_cast<std::size_t>(i)] = m_lo + (m_hi - m_lo) * i / (cfg.nm - 1);

  // consumption policy on (m, z); start from a mild interior guess
  std::vector<std::vector<double>> c(static_cast<std::size_t>(nz), std::vector<double>(static_cast<std::size_t>(cfg.nm)));
  for (int j = 0; j < nz; ++j)
    for (int i = 0; i < cfg.nm; ++i) c[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = 0.5 * m_grid[static_cast<std::size_t>(i)];

  const auto& a_grid = grid.k_grid;  // end-of-period assets live on the capital grid
  const double uinv = -1.0 / p.gamma;
  std::vector<double> m_endog(a_grid.size()), c_endog(a_grid.size());
  std::vector<std::vector<double>> c_new(static_cast<std::size_t>(nz), std::vector<double>(static_cast<std::size_t>(cfg.nm)));

  bool converged = false;
  for (int it = 0; it < cfg.max_iter; ++it) {
    double sup_err = 0.0;
    for (int j = 0; j < nz; ++j) {
      for (std::size_t ia = 0; ia < a_grid.size(); ++ia) {
        const double a = a_grid[ia];
        double rhs = 0.0;
        for (int jn = 0; jn < nz; ++jn) {
          const double zp = z_level[static_cast<std::size_t>(jn)];
          const double mp = resources(a, zp);
          const double cp = std::max(interp1(m_grid, c[static_cast<std::size_t>(jn)], mp), 1e-12);
          const double mpk = p.alpha * zp * std::pow(a, p.alpha - 1.0) * std::pow(p.labor, 1.0 - p.alpha) + 1.0 - p.delta;
          rhs += chain.P.at(j, jn) * std::pow(cp, -p.gamma) * mpk;
        }
        c_endog[ia] = std::pow(p.beta * rhs, uinv);
        m_endog[ia] = c_endog[ia] + a;
      }
      // enforce monotone endogenous grid before interpolating back
      for (std::size_t ia = 1; ia < a_grid.size(); ++ia)
        if (m_endog[ia] <= m_endog[ia - 1]) m_endog[ia] = m_endog[ia - 1] + 1e-12;
      for (int i = 0; i < cfg.nm; ++i) {
        const double m = m_grid[static_cast<std::size_t>(i)];
        double ci;
        if (m <= m_endog.front()) {
          // binding lower asset bound: eat everything above the smallest stock
          ci = std::max(m - a_grid.front(), 1e-12);
        } else {
          ci = std::max(interp1(m_endog, c_endog, m), 1e-12);
        }
        c_new[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = ci;
        sup_err = std::max(sup_err, std::fabs(ci - c[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]));
      }
    }
    c.swap(c_new);
    const double rel = sup_err / std::max(ss.C, 1e-12);
    grid.sup_err_trace.push_back(rel);
    if (rel < cfg.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw SimulationFailure("solve_rbc: time iteration did not converge in " + std::to_string(cfg.max_iter) +
                            " sweeps (last rel change " + std::to_string(grid.sup_err_trace.back()) + ")");

  grid.table = Tensor::zeros({cfg.nk, nz});
  for (int i = 0; i < cfg.nk; ++i)
    for (int j = 0; j < nz; ++j) {
      const double m = resources(grid.k_grid[static_cast<std::size_t>(i)], z_level[static_cast<std::size_t>(j)]);
      grid.table.at(i, j) = std::max(interp1(m_grid, c[static_cast<std::size_t>(j)], m), 1e-12);
    }
  return grid;
}

double rbc_euler_residual(const RBCParams& p, const PolicyGrid& grid, double k, int j) {
  const double z = std::exp(grid.z_grid[static_cast<std::size_t>(j)]);
  const double m = (1.0 - p.delta) * k + z * std::pow(k, p.alpha) * std::pow(p.labor, 1.0 - p.alpha);
  const double c0 = grid.interp(k, grid.z_grid[static_cast<std::size_t>(j)]);
  const double a = m - c0;
  if (a <= grid.k_grid.front() || a >= grid.k_grid.back()) return 0.0;  // constrained or off-grid: skip
  double rhs = 0.0;
  for (std::size_t jn = 0; jn < grid.z_grid.size(); ++jn) {
    const double zp = std::exp(grid.z_grid[jn]);
    const double cp = std::max(grid.interp(a, grid.z_grid[jn]), 1e-12);
    const double mpk = p.alpha * zp * std::pow(a, p.alpha - 1.0) * std::pow(p.labor, 1.0 - p.alpha) + 1.0 - p.delta;
    rhs += grid.chain.P.at(static_cast<std::int64_t>(j), static_cast<std::int64_t>(jn)) * std::pow(cp, -p.gamma) * mpk;
  }
  const double c_implied = std::pow(p.beta * rhs, -1.0 / p.gamma);
  return std::fabs(c_implied / c0 - 1.0);
}

SeriesPanel simulate_rbc_with(const RBCParams& p, const PolicyGrid& grid, std::int64_t T, std::int64_t burn_in,
                              std::uint64_t seed) {
  if (T < 1) throw ContractViolation("simulate_rbc: T must be positive");
  const RBCSteadyState ss = rbc_steady_state(p);
  RngStream rng(seed);
  SeriesPanel panel = SeriesPanel::make(T, 3);  // C, I, Z
  double k = ss.K;
  double lz = 0.0;
  for (std::int64_t t = 0; t < burn_in + T; ++t) {
    const double z = std::exp(lz);
    const double y = z * std::pow(k, p.alpha) * std::pow(p.labor, 1.0 - p.alpha);
    const double m = (1.0 - p.delta) * k + y;
    double c = grid.interp(k, lz);
    c = std::clamp(c, 1e-9, m - 1e-9);
    const double k_next = m - c;
    if (t >= burn_in) {
      panel.values.at(t - burn_in, 0) = c;
      panel.values.at(t - burn_in, 1) = y - c;
      panel.values.at(t - burn_in, 2) = z;
    }
    k = k_next;
    lz = p.rho * lz + p.sigma_eps * rng.gaussian();
  }
  return panel;
}

SeriesPanel simulate_rbc(const RBCParams& p, std::int64_t T, std::int64_t burn_in, std::uint64_t seed,
                         const RbcGridConfig& cfg) {
  const PolicyGrid grid = solve_rbc(p, cfg);
  return simulate_rbc_with(p, grid, T, burn_in, seed);
}

}  // namespace sbi
