#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbi/cashflow.hpp"
#include "sbi/rbc.hpp"
#include "sbi/registry.hpp"
#include "sbi/stats.hpp"

using namespace sbi;

TEST_CASE("tauchen rows are distributions; zero persistence collapses them") {
  auto mc = tauchen(0.0, 0.2, 9);
  for (std::int64_t i = 0; i < 9; ++i) {
    double s = 0.0;
    for (std::int64_t j = 0; j < 9; ++j) s += mc.P.at(i, j);
    CHECK(std::fabs(s - 1.0) < 1e-12);
  }
  for (std::int64_t i = 1; i < 9; ++i)
    for (std::int64_t j = 0; j < 9; ++j) CHECK(mc.P.at(i, j) == doctest::Approx(mc.P.at(0, j)).epsilon(1e-12));

  auto mc2 = tauchen(0.9, 0.37, 5, 2.5);
  for (std::int64_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::int64_t j = 0; j < 5; ++j) s += mc2.P.at(i, j);
    CHECK(std::fabs(s - 1.0) < 1e-12);
  }
  // grid symmetric about zero
  CHECK(mc2.grid.front() == doctest::Approx(-mc2.grid.back()).epsilon(1e-12));
}

TEST_CASE("tauchen chain reproduces the AR(1) stationary variance") {
  const double rho = 0.9, sigma = 0.1;
  // width 2.5: at rho = 0.9 a 15-node grid at the default width 3.0 spreads
  // the stationary variance ~6% high, which is a property of the
  // discretization, not of the sampler under test
  auto mc = tauchen(rho, sigma, 15, 2.5);
  RngStream rng(1);
  std::int64_t state = 7;
  const std::int64_t n = 1000000;
  double s1 = 0.0, s2 = 0.0;
  std::vector<double> freq(15, 0.0);
  for (std::int64_t t = 0; t < n; ++t) {
    const double x = mc.grid[static_cast<std::size_t>(state)];
    s1 += x;
    s2 += x * x;
    freq[static_cast<std::size_t>(state)] += 1.0;
    const double u = rng.uniform();
    double acc = 0.0;
    std::int64_t next = 14;
    for (std::int64_t j = 0; j < 15; ++j) {
      acc += mc.P.at(state, j);
      if (u <= acc) {
        next = j;
        break;
      }
    }
    state = next;
  }
  const double mean = s1 / static_cast<double>(n);
  const double var = s2 / static_cast<double>(n) - mean * mean;
  const double target = sigma * sigma / (1.0 - rho * rho);
  CHECK(std::fabs(var - target) / target < 0.05);

  // power-iteration stationary distribution matches the visit frequencies
  auto pi = mc.stationary();
  for (std::size_t j = 0; j < pi.size(); ++j)
    CHECK(std::fabs(pi[j] - freq[j] / static_cast<double>(n)) < 0.02);
}

TEST_CASE("rbc steady state solves the Euler condition") {
  RBCParams p;  // alpha 0.36, beta 0.96, delta 0.1
  auto ss = rbc_steady_state(p);
  // independent bisection on beta*(alpha K^(alpha-1) + 1 - delta) - 1
  double lo = 0.01, hi = 100.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = p.beta * (p.alpha * std::pow(mid, p.alpha - 1.0) + 1.0 - p.delta) - 1.0;
    if (g > 0)
      lo = mid;
    else
      hi = mid;
  }
  CHECK(std::fabs(ss.K - 0.5 * (lo + hi)) < 1e-8);
  CHECK(ss.K == doctest::Approx(4.294).epsilon(1e-3));
  // resource-constraint residual at the steady state
  CHECK(std::fabs(ss.K - ((1.0 - p.delta) * ss.K + ss.Y - ss.C)) < 1e-10);

  // constructed fixed point at K* = 1
  RBCParams q = p;
  q.beta = 1.0 / (1.0 + q.alpha - q.delta);
  CHECK(rbc_steady_state(q).K == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("rbc policy is monotone, consistent with the steady state, and converges") {
  RBCParams p;
  RbcGridConfig cfg;
  PolicyGrid grid = solve_rbc(p, cfg);
  auto ss = rbc_steady_state(p);

  // consumption strictly increasing in capital at every z node
  for (std::size_t j = 0; j < grid.z_grid.size(); ++j)
    for (std::size_t i = 1; i < grid.k_grid.size(); ++i)
      CHECK(grid.table.at(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) >
            grid.table.at(static_cast<std::int64_t>(i - 1), static_cast<std::int64_t>(j)));

  // policy at (K*, zbar) within 1% of C*
  CHECK(std::fabs(grid.interp(ss.K, 0.0) - ss.C) / ss.C < 0.01);

  // sup-norm trace eventually decreases monotonically
  const auto& tr = grid.sup_err_trace;
  REQUIRE(tr.size() > 40);
  for (std::size_t i = tr.size() - 30; i + 1 < tr.size(); ++i) CHECK(tr[i + 1] <= tr[i] * (1.0 + 1e-9));

  // median relative Euler residual over random interior states < 1e-4
  RngStream rng(2);
  std::vector<double> resid;
  while (resid.size() < 1000) {
    const double k = rng.uniform(grid.k_grid.front() * 1.05, grid.k_grid.back() * 0.95);
    const int j = static_cast<int>(rng.uniform_index(grid.z_grid.size()));
    const double r = rbc_euler_residual(p, grid, k, j);
    if (r > 0.0) resid.push_back(r);
  }
  CHECK(quantile_of(resid, 0.5) < 1e-4);
}

TEST_CASE("deterministic rbc settles at the steady state") {
  RBCParams p;
  p.sigma_eps = 0.0;
  SeriesPanel panel = simulate_rbc(p, 100, 100, 7);
  auto ss = rbc_steady_state(p);
  for (std::int64_t c = 0; c < 3; ++c) {
    double lo = 1e308, hi = -1e308;
    for (std::int64_t t = 0; t < panel.T; ++t) {
      lo = std::min(lo, panel.values.at(t, c));
      hi = std::max(hi, panel.values.at(t, c));
    }
    CHECK(hi - lo < 1e-3);
  }
  double cbar = 0.0;
  for (std::int64_t t = 0; t < panel.T; ++t) cbar += panel.values.at(t, 0);
  cbar /= static_cast<double>(panel.T);
  CHECK(std::fabs(cbar - ss.C) / ss.C < 0.01);
}

TEST_CASE("rbc simulation is seed-deterministic and respects the accounting identity") {
  RBCParams p;
  RbcGridConfig cfg;
  PolicyGrid grid = solve_rbc(p, cfg);
  SeriesPanel a = simulate_rbc_with(p, grid, 50, 0, 11);
  SeriesPanel b = simulate_rbc_with(p, grid, 50, 0, 11);
  CHECK(a.values.v == b.values.v);

  // with burn_in = 0 the path starts at K*; resources must balance each period
  double k = rbc_steady_state(p).K;
  for (std::int64_t t = 0; t < a.T; ++t) {
    const double c = a.values.at(t, 0), inv = a.values.at(t, 1), z = a.values.at(t, 2);
    const double y = z * std::pow(k, p.alpha);
    CHECK(std::fabs((c + inv) - y) < 1e-10);
    k = (1.0 - p.delta) * k + inv;  // K_t = (1-delta) K_{t-1} + Y_t - C_t
  }
}

TEST_CASE("rbc productivity autocorrelation tracks rho") {
  RBCParams p;
  RbcGridConfig cfg;
  PolicyGrid grid = solve_rbc(p, cfg);
  SeriesPanel panel = simulate_rbc_with(p, grid, 10000, 100, 13);
  std::vector<double> lz;
  for (std::int64_t t = 0; t < panel.T; ++t) lz.push_back(std::log(panel.values.at(t, 2)));
  CHECK(std::fabs(lag1_autocorr(lz) - p.rho) < 0.05);
}

TEST_CASE("tiny cashflow Bellman iterates equal brute-force enumeration") {
  CashflowParams p;
  std::vector<double> k_grid = {1.0, 2.0, 4.0, 6.5, 9.0};
  std::vector<double> z_grid = {-0.2, 0.0, 0.2};
  auto mc = tauchen(p.rho, p.sigma, 3);
  const Tensor& P = mc.P;
  Tensor V = Tensor::zeros({5, 3});
  Tensor Vb = V;
  const double beta = p.beta();
  for (int it = 0; it < 3; ++it) {
    V = cashflow_bellman_step(p, k_grid, z_grid, P, V);
    // oracle: exhaustive triple loop
    Tensor next = Tensor::zeros({5, 3});
    for (int ik = 0; ik < 5; ++ik)
      for (int j = 0; j < 3; ++j) {
        double best = -1e308;
        for (int in = 0; in < 5; ++in) {
          double ev = 0.0;
          for (int jn = 0; jn < 3; ++jn) ev += P.at(j, jn) * Vb.at(in, jn);
          const double val = std::exp(z_grid[static_cast<std::size_t>(j)]) * std::pow(k_grid[static_cast<std::size_t>(ik)], p.alpha) -
                             (k_grid[static_cast<std::size_t>(in)] - (1.0 - p.delta) * k_grid[static_cast<std::size_t>(ik)]) +
                             beta * ev;
          best = std::max(best, val);
        }
        next.at(ik, j) = best;
      }
    for (std::size_t i = 0; i < V.v.size(); ++i) CHECK(std::fabs(V.v[i] - next.v[i]) < 1e-12);
    Vb = V;
  }
}

TEST_CASE("cashflow value iteration contracts and orders monotonically") {
  CashflowParams p;
  CashflowGridConfig cfg;
  CashflowSolution sol = solve_cashflow_vfi(p, cfg);
  const double beta = p.beta();

  // once the argmax support settles, successive errors shrink by <= beta + 0.01
  const auto& tr = sol.sup_err_trace;
  REQUIRE(tr.size() > 30);
  for (std::size_t i = tr.size() - 20; i + 1 < tr.size(); ++i) CHECK(tr[i + 1] <= tr[i] * (beta + 0.01));

  const std::int64_t nk = static_cast<std::int64_t>(sol.k_grid.size());
  const std::int64_t nz = static_cast<std::int64_t>(sol.z_grid.size());
  // value nondecreasing in capital and productivity
  for (std::int64_t j = 0; j < nz; ++j)
    for (std::int64_t i = 1; i < nk; ++i) CHECK(sol.value.at(i, j) >= sol.value.at(i - 1, j) - 1e-9);
  for (std::int64_t i = 0; i < nk; ++i)
    for (std::int64_t j = 1; j < nz; ++j) CHECK(sol.value.at(i, j) >= sol.value.at(i, j - 1) - 1e-9);
  // investment policy nondecreasing in productivity at fixed capital
  for (std::int64_t i = 0; i < nk; ++i)
    for (std::int64_t j = 1; j < nz; ++j)
      CHECK(sol.policy[static_cast<std::size_t>(i * nz + j)] >= sol.policy[static_cast<std::size_t>(i * nz + j - 1)]);
}

TEST_CASE("cashflow simulation: vanishing shocks give a constant tail") {
  CashflowParams p;
  p.sigma = 1e-6;
  SeriesPanel panel = simulate_cashflow(p, 200, 50, 3);
  for (std::int64_t t = 150; t < panel.T; ++t) CHECK(panel.values.at(t, 0) == panel.values.at(150, 0));
}

TEST_CASE("cashflow simulation is seeded and grid-stable") {
  CashflowParams p;
  SeriesPanel a = simulate_cashflow(p, 300, 100, 9);
  SeriesPanel b = simulate_cashflow(p, 300, 100, 9);
  CHECK(a.values.v == b.values.v);

  CashflowGridConfig coarse, fine;
  coarse.nk = 100;
  fine.nk = 200;
  SeriesPanel pc = simulate_cashflow(p, 2000, 100, 10, coarse);
  SeriesPanel pf = simulate_cashflow(p, 2000, 100, 10, fine);
  const double mc = mean_of(pc.values.v), mf = mean_of(pf.values.v);
  CHECK(std::fabs(mc - mf) / mf < 0.10);
}

TEST_CASE("lgssm simulation: deterministic recursion and AR(1) autocorrelation") {
  auto det = LinearGaussianSSM::scalar(0.9, 1.0, 0.0, 0.0, 1.0, 0.0);
  SeriesPanel a = simulate_lgssm(det, 20, 5);
  double x = 1.0;
  for (std::int64_t t = 0; t < 20; ++t) {
    CHECK(a.values.at(t, 0) == doctest::Approx(x).epsilon(1e-14));
    x *= 0.9;
  }

  auto ar = LinearGaussianSSM::scalar(0.7, 1.0, 0.09, 0.0, 0.0, 0.09 / (1.0 - 0.49));
  SeriesPanel b = simulate_lgssm(ar, 10000, 6);
  CHECK(std::fabs(lag1_autocorr(b.values.v) - 0.7) < 0.03);

  SeriesPanel c = simulate_lgssm(ar, 100, 7);
  SeriesPanel d = simulate_lgssm(ar, 100, 7);
  CHECK(c.values.v == d.values.v);
}

TEST_CASE("model registry exposes specs and rejects unknown names") {
  CHECK_THROWS_AS(get_model("nope"), UsageError);
  const auto names = model_names();
  CHECK(names.size() == 5);
  const ModelSpec& rbc = get_model("rbc");
  CHECK(rbc.param_names == std::vector<std::string>{"alpha", "beta", "delta", "rho"});
  CHECK(rbc.observables == std::vector<std::string>{"C", "I", "Z"});
  CHECK(rbc.prior.inside(rbc.default_theta));

  // every registered simulator is a pure function of (theta, T, seed)
  for (const auto& name : names) {
    const ModelSpec& m = get_model(name);
    SeriesPanel a = m.simulate(m.default_theta, 40, 77);
    SeriesPanel b = m.simulate(m.default_theta, 40, 77);
    CHECK(a.values.v == b.values.v);
    CHECK(a.T == 40);
    CHECK(a.V == static_cast<std::int64_t>(m.observables.size()));
  }
}
