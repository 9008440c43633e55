#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sbi/fit.hpp"
#include "sbi/flow.hpp"
#include "sbi/stats.hpp"

using namespace sbi;

namespace {

double held_out_nll(const NormalizingFlow& flow, const ParamStore& ps, const Tensor& thetas) {
  auto lp = flow.log_prob_batch(ps, thetas, Tensor{});
  double s = 0.0;
  for (double v : lp) s += v;
  return -s / static_cast<double>(lp.size());
}

}  // namespace

TEST_CASE("unconditional 1-D flow reaches the Gaussian entropy floor") {
  RngStream gen(101);
  const std::int64_t n = 20000;
  Tensor data = Tensor::zeros({n, 1});
  for (auto& x : data.v) x = 2.0 + 0.5 * gen.gaussian();
  Tensor heldout = Tensor::zeros({4000, 1});
  for (auto& x : heldout.v) x = 2.0 + 0.5 * gen.gaussian();

  FlowConfig cfg;
  cfg.dim = 1;
  cfg.ctx_dim = 0;
  cfg.n_layers = 3;
  cfg.width = 16;
  ParamStore ps;
  RngStream init(102);
  NormalizingFlow flow = NormalizingFlow::build(ps, "f", cfg, init);

  TrainConfig tc;
  tc.max_epochs = 120;
  tc.patience = 15;
  RngStream train(103);
  fit_mle(flow, ps, data, Tensor{}, {}, tc, train);

  const double nll = held_out_nll(flow, ps, heldout);
  const double entropy = 0.5 * std::log(2.0 * M_PI * M_E * 0.25);  // sigma = 0.5
  CHECK(std::fabs(nll - entropy) < 0.05);
}

TEST_CASE("all-ones weights reproduce the unweighted trajectory exactly") {
  RngStream gen(111);
  const std::int64_t n = 600;
  Tensor data = Tensor::zeros({n, 1});
  for (auto& x : data.v) x = gen.gaussian() * 1.3 - 0.4;

  FlowConfig cfg;
  cfg.dim = 1;
  cfg.ctx_dim = 0;
  cfg.n_layers = 3;
  cfg.width = 12;
  TrainConfig tc;
  tc.max_epochs = 12;
  tc.patience = 12;

  ParamStore ps1, ps2;
  RngStream i1(112), i2(112);
  NormalizingFlow f1 = NormalizingFlow::build(ps1, "f", cfg, i1);
  NormalizingFlow f2 = NormalizingFlow::build(ps2, "f", cfg, i2);
  RngStream t1(113), t2(113);
  TrainResult r1 = fit_mle(f1, ps1, data, Tensor{}, {}, tc, t1);
  TrainResult r2 = fit_mle(f2, ps2, data, Tensor{}, std::vector<double>(static_cast<std::size_t>(n), 1.0), tc, t2);

  REQUIRE(r1.train_loss.size() == r2.train_loss.size());
  for (std::size_t e = 0; e < r1.train_loss.size(); ++e) CHECK(r1.train_loss[e] == r2.train_loss[e]);
  const auto v1 = ps1.flatten(), v2 = ps2.flatten();
  for (std::size_t i = 0; i < v1.size(); ++i) CHECK(v1[i] == v2[i]);
}

TEST_CASE("sigmoid-mixture flow separates a two-component mixture") {
  RngStream gen(121);
  const std::int64_t n = 20000;
  Tensor data = Tensor::zeros({n, 1});
  for (auto& x : data.v) {
    const double mu = gen.uniform() < 0.5 ? -2.0 : 2.0;
    x = mu + 0.5 * gen.gaussian();
  }

  FlowConfig cfg;
  cfg.dim = 1;
  cfg.ctx_dim = 0;
  cfg.n_layers = 3;
  cfg.kind = ArKind::SigmoidMixture;
  cfg.K = 8;
  cfg.width = 16;
  ParamStore ps;
  RngStream init(122);
  NormalizingFlow flow = NormalizingFlow::build(ps, "f", cfg, init);

  TrainConfig tc;
  tc.max_epochs = 150;
  tc.patience = 20;
  tc.adam.lr = 3e-3;
  RngStream train(123);
  fit_mle(flow, ps, data, Tensor{}, {}, tc, train);

  const double at_neg = flow.log_prob_one(ps, {-2.0}, {});
  const double at_pos = flow.log_prob_one(ps, {2.0}, {});
  const double at_mid = flow.log_prob_one(ps, {0.0}, {});
  CHECK(at_neg - at_mid >= 2.0);
  CHECK(at_pos - at_mid >= 2.0);
}

TEST_CASE("4-layer flow matches a KDE reference on a banana density") {
  RngStream gen(131);
  const std::int64_t n = 50000;
  const std::int64_t n_held = 5000;
  auto draw = [&](Tensor& t, std::int64_t rows) {
    for (std::int64_t i = 0; i < rows; ++i) {
      const double x1 = gen.gaussian();
      const double x2 = 0.25 * x1 * x1 + 0.5 * gen.gaussian();
      t.at(i, 0) = x1;
      t.at(i, 1) = x2;
    }
  };
  Tensor data = Tensor::zeros({n, 2});
  draw(data, n);
  Tensor heldout = Tensor::zeros({n_held, 2});
  draw(heldout, n_held);

  FlowConfig cfg;
  cfg.dim = 2;
  cfg.ctx_dim = 0;
  cfg.n_layers = 7;  // 4 autoregressive layers with reversals between
  cfg.width = 32;
  ParamStore ps;
  RngStream init(132);
  NormalizingFlow flow = NormalizingFlow::build(ps, "f", cfg, init);

  TrainConfig tc;
  tc.max_epochs = 80;
  tc.patience = 10;
  RngStream train(133);
  fit_mle(flow, ps, data, Tensor{}, {}, tc, train);
  const double flow_nll = held_out_nll(flow, ps, heldout);

  std::vector<std::vector<double>> ref_pts;
  for (std::int64_t i = 0; i < 20000; ++i) ref_pts.push_back({data.at(i, 0), data.at(i, 1)});
  oracle::Kde kde = oracle::Kde::fit(ref_pts);
  double kde_nll = 0.0;
  for (std::int64_t i = 0; i < n_held; ++i) kde_nll -= kde.log_pdf({heldout.at(i, 0), heldout.at(i, 1)});
  kde_nll /= static_cast<double>(n_held);

  MESSAGE("flow NLL ", flow_nll, " vs KDE NLL ", kde_nll);
  CHECK(std::fabs(flow_nll - kde_nll) < 0.1);
}
