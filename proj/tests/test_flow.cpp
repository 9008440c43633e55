#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sbi/fit.hpp"
#include "sbi/flow.hpp"
#include "sbi/stats.hpp"

using namespace sbi;

namespace {

constexpr double kLn2Pi = 1.8378770664093454835606594728112;

double sraw_for(double s, double clamp = 7.0) { return clamp * std::atanh(s / clamp); }

struct TestFlow {
  ParamStore ps;
  NormalizingFlow flow;
};

TestFlow make_flow(FlowConfig cfg, std::uint64_t seed, double bias_sd = 0.0) {
  TestFlow tf;
  RngStream rng(seed);
  tf.flow = NormalizingFlow::build(tf.ps, "f", cfg, rng);
  if (bias_sd > 0.0) {
    // Randomize the conditioner output biases so layers act nontrivially.
    for (const auto& name : tf.ps.names())
      if (name.size() >= 5 && name.substr(name.size() - 5) == ".bout")
        for (auto& x : tf.ps.value(name).v) x = bias_sd * rng.gaussian();
  }
  return tf;
}

Tensor forward_all(const NormalizingFlow& flow, ParamStore& ps, const Tensor& y, const Tensor& ctx, double* logdet = nullptr) {
  Tape t(false);
  Var h = t.input(y);
  Var c = flow.ctx_dim() > 0 ? t.input(ctx) : Var{};
  double ld = 0.0;
  for (const auto& layer : flow.layers()) {
    auto f = layer->forward(t, ps, h, c);
    h = f.z;
    ld += t.val(f.logdet).v[0];
  }
  if (logdet) *logdet = ld;
  return t.val(h);
}

}  // namespace

TEST_CASE("identity-initialized affine layer is the identity with zero logdet") {
  TestFlow tf;
  RngStream rng(1);
  tf.flow = NormalizingFlow::identity(tf.ps, "f", 3, 2, 1, rng);
  RngStream data(2);
  Tensor y = Tensor::randn({5, 3}, data);
  Tensor ctx = Tensor::randn({5, 2}, data);
  Tape t(false);
  auto f = tf.flow.layers()[0]->forward(t, tf.ps, t.input(y), t.input(ctx));
  for (std::size_t i = 0; i < y.v.size(); ++i) CHECK(t.val(f.z).v[i] == y.v[i]);
  for (std::int64_t b = 0; b < 5; ++b) CHECK(t.val(f.logdet).v[static_cast<std::size_t>(b)] == 0.0);
}

TEST_CASE("forced 1-D affine layer: shift 3, log-scale ln 2") {
  FlowConfig cfg;
  cfg.dim = 1;
  cfg.ctx_dim = 0;
  cfg.n_layers = 1;
  cfg.link = false;
  cfg.width = 8;
  TestFlow tf = make_flow(cfg, 3);
  tf.ps.value("f.L0.bout").v = {3.0, sraw_for(std::log(2.0))};

  Tape t(false);
  auto f = tf.flow.layers()[0]->forward(t, tf.ps, t.input(Tensor::from({1, 1}, {1.0})), Var{});
  CHECK(t.val(f.z).v[0] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(t.val(f.logdet).v[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Tensor y = tf.flow.layers()[0]->inverse(tf.ps, Tensor::from({1, 1}, {5.0}), Tensor{});
  CHECK(y.v[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("affine layer logdet matches finite-difference Jacobian, dims 1-6") {
  for (std::int64_t dim = 1; dim <= 6; ++dim) {
    FlowConfig cfg;
    cfg.dim = dim;
    cfg.ctx_dim = 2;
    cfg.n_layers = 1;
    cfg.width = 16;
    cfg.link = true;
    TestFlow tf = make_flow(cfg, 40 + static_cast<std::uint64_t>(dim), 0.4);
    RngStream data(140 + static_cast<std::uint64_t>(dim));
    Tensor ctx = Tensor::randn({1, 2}, data);
    const Bijector& layer = *tf.flow.layers()[0];

    // keep clear of the link kink so the numerical Jacobian is trustworthy
    Tensor y;
    for (int attempt = 0; attempt < 200; ++attempt) {
      y = Tensor::randn({1, dim}, data);
      Tape t(false);
      auto f = layer.forward(t, tf.ps, t.input(y), t.input(ctx));
      bool clear = true;
      for (std::int64_t d = 0; d < dim; ++d) {
        const double z = t.val(f.z).at(0, d);
        const double a = z >= 0.0 ? z : z / cfg.link_slope;
        clear = clear && std::fabs(a) > 1e-3;
      }
      if (clear) break;
    }

    Tape t(false);
    auto f = layer.forward(t, tf.ps, t.input(y), t.input(ctx));
    const double analytic = t.val(f.logdet).v[0];

    auto fwd = [&](const std::vector<double>& yv) {
      Tape tt(false);
      auto ff = layer.forward(tt, tf.ps, tt.input(Tensor::from({1, dim}, yv)), tt.input(ctx));
      return tt.val(ff.z).v;
    };
    auto J = oracle::fd_jacobian(fwd, y.v, 1e-6);
    const double numeric = oracle::log_abs_det(J);
    CHECK(std::fabs(analytic - numeric) <= 1e-4 * std::max(1.0, std::fabs(numeric)));
  }
}

TEST_CASE("sigmoid-mixture layer logdet matches finite-difference Jacobian") {
  for (std::int64_t dim = 1; dim <= 4; ++dim) {
    FlowConfig cfg;
    cfg.dim = dim;
    cfg.ctx_dim = 2;
    cfg.n_layers = 1;
    cfg.kind = ArKind::SigmoidMixture;
    cfg.K = 5;
    cfg.width = 16;
    TestFlow tf = make_flow(cfg, 60 + static_cast<std::uint64_t>(dim), 0.5);
    RngStream data(160 + static_cast<std::uint64_t>(dim));
    Tensor ctx = Tensor::randn({1, 2}, data);
    Tensor y = Tensor::randn({1, dim}, data);
    const Bijector& layer = *tf.flow.layers()[0];

    Tape t(false);
    auto f = layer.forward(t, tf.ps, t.input(y), t.input(ctx));
    const double analytic = t.val(f.logdet).v[0];
    auto fwd = [&](const std::vector<double>& yv) {
      Tape tt(false);
      auto ff = layer.forward(tt, tf.ps, tt.input(Tensor::from({1, dim}, yv)), tt.input(ctx));
      return tt.val(ff.z).v;
    };
    auto J = oracle::fd_jacobian(fwd, y.v, 1e-6);
    const double numeric = oracle::log_abs_det(J);
    CHECK(std::fabs(analytic - numeric) <= 1e-4 * std::max(1.0, std::fabs(numeric)));
  }
}

TEST_CASE("permutation layer: zero logdet, exact inverse") {
  ParamStore ps;
  PermutationLayer perm({2, 0, 1});
  RngStream rng(5);
  Tensor y = Tensor::randn({4, 3}, rng);
  Tape t(false);
  auto f = perm.forward(t, ps, t.input(y), Var{});
  for (std::int64_t b = 0; b < 4; ++b) {
    CHECK(t.val(f.z).at(b, 0) == y.at(b, 2));
    CHECK(t.val(f.logdet).v[static_cast<std::size_t>(b)] == 0.0);
  }
  Tensor back = perm.inverse(ps, t.val(f.z), Tensor{});
  for (std::size_t i = 0; i < y.v.size(); ++i) CHECK(back.v[i] == y.v[i]);
  CHECK_THROWS_AS(PermutationLayer({0, 0, 1}), ContractViolation);
}

TEST_CASE("random affine layer round-trips 100 draws below 1e-5") {
  FlowConfig cfg;
  cfg.dim = 4;
  cfg.ctx_dim = 3;
  cfg.n_layers = 1;
  cfg.width = 16;
  cfg.link = true;
  TestFlow tf = make_flow(cfg, 7, 0.5);
  RngStream data(8);
  Tensor ctx = Tensor::randn({100, 3}, data);
  Tensor z = Tensor::randn({100, 4}, data);
  const Bijector& layer = *tf.flow.layers()[0];
  Tensor y = layer.inverse(tf.ps, z, ctx);
  Tape t(false);
  auto f = layer.forward(t, tf.ps, t.input(y), t.input(ctx));
  for (std::size_t i = 0; i < z.v.size(); ++i) CHECK(std::fabs(t.val(f.z).v[i] - z.v[i]) < 1e-5);
}

TEST_CASE("flow round-trip through 8-layer stacks, dims 1-6") {
  for (std::int64_t dim = 1; dim <= 6; ++dim) {
    FlowConfig cfg;
    cfg.dim = dim;
    cfg.ctx_dim = 2;
    cfg.n_layers = 8;
    cfg.width = 16;
    cfg.link = true;
    TestFlow tf = make_flow(cfg, 300 + static_cast<std::uint64_t>(dim), 0.4);
    RngStream data(400 + static_cast<std::uint64_t>(dim));
    Tensor ctx = Tensor::randn({64, 2}, data);
    Tensor z0 = Tensor::randn({64, dim}, data);
    Tensor cur = z0;
    const auto& layers = tf.flow.layers();
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) cur = (*it)->inverse(tf.ps, cur, ctx);
    double ld = 0.0;
    Tensor z1 = forward_all(tf.flow, tf.ps, cur, ctx, &ld);
    for (std::size_t i = 0; i < z0.v.size(); ++i) CHECK(std::fabs(z1.v[i] - z0.v[i]) < 1e-5);
  }
}

TEST_CASE("sigmoid-mixture stack round-trips below 1e-4") {
  FlowConfig cfg;
  cfg.dim = 3;
  cfg.ctx_dim = 0;
  cfg.n_layers = 5;
  cfg.kind = ArKind::SigmoidMixture;
  cfg.K = 4;
  cfg.width = 12;
  TestFlow tf = make_flow(cfg, 17, 0.5);
  RngStream data(18);
  Tensor z0 = Tensor::randn({50, 3}, data);
  for (auto& x : z0.v) x *= 0.8;
  Tensor cur = z0;
  const auto& layers = tf.flow.layers();
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) cur = (*it)->inverse(tf.ps, cur, Tensor{});
  Tensor z1 = forward_all(tf.flow, tf.ps, cur, Tensor{});
  for (std::size_t i = 0; i < z0.v.size(); ++i) CHECK(std::fabs(z1.v[i] - z0.v[i]) < 1e-4);
}

TEST_CASE("autoregressive property: earlier coordinates blind to later ones") {
  for (int kind = 0; kind < 2; ++kind) {
    FlowConfig cfg;
    cfg.dim = 4;
    cfg.ctx_dim = 2;
    cfg.n_layers = 1;
    cfg.kind = kind == 0 ? ArKind::Affine : ArKind::SigmoidMixture;
    cfg.K = 3;
    cfg.width = 16;
    cfg.link = true;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      TestFlow tf = make_flow(cfg, 500 + seed * 2 + static_cast<std::uint64_t>(kind), 0.5);
      RngStream data(600 + seed);
      Tensor ctx = Tensor::randn({1, 2}, data);
      Tensor y = Tensor::randn({1, 4}, data);
      const Bijector& layer = *tf.flow.layers()[0];
      Tape t0(false);
      const Tensor z_ref = t0.val(layer.forward(t0, tf.ps, t0.input(y), t0.input(ctx)).z);
      for (std::int64_t j = 0; j < 4; ++j) {
        Tensor yp = y;
        yp.at(0, j) += 0.731;
        Tape t1(false);
        const Tensor z_new = t1.val(layer.forward(t1, tf.ps, t1.input(yp), t1.input(ctx)).z);
        for (std::int64_t d = 0; d < j; ++d) CHECK(z_new.at(0, d) == z_ref.at(0, d));
      }
    }
  }
}

TEST_CASE("sigmoid-mixture coordinate maps are strictly increasing") {
  FlowConfig cfg;
  cfg.dim = 3;
  cfg.ctx_dim = 1;
  cfg.n_layers = 1;
  cfg.kind = ArKind::SigmoidMixture;
  cfg.K = 8;
  cfg.width = 12;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    TestFlow tf = make_flow(cfg, 700 + seed, 0.8);
    RngStream data(800 + seed);
    Tensor ctx = Tensor::randn({1, 1}, data);
    Tensor y = Tensor::randn({1, 3}, data);
    const Bijector& layer = *tf.flow.layers()[0];
    for (std::int64_t d = 0; d < 3; ++d) {
      double prev = -1e308;
      for (int i = 0; i < 1000; ++i) {
        Tensor yy = y;
        yy.at(0, d) = -6.0 + 12.0 * i / 999.0;
        Tape t(false);
        const double zd = t.val(layer.forward(t, tf.ps, t.input(yy), t.input(ctx)).z).at(0, d);
        CHECK(zd > prev);
        prev = zd;
      }
    }
  }
}

TEST_CASE("identity flow log density at the origin is -ln(2pi)") {
  TestFlow tf;
  RngStream rng(9);
  tf.flow = NormalizingFlow::identity(tf.ps, "f", 2, 3, 5, rng);
  const double lp = tf.flow.log_prob_one(tf.ps, {0.0, 0.0}, {0.4, -1.0, 2.2});
  CHECK(lp == doctest::Approx(-kLn2Pi).epsilon(1e-12));
}

TEST_CASE("log density obeys the affine scaling law") {
  FlowConfig cfg;
  cfg.dim = 2;
  cfg.ctx_dim = 0;
  cfg.n_layers = 1;
  cfg.link = false;
  cfg.width = 8;
  TestFlow tf = make_flow(cfg, 10);
  // generative map scales base draws by 2 per coordinate: forward halves
  const double sraw = sraw_for(-std::log(2.0));
  tf.ps.value("f.L0.bout").v = {0.0, 0.0, sraw, sraw};
  RngStream data(11);
  for (int i = 0; i < 10; ++i) {
    std::vector<double> th = {data.gaussian() * 2.0, data.gaussian() * 2.0};
    const double lp = tf.flow.log_prob_one(tf.ps, th, {});
    const double expected = -kLn2Pi - 0.5 * (th[0] * th[0] + th[1] * th[1]) / 4.0 - 2.0 * std::log(2.0);
    CHECK(lp == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("1-D and 2-D flow densities integrate to one") {
  {
    FlowConfig cfg;
    cfg.dim = 1;
    cfg.ctx_dim = 0;
    cfg.n_layers = 3;
    cfg.width = 12;
    cfg.link = true;
    cfg.link_slope = 0.5;  // fresh random stacks at slope 0.01 hide mass in sub-grid spikes
    TestFlow tf = make_flow(cfg, 12, 0.6);
    RngStream rng(13);
    Tensor draws = tf.flow.sample(tf.ps, 2000, Tensor{}, rng);
    double lo = 1e308, hi = -1e308;
    for (double v : draws.v) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double pad = 0.5 * (hi - lo) + 1.0;
    auto pdf = [&](double x) { return std::exp(tf.flow.log_prob_one(tf.ps, {x}, {})); };
    const double mass = oracle::simpson(pdf, lo - pad, hi + pad, 4001);
    CHECK(std::fabs(mass - 1.0) < 0.02);
  }
  {
    FlowConfig cfg;
    cfg.dim = 2;
    cfg.ctx_dim = 0;
    cfg.n_layers = 3;
    cfg.width = 12;
    cfg.link = true;
    cfg.link_slope = 0.5;
    TestFlow tf = make_flow(cfg, 14, 0.5);
    RngStream rng(15);
    Tensor draws = tf.flow.sample(tf.ps, 2000, Tensor{}, rng);
    double lo[2] = {1e308, 1e308}, hi[2] = {-1e308, -1e308};
    for (std::int64_t i = 0; i < draws.rows(); ++i)
      for (int d = 0; d < 2; ++d) {
        lo[d] = std::min(lo[d], draws.at(i, d));
        hi[d] = std::max(hi[d], draws.at(i, d));
      }
    const int n = 401;
    double pad[2] = {0.5 * (hi[0] - lo[0]) + 1.0, 0.5 * (hi[1] - lo[1]) + 1.0};
    const double a0 = lo[0] - pad[0], b0 = hi[0] + pad[0];
    const double a1 = lo[1] - pad[1], b1 = hi[1] + pad[1];
    const double h0 = (b0 - a0) / (n - 1), h1 = (b1 - a1) / (n - 1);
    Tensor grid = Tensor::zeros({n * n, 2});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        grid.at(i * n + j, 0) = a0 + i * h0;
        grid.at(i * n + j, 1) = a1 + j * h1;
      }
    auto lps = tf.flow.log_prob_batch(tf.ps, grid, Tensor{});
    // trapezoid weights
    double mass = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double w = 1.0;
        if (i == 0 || i == n - 1) w *= 0.5;
        if (j == 0 || j == n - 1) w *= 0.5;
        mass += w * std::exp(lps[static_cast<std::size_t>(i * n + j)]);
      }
    mass *= h0 * h1;
    CHECK(std::fabs(mass - 1.0) < 0.02);
  }
}

TEST_CASE("identity flow samples have standard-normal moments") {
  TestFlow tf;
  RngStream rng(20);
  tf.flow = NormalizingFlow::identity(tf.ps, "f", 2, 0, 5, rng);
  RngStream srng(21);
  const std::int64_t n = 100000;
  Tensor s = tf.flow.sample(tf.ps, n, Tensor{}, srng);
  const double bound_mean = 3.0 / std::sqrt(static_cast<double>(n));
  const double bound_var = 3.0 * std::sqrt(2.0 / static_cast<double>(n));
  for (int d = 0; d < 2; ++d) {
    std::vector<double> col;
    for (std::int64_t i = 0; i < n; ++i) col.push_back(s.at(i, d));
    CHECK(std::fabs(mean_of(col)) < bound_mean);
    CHECK(std::fabs(sd_of(col) * sd_of(col) - 1.0) < bound_var);
  }
  double cross = 0.0;
  for (std::int64_t i = 0; i < n; ++i) cross += s.at(i, 0) * s.at(i, 1);
  CHECK(std::fabs(cross / static_cast<double>(n)) < bound_mean);
}

TEST_CASE("shift flow samples center on the shift") {
  FlowConfig cfg;
  cfg.dim = 1;
  cfg.ctx_dim = 0;
  cfg.n_layers = 1;
  cfg.link = false;
  cfg.width = 8;
  TestFlow tf = make_flow(cfg, 22);
  tf.ps.value("f.L0.bout").v = {-5.0, 0.0};  // forward z = y - 5, so draws are z + 5
  RngStream rng(23);
  const std::int64_t n = 100000;
  Tensor s = tf.flow.sample(tf.ps, n, Tensor{}, rng);
  CHECK(std::fabs(mean_of(s.v) - 5.0) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sample histogram agrees with exp(log_prob)") {
  FlowConfig cfg;
  cfg.dim = 1;
  cfg.ctx_dim = 0;
  cfg.n_layers = 3;
  cfg.width = 12;
  cfg.link = true;
  cfg.link_slope = 0.5;
  TestFlow tf = make_flow(cfg, 24, 0.5);
  RngStream rng(25);
  const std::int64_t n = 100000;
  Tensor s = tf.flow.sample(tf.ps, n, Tensor{}, rng);
  std::vector<double> draws = s.v;
  const double lo = quantile_of(draws, 0.002), hi = quantile_of(draws, 0.998);
  const int bins = 50;
  Histogram h = histogram(draws, lo, hi, bins);
  double inside = 0.0;
  for (double c : h.counts) inside += c;
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    auto pdf = [&](double x) { return std::exp(tf.flow.log_prob_one(tf.ps, {x}, {})); };
    const double p = oracle::simpson(pdf, h.edges[static_cast<std::size_t>(b)], h.edges[static_cast<std::size_t>(b) + 1], 21);
    const double expct = static_cast<double>(n) * p;
    const double obs = h.counts[static_cast<std::size_t>(b)];
    chi2 += (obs - expct) * (obs - expct) / expct;
  }
  (void)inside;
  CHECK(chi2_p_value(chi2, bins - 1) > 0.01);
}

TEST_CASE("checkpoint descriptor reproduces log_prob bit-exactly") {
  FlowConfig cfg;
  cfg.dim = 3;
  cfg.ctx_dim = 2;
  cfg.n_layers = 5;
  cfg.width = 16;
  TestFlow tf = make_flow(cfg, 26, 0.5);
  KvFile kv;
  tf.flow.describe(kv, "flow");
  std::ostringstream ss;
  tf.ps.write_text(ss);

  std::istringstream in(ss.str());
  ParamStore ps2 = ParamStore::read_text(in);
  KvFile kv2 = KvFile::parse(kv.to_string());
  NormalizingFlow f2 = NormalizingFlow::from_descriptor(ps2, kv2, "flow");

  RngStream data(27);
  for (int i = 0; i < 10; ++i) {
    std::vector<double> th = {data.gaussian(), data.gaussian(), data.gaussian()};
    std::vector<double> cx = {data.gaussian(), data.gaussian()};
    CHECK(tf.flow.log_prob_one(tf.ps, th, cx) == f2.log_prob_one(ps2, th, cx));
  }
}

TEST_CASE("flow log_prob gradient matches finite differences end to end") {
  FlowConfig cfg;
  cfg.dim = 2;
  cfg.ctx_dim = 2;
  cfg.n_layers = 3;
  cfg.width = 8;
  cfg.link = true;
  TestFlow tf = make_flow(cfg, 28, 0.3);
  RngStream data(29);
  Tensor y = Tensor::randn({6, 2}, data);
  Tensor ctx = Tensor::randn({6, 2}, data);
  auto loss_of = [&](Tape& t) {
    Var lp = tf.flow.log_prob(t, tf.ps, t.input(y), t.input(ctx));
    return t.scale(t.mean(lp), -1.0);
  };
  tf.ps.zero_grad();
  {
    Tape t;
    Var l = loss_of(t);
    t.backward(l);
  }
  auto fd = finite_diff_grad(tf.ps, [&]() {
    Tape t(false);
    return t.scalar(loss_of(t));
  });
  for (const auto& name : tf.ps.names()) {
    const Tensor& g = tf.ps.grad(name);
    const Tensor& f = fd.at(name);
    for (std::size_t i = 0; i < g.v.size(); ++i) {
      const double denom = std::max({std::fabs(g.v[i]), std::fabs(f.v[i]), 1e-7});
      CHECK(std::fabs(g.v[i] - f.v[i]) / denom < 1e-4);
    }
  }
}
