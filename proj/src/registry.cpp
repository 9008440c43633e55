#include "sbi/registry.hpp"

#include <map>

#include "sbi/cashflow.hpp"
#include "sbi/rbc.hpp"

namespace sbi {

namespace {

ModelSpec make_rbc() {
  ModelSpec m;
  m.name = "rbc";
  m.param_names = {"alpha", "beta", "delta", "rho"};
  m.default_theta = {0.36, 0.96, 0.1, 0.9};  // sigma_eps fixed at 0.02, gamma at 2
  m.prior = UniformBoxPrior::make(m.param_names, {0.2, 0.9, 0.02, 0.5}, {0.6, 0.999, 0.2, 0.99});
  m.observables = {"C", "I", "Z"};
  m.default_T = 200;
  m.burn_in = 100;
  m.simulate = [](const std::vector<double>& th, std::int64_t T, std::uint64_t seed) {
    RBCParams p;
    p.alpha = th[0];
    p.beta = th[1];
    p.delta = th[2];
    p.rho = th[3];
    return simulate_rbc(p, T, 100, seed);
  };
  return m;
}

ModelSpec make_cashflow() {
  ModelSpec m;
  m.name = "cashflow";
  m.param_names = {"alpha", "delta", "rho", "sigma"};
  m.default_theta = {0.5, 0.1, 0.75, 0.15};  // r fixed at 0.05, beta = 1/(1+r)
  m.prior = UniformBoxPrior::make(m.param_names, {0.2, 0.02, 0.5, 0.05}, {0.6, 0.2, 0.99, 1.0});
  m.observables = {"K"};
  m.default_T = 200;
  m.burn_in = 100;
  m.simulate = [](const std::vector<double>& th, std::int64_t T, std::uint64_t seed) {
    CashflowParams p;
    p.alpha = th[0];
    p.delta = th[1];
    p.rho = th[2];
    p.sigma = th[3];
    return simulate_cashflow(p, T, 100, seed);
  };
  return m;
}

LinearGaussianSSM ar1_ssm(const std::vector<double>& th) {
  const double rho = th[0], sigma = th[1];
  // small fixed observation noise keeps the filter well posed at rho -> 0.99
  return LinearGaussianSSM::scalar(rho, 1.0, sigma * sigma, 0.01, 0.0, sigma * sigma / (1.0 - rho * rho));
}

ModelSpec make_lgssm_ar1() {
  ModelSpec m;
  m.name = "lgssm-ar1";
  m.param_names = {"rho", "sigma"};
  m.default_theta = {0.7, 0.3};
  m.prior = UniformBoxPrior::make(m.param_names, {0.0, 0.05}, {0.99, 1.0});
  m.observables = {"y"};
  m.default_T = 100;
  m.simulate = [](const std::vector<double>& th, std::int64_t T, std::uint64_t seed) {
    return simulate_lgssm(ar1_ssm(th), T, seed);
  };
  m.ssm_builder = ar1_ssm;
  return m;
}

ModelSpec make_gauss_mean() {
  ModelSpec m;
  m.name = "gauss-mean";
  m.param_names = {"mu"};
  m.default_theta = {1.0};
  m.prior = UniformBoxPrior::make(m.param_names, {-3.0}, {3.0});
  m.observables = {"x"};
  m.default_T = 20;
  m.simulate = [](const std::vector<double>& th, std::int64_t T, std::uint64_t seed) {
    RngStream rng(seed);
    SeriesPanel p = SeriesPanel::make(T, 1);
    for (std::int64_t t = 0; t < T; ++t) p.values.at(t, 0) = th[0] + rng.gaussian();
    return p;
  };
  m.ssm_builder = [](const std::vector<double>& th) {
    // constant latent mean observed in unit noise
    return LinearGaussianSSM::scalar(1.0, 1.0, 0.0, 1.0, th[0], 0.0);
  };
  return m;
}

ModelSpec make_flat_noise() {
  ModelSpec m;
  m.name = "flat-noise";
  m.param_names = {"a", "b"};
  m.default_theta = {0.5, 0.5};
  m.prior = UniformBoxPrior::make(m.param_names, {0.0, 0.0}, {1.0, 1.0});
  m.observables = {"x"};
  m.default_T = 20;
  m.simulate = [](const std::vector<double>&, std::int64_t T, std::uint64_t seed) {
    RngStream rng(seed);
    SeriesPanel p = SeriesPanel::make(T, 1);
    for (std::int64_t t = 0; t < T; ++t) p.values.at(t, 0) = rng.gaussian();
    return p;
  };
  return m;
}

const std::map<std::string, ModelSpec>& registry() {
  static const std::map<std::string, ModelSpec> reg = [] {
    std::map<std::string, ModelSpec> r;
    for (auto&& m : {make_rbc(), make_cashflow(), make_lgssm_ar1(), make_gauss_mean(), make_flat_noise()})
      r.emplace(m.name, std::move(m));
    return r;
  }();
  return reg;
}

}  // namespace

const ModelSpec& get_model(const std::string& name) {
  const auto& reg = registry();
  auto it = reg.find(name);
  if (it == reg.end()) {
    std::string known;
    for (const auto& [k, v] : reg) known += (known.empty() ? "" : ", ") + k;
    throw UsageError("unknown model '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

std::vector<std::string> model_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : registry()) out.push_back(k);
  return out;
}

}  // namespace sbi
