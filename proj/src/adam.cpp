#include "sbi/adam.hpp"

#include <cmath>

#include "sbi/common.hpp"

namespace sbi {

AdamState::AdamState(const ParamStore& ps) {
  for (const auto& name : ps.names()) {
    m_[name] = Tensor::zeros(ps.value(name).shape);
    v_[name] = Tensor::zeros(ps.value(name).shape);
  }
}

void AdamState::update(ParamStore& ps, const AdamConfig& cfg) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
  for (const auto& name : ps.names()) {
    Tensor& g = ps.grad(name);
    if (!g.all_finite()) throw NumericError("adam: non-finite gradient in block '" + name + "' at step " + std::to_string(step_));
    Tensor& val = ps.value(name);
    Tensor& m = m_.at(name);
    Tensor& v = v_.at(name);
    for (std::size_t i = 0; i < val.v.size(); ++i) {
      m.v[i] = cfg.beta1 * m.v[i] + (1.0 - cfg.beta1) * g.v[i];
      v.v[i] = cfg.beta2 * v.v[i] + (1.0 - cfg.beta2) * g.v[i] * g.v[i];
      const double mhat = m.v[i] / bc1;
      const double vhat = v.v[i] / bc2;
      val.v[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

std::map<std::string, Tensor> finite_diff_grad(ParamStore& ps, const std::function<double()>& f, double eps) {
  if (!(eps > 0.0)) throw ContractViolation("finite_diff_grad: eps must be positive");
  std::map<std::string, Tensor> out;
  for (const auto& name : ps.names()) {
    Tensor& val = ps.value(name);
    Tensor g = Tensor::zeros(val.shape);
    for (std::size_t i = 0; i < val.v.size(); ++i) {
      const double keep = val.v[i];
      val.v[i] = keep + eps;
      const double fp = f();
      val.v[i] = keep - eps;
      const double fm = f();
      val.v[i] = keep;
      g.v[i] = (fp - fm) / (2.0 * eps);
    }
    out[name] = std::move(g);
  }
  return out;
}

}  // namespace sbi
