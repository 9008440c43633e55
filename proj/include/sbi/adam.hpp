#pragma once

#include <functional>
#include <map>
#include <string>

#include "sbi/param_store.hpp"

namespace sbi {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second-moment state per block, same layout as the store.
class AdamState {
 public:
  explicit AdamState(const ParamStore& ps);
  std::int64_t step() const { return step_; }

  // One update from the gradients currently in `ps`. Throws NumericError on a
  // non-finite gradient, naming the offending block.
  void update(ParamStore& ps, const AdamConfig& cfg);

 private:
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
  std::int64_t step_ = 0;
};

inline void adam_step(ParamStore& ps, AdamState& state, const AdamConfig& cfg) { state.update(ps, cfg); }

// Central-difference gradient of `f` with respect to every block of `ps`,
// written into a fresh store-layout map. `f` must be a pure function of the
// parameter values. This is the oracle `backward` is checked against.
std::map<std::string, Tensor> finite_diff_grad(ParamStore& ps, const std::function<double()>& f, double eps = 1e-5);

}  // namespace sbi
