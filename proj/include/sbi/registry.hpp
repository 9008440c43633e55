#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sbi/lgssm.hpp"
#include "sbi/prior.hpp"

namespace sbi {

// A registered simulator: parameter names, documented default truth, default
// prior box, observable names and a pure simulate(theta, T, seed) function.
struct ModelSpec {
  std::string name;
  std::vector<std::string> param_names;
  std::vector<double> default_theta;
  UniformBoxPrior prior;
  std::vector<std::string> observables;
  std::int64_t default_T = 100;
  std::int64_t burn_in = 0;
  std::function<SeriesPanel(const std::vector<double>&, std::int64_t, std::uint64_t)> simulate;
  // Set only for models with a tractable linear-Gaussian representation; this
  // is what the MH+Kalman oracle path runs on.
  std::function<LinearGaussianSSM(const std::vector<double>&)> ssm_builder;
};

const ModelSpec& get_model(const std::string& name);
std::vector<std::string> model_names();

}  // namespace sbi
