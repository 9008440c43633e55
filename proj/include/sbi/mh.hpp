#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sbi/kvfile.hpp"
#include "sbi/lgssm.hpp"
#include "sbi/prior.hpp"

namespace sbi {

// Unnormalized log target; returns kLogZero where the density vanishes.
using LogTarget = std::function<double(const std::vector<double>&)>;

struct Chain {
  Tensor draws;                    // n x dim
  std::vector<double> log_density;  // target value at each draw
  std::int64_t accepted = 0;
  std::vector<double> step_scale_history;  // per-dimension scales, flattened per adaptation event

  std::int64_t length() const { return draws.rows(); }
  double acceptance_rate() const { return static_cast<double>(accepted) / static_cast<double>(length()); }
  std::vector<double> column(std::int64_t j) const;
};

// Symmetric Gaussian random-walk Metropolis-Hastings with fixed per-dimension
// proposal scales; accepts with min(1, exp(delta log)). Chain length == steps.
Chain mh_sample(const LogTarget& log_target, const std::vector<double>& init, std::int64_t steps,
                const std::vector<double>& step_scales, RngStream& rng);
Chain mh_sample(const LogTarget& log_target, const std::vector<double>& init, std::int64_t steps, double step_scale,
                RngStream& rng);

struct MhConfig {
  std::int64_t steps = 50000;
  std::int64_t burn_in = 10000;
  double step_scale = 0.25;     // initial proposal sd in units of prior width
  double target_accept = 0.3;
  std::int64_t adapt_interval = 50;
  double min_accept = 0.01;     // below this after adaptation the run aborts
};

// Builds an SSM at each proposed parameter point; a builder failure counts as
// zero density there.
using SsmBuilder = std::function<LinearGaussianSSM(const std::vector<double>&)>;

// MH over log prior + kalman_loglik. Proposal scales start at prior width x
// step_scale per dimension and adapt toward the target acceptance during
// burn-in; the returned chain holds only post-burn-in draws.
Chain mh_posterior(const SsmBuilder& builder, const UniformBoxPrior& prior, const SeriesPanel& panel,
                   const MhConfig& cfg, RngStream& rng);

// Adaptive MH against an arbitrary target restricted to the prior box.
Chain mh_box_target(const LogTarget& log_target, const UniformBoxPrior& prior, const MhConfig& cfg, RngStream& rng);

// Chain CSV (draws with named header) plus a key-value sidecar manifest.
void export_chain(const Chain& chain, const std::vector<std::string>& names, const std::string& csv_path,
                  const std::string& manifest_path, KvFile extra);

}  // namespace sbi
