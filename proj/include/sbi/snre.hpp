#pragma once

#include "sbi/snpe.hpp"

namespace sbi {

// Feed-forward classifier over (embedded panel, theta) producing the logit
// d(x, theta); exp(d) estimates the joint/marginal density ratio.
class RatioClassifier {
 public:
  RatioClassifier() = default;
  RatioClassifier(ParamStore& ps, const std::string& prefix, std::int64_t in_dim, std::int64_t width, int depth,
                  double slope, RngStream& init_rng);

  Var forward(Tape& t, ParamStore& ps, Var features) const;  // [B,in] -> [B,1]
  void describe(KvFile& kv, const std::string& prefix) const;
  static RatioClassifier from_descriptor(ParamStore& ps, const KvFile& kv, const std::string& prefix);

 private:
  std::int64_t in_dim_ = 0, width_ = 64;
  int depth_ = 3;
  double slope_ = 0.01;
  std::string prefix_;
  std::vector<std::string> w_names_, b_names_;
};

// Softmax cross-entropy over K-column logit rows whose first column is the
// true pairing.
Var contrastive_loss_from_logits(Tape& t, Var logits);

// Optimal-discriminator algebra: a density ratio r maps to r / (1 + r).
double ratio_to_discriminator(double r);

struct SnreConfig {
  std::int64_t rounds = 2;
  std::int64_t sims_per_round = 5000;
  std::int64_t min_round_size = 16;
  int contrast_K = 10;
  std::int64_t clf_width = 64;
  int clf_depth = 3;
  EstimatorArch arch;  // embedding knobs reused
  TrainConfig train;
  MhConfig mh;  // proposal + posterior sampling chains
  double max_failure_frac = 0.2;
  int threads = 0;
};

// Classifier + prior bound to the observed panel: an unnormalized posterior
// log density d(X, theta) + log p(theta), sampled with MH.
class RatioPosterior {
 public:
  double logit(const std::vector<double>& theta) const;
  double log_unnorm(const std::vector<double>& theta) const;
  Tensor sample(std::int64_t n, const MhConfig& cfg, RngStream& rng) const;
  const UniformBoxPrior& prior() const { return prior_; }
  int round() const { return round_; }

  void save(const std::string& path) const;
  static RatioPosterior load(const std::string& path);

  ParamStore ps;
  RatioClassifier clf;
  EmbeddingNet embed;
  AffineStandardizer theta_std;
  PanelStandardizer panel_std;
  UniformBoxPrior prior_;
  SeriesPanel observed;
  Tensor observed_ctx;
  int round_ = 0;

  void bind_observed(const SeriesPanel& X);
};

struct SnreResult {
  RatioPosterior posterior;
  RoundDataset data;
  std::vector<RoundReport> rounds;
  KvFile manifest;
};

SnreResult run_snre(const SimulatorFn& sim, const UniformBoxPrior& prior, const SeriesPanel& X, const SnreConfig& cfg,
                    std::uint64_t seed);

}  // namespace sbi
