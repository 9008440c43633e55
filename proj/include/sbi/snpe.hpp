#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sbi/fit.hpp"
#include "sbi/flow.hpp"
#include "sbi/mh.hpp"
#include "sbi/prior.hpp"
#include "sbi/registry.hpp"

namespace sbi {

// Pure function of (theta, seed); throws SimulationFailure when the solver
// behind it does not converge at this draw.
using SimulatorFn = std::function<SeriesPanel(const std::vector<double>&, std::uint64_t)>;

// Parameter/panel pairs accumulated across rounds; append-only.
struct RoundDataset {
  std::int64_t theta_dim = 0;
  std::int64_t panel_T = 0, panel_V = 0;
  std::vector<double> thetas;       // row-major n x theta_dim
  std::vector<double> panels;       // row-major n x (T*V), raw units
  std::vector<int> round_of;

  std::int64_t size() const { return static_cast<std::int64_t>(round_of.size()); }
  void append(const std::vector<double>& theta, const SeriesPanel& panel, int round);
  std::vector<double> theta_row(std::int64_t i) const;
};

struct EstimatorArch {
  int flow_layers = 5;
  ArKind flow_kind = ArKind::Affine;
  std::int64_t flow_width = 50;
  int flow_depth = 2;
  bool flow_link = false;
  int flow_K = 8;
  EmbedKind embed_kind = EmbedKind::Dense;
  std::int64_t embed_out = 32;
  std::vector<std::int64_t> embed_hidden = {64, 64};
  std::int64_t gru_hidden = 64;
};

struct SnpeConfig {
  std::int64_t rounds = 2;
  std::int64_t sims_per_round = 5000;
  std::int64_t min_round_size = 16;
  int atoms = 10;  // M in the atomic softmax loss
  EstimatorArch arch;
  TrainConfig train;
  double max_failure_frac = 0.2;
  int threads = 0;  // 0 -> hardware concurrency
  // Test hook for the proposal-correction property: rounds >= 2 draw from this
  // box instead of the current posterior. Must lie inside the prior.
  std::optional<UniformBoxPrior> proposal_override;
};

// Trained flow + embedding bound to an observed panel. log_prob/sample act in
// raw parameter units; sampling rejects draws outside the prior box and falls
// back to MH on the flow density when acceptance collapses.
class PosteriorEstimate {
 public:
  double log_prob(const std::vector<double>& theta) const;
  Tensor sample(std::int64_t n, RngStream& rng) const;

  const UniformBoxPrior& prior() const { return prior_; }
  int round() const { return round_; }
  double sampling_acceptance() const { return last_acceptance_; }

  void save(const std::string& path) const;
  static PosteriorEstimate load(const std::string& path);

  // wiring used by the runners
  ParamStore ps;
  NormalizingFlow flow;
  EmbeddingNet embed;
  AffineStandardizer theta_std;
  PanelStandardizer panel_std;
  UniformBoxPrior prior_;
  SeriesPanel observed;
  Tensor observed_ctx;  // 1 x ctx_dim
  int round_ = 0;

  void bind_observed(const SeriesPanel& X);

 private:
  mutable double last_acceptance_ = 1.0;
};

struct RoundReport {
  int round = 0;
  std::int64_t requested = 0, kept = 0, failed = 0;
  double train_loss = 0.0, val_loss = 0.0;
  int epochs = 0;
  double seconds = 0.0;
};

struct SnpeResult {
  PosteriorEstimate posterior;
  RoundDataset data;
  std::vector<RoundReport> rounds;
  KvFile manifest;
};

// The atomic softmax objective: scores[i][m] = log f(theta_m | x_i) - log
// p(theta_m); the loss is the mean cross-entropy of the true atom (column 0).
// With a constant in-box prior the weights cancel row-wise, which is the
// round-1 equivalence the tests pin down.
Var atomic_loss_from_parts(Tape& t, Var logf_flat, const Tensor& neg_log_prior, std::int64_t B, std::int64_t M);

// Algorithm runner; run_round advances one round so single-round behavior is
// literally the first loop iteration of run_snpe.
class SnpeRunner {
 public:
  SnpeRunner(SimulatorFn sim, UniformBoxPrior prior, SeriesPanel observed, SnpeConfig cfg, std::uint64_t seed);
  RoundReport run_round();
  SnpeResult finish();
  const PosteriorEstimate& posterior() const { return post_; }
  const RoundDataset& data() const { return data_; }

 private:
  void build_estimator();
  Tensor standardized_thetas() const;
  Tensor standardized_panels() const;

  SimulatorFn sim_;
  SnpeConfig cfg_;
  std::uint64_t seed_;
  int next_round_ = 1;
  RoundDataset data_;
  PosteriorEstimate post_;
  std::vector<RoundReport> reports_;
  bool estimator_built_ = false;
};

SnpeResult run_snpe(const SimulatorFn& sim, const UniformBoxPrior& prior, const SeriesPanel& X, const SnpeConfig& cfg,
                    std::uint64_t seed);

// Index-ordered parallel map over parameter rows; failures come back empty.
std::vector<std::optional<SeriesPanel>> simulate_map(const SimulatorFn& sim, const std::vector<std::vector<double>>& thetas,
                                                     const std::vector<std::uint64_t>& seeds, int threads);

}  // namespace sbi
