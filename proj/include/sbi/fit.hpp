#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sbi/adam.hpp"
#include "sbi/flow.hpp"
#include "sbi/tape.hpp"

namespace sbi {

struct TrainConfig {
  AdamConfig adam;
  std::int64_t batch = 256;
  int max_epochs = 500;
  int patience = 20;       // epochs without held-out improvement
  double val_frac = 0.1;
  std::int64_t min_batch = 2;  // trailing partial batches below this are skipped
};

struct TrainResult {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;    // per epoch (train loss stands in when no split)
  double best_val = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
  bool aborted_nan = false;  // stopped on a non-finite loss; best checkpoint restored
};

// Builds the scalar loss for the given item indices. Must not call backward.
using BatchLossFn = std::function<Var(Tape&, const std::vector<std::int64_t>&)>;

// Minibatch Adam with a held-out split, patience-based early stopping and
// best-checkpoint restore. Deterministic given the stream.
TrainResult train_loop(ParamStore& ps, std::int64_t n_items, const BatchLossFn& loss_fn, const TrainConfig& cfg,
                       RngStream& rng);

// Maximum likelihood fit of a flow on (theta, context) pairs with optional
// nonnegative per-sample weights. The loss is the weight-normalized negative
// log-likelihood, so all-ones weights reproduce the unweighted trajectory
// exactly.
TrainResult fit_mle(NormalizingFlow& flow, ParamStore& ps, const Tensor& thetas, const Tensor& ctxs,
                    const std::vector<double>& weights, const TrainConfig& cfg, RngStream& rng);

}  // namespace sbi
