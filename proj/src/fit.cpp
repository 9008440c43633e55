#include "sbi/fit.hpp"

#include <algorithm>
#include <cmath>

namespace sbi {

namespace {

double eval_loss(const BatchLossFn& loss_fn, const std::vector<std::int64_t>& items, std::int64_t batch) {
  // Weighted by batch size so the value equals the mean over all items.
  double acc = 0.0;
  std::int64_t n = 0;
  for (std::size_t at = 0; at < items.size(); at += static_cast<std::size_t>(batch)) {
    const std::size_t m = std::min(static_cast<std::size_t>(batch), items.size() - at);
    std::vector<std::int64_t> chunk(items.begin() + static_cast<std::ptrdiff_t>(at),
                                    items.begin() + static_cast<std::ptrdiff_t>(at + m));
    Tape t(false);
    acc += static_cast<double>(m) * t.scalar(loss_fn(t, chunk));
    n += static_cast<std::int64_t>(m);
  }
  return acc / static_cast<double>(n);
}

}  // namespace

TrainResult train_loop(ParamStore& ps, std::int64_t n_items, const BatchLossFn& loss_fn, const TrainConfig& cfg,
                       RngStream& rng) {
  if (n_items < 1) throw ContractViolation("train_loop: empty dataset");
  TrainResult res;

  std::vector<std::int64_t> order(static_cast<std::size_t>(n_items));
  for (std::int64_t i = 0; i < n_items; ++i) order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(order);
  std::int64_t n_val = static_cast<std::int64_t>(std::floor(cfg.val_frac * static_cast<double>(n_items)));
  if (n_val >= n_items) n_val = n_items - 1;
  std::vector<std::int64_t> val_items(order.begin(), order.begin() + n_val);
  std::vector<std::int64_t> train_items(order.begin() + n_val, order.end());

  AdamState adam(ps);
  std::vector<double> best = ps.flatten();
  double best_val = 1e308;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(train_items);
    double ep_loss = 0.0;
    std::int64_t ep_count = 0;
    bool bad = false;
    for (std::size_t at = 0; at < train_items.size(); at += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t m = std::min(static_cast<std::size_t>(cfg.batch), train_items.size() - at);
      if (static_cast<std::int64_t>(m) < cfg.min_batch && at > 0) break;
      std::vector<std::int64_t> b(train_items.begin() + static_cast<std::ptrdiff_t>(at),
                                  train_items.begin() + static_cast<std::ptrdiff_t>(at + m));
      ps.zero_grad();
      Tape t;
      Var loss = loss_fn(t, b);
      const double lv = t.scalar(loss);
      if (!std::isfinite(lv)) {
        bad = true;
        break;
      }
      t.backward(loss);
      adam.update(ps, cfg.adam);
      ep_loss += lv * static_cast<double>(m);
      ep_count += static_cast<std::int64_t>(m);
    }
    if (bad) {
      ps.unflatten(best);
      res.aborted_nan = true;
      break;
    }
    res.train_loss.push_back(ep_loss / static_cast<double>(std::max<std::int64_t>(ep_count, 1)));
    const double vl = n_val > 0 ? eval_loss(loss_fn, val_items, cfg.batch) : res.train_loss.back();
    res.val_loss.push_back(vl);
    res.epochs_run = epoch + 1;
    if (vl < best_val - 1e-12) {
      best_val = vl;
      best = ps.flatten();
      res.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  ps.unflatten(best);
  res.best_val = best_val;
  return res;
}

TrainResult fit_mle(NormalizingFlow& flow, ParamStore& ps, const Tensor& thetas, const Tensor& ctxs,
                    const std::vector<double>& weights, const TrainConfig& cfg, RngStream& rng) {
  const std::int64_t n = thetas.rows();
  const std::int64_t D = thetas.cols();
  const std::int64_t C = flow.ctx_dim();
  if (C > 0 && ctxs.rows() != n) throw DimensionError("fit_mle: ctx rows != theta rows");
  if (!weights.empty() && static_cast<std::int64_t>(weights.size()) != n)
    throw DimensionError("fit_mle: weight count mismatch");
  for (double w : weights)
    if (w < 0.0) throw ContractViolation("fit_mle: weights must be nonnegative");

  auto loss_fn = [&](Tape& t, const std::vector<std::int64_t>& items) -> Var {
    const std::int64_t B = static_cast<std::int64_t>(items.size());
    Tensor yb = Tensor::zeros({B, D});
    Tensor cb = C > 0 ? Tensor::zeros({B, C}) : Tensor{};
    Tensor wb = Tensor::zeros({B, 1});
    for (std::int64_t i = 0; i < B; ++i) {
      const std::int64_t src = items[static_cast<std::size_t>(i)];
      std::copy_n(thetas.v.begin() + src * D, D, yb.v.begin() + i * D);
      if (C > 0) std::copy_n(ctxs.v.begin() + src * C, C, cb.v.begin() + i * C);
      wb.v[static_cast<std::size_t>(i)] = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(src)];
    }
    Var lp = flow.log_prob(t, ps, t.input(std::move(yb)), C > 0 ? t.input(std::move(cb)) : Var{});
    Var w = t.input(std::move(wb));
    return t.scale(t.div(t.sum(t.mul(w, lp)), t.sum(w)), -1.0);
  };
  return train_loop(ps, n, loss_fn, cfg, rng);
}

}  // namespace sbi
