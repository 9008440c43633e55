#include "sbi/snpe.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace sbi {

void RoundDataset::append(const std::vector<double>& theta, const SeriesPanel& panel, int round) {
  if (size() == 0) {
    theta_dim = static_cast<std::int64_t>(theta.size());
    panel_T = panel.T;
    panel_V = panel.V;
  }
  if (static_cast<std::int64_t>(theta.size()) != theta_dim || panel.T != panel_T || panel.V != panel_V)
    throw DimensionError("RoundDataset::append: shape drift across rounds");
  thetas.insert(thetas.end(), theta.begin(), theta.end());
  panels.insert(panels.end(), panel.values.v.begin(), panel.values.v.end());
  round_of.push_back(round);
}

std::vector<double> RoundDataset::theta_row(std::int64_t i) const {
  return std::vector<double>(thetas.begin() + i * theta_dim, thetas.begin() + (i + 1) * theta_dim);
}

std::vector<std::optional<SeriesPanel>> simulate_map(const SimulatorFn& sim, const std::vector<std::vector<double>>& thetas,
                                                     const std::vector<std::uint64_t>& seeds, int threads) {
  const std::size_t n = thetas.size();
  if (seeds.size() != n) throw ContractViolation("simulate_map: seed count mismatch");
  std::vector<std::optional<SeriesPanel>> out(n);
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  std::vector<std::thread> pool;
  std::atomic<std::size_t> cursor{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= n) return;
      try {
        out[i] = sim(thetas[i], seeds[i]);
      } catch (const SimulationFailure&) {
        out[i] = std::nullopt;
      }
    }
  };
  if (threads == 1) {
    work();
  } else {
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return out;
}

Var atomic_loss_from_parts(Tape& t, Var logf_flat, const Tensor& neg_log_prior, std::int64_t B, std::int64_t M) {
  if (M < 2) throw ContractViolation("atomic loss: need at least 2 atoms");
  if (neg_log_prior.rows() != B || neg_log_prior.cols() != M) throw DimensionError("atomic loss: weight shape");
  Var scores = t.add(t.reshape(logf_flat, {B, M}), t.input(neg_log_prior));
  Var lse = t.logsumexp_rows(scores);
  Var true_col = t.slice_cols(scores, 0, 1);
  return t.mean(t.sub(lse, true_col));
}

// ---------------- PosteriorEstimate ----------------

void PosteriorEstimate::bind_observed(const SeriesPanel& X) {
  observed = X;
  std::vector<double> flat = X.values.v;
  panel_std.apply_flat(flat, X.V);
  Tensor row = Tensor::from({1, X.T * X.V}, std::move(flat));
  observed_ctx = embed.embed_plain(ps, row, X.T);
}

double PosteriorEstimate::log_prob(const std::vector<double>& theta) const {
  Tensor raw = Tensor::from({1, static_cast<std::int64_t>(theta.size())}, theta);
  Tensor std_row = theta_std.to_std(raw);
  const double lp = flow.log_prob_batch(ps, std_row, observed_ctx)[0];
  return lp - theta_std.log_det();
}

Tensor PosteriorEstimate::sample(std::int64_t n, RngStream& rng) const {
  if (n < 1) throw ContractViolation("PosteriorEstimate::sample: n >= 1");
  const std::int64_t D = flow.dim();
  Tensor out = Tensor::zeros({n, D});
  std::int64_t collected = 0, drawn = 0;
  while (collected < n) {
    const std::int64_t chunk = std::max<std::int64_t>(n, 4096);
    Tensor s = flow.sample(ps, chunk, observed_ctx, rng);
    Tensor raw = theta_std.to_raw(s);
    for (std::int64_t i = 0; i < chunk && collected < n; ++i) {
      if (prior_.inside(&raw.v[static_cast<std::size_t>(i * D)])) {
        std::copy_n(raw.v.begin() + i * D, D, out.v.begin() + collected * D);
        ++collected;
      }
    }
    drawn += chunk;
    last_acceptance_ = static_cast<double>(collected) / static_cast<double>(drawn);
    if (drawn >= 4 * chunk && last_acceptance_ < 0.01) {
      // flow mass sits mostly outside the box; walk the box directly instead
      MhConfig mc;
      mc.steps = n;
      mc.burn_in = 2000;
      mc.step_scale = 0.1;
      Chain ch = mh_box_target([this](const std::vector<double>& th) { return log_prob(th); }, prior_, mc, rng);
      return ch.draws;
    }
  }
  return out;
}

void PosteriorEstimate::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw UsageError("cannot open " + path + " for writing");
  KvFile kv;
  kv.set("posterior.round", static_cast<std::int64_t>(round_));
  kv.set("prior.dim", prior_.dim());
  for (std::int64_t j = 0; j < prior_.dim(); ++j) {
    kv.set("prior.name" + std::to_string(j), prior_.names[static_cast<std::size_t>(j)]);
    kv.set("prior.lo" + std::to_string(j), prior_.lo[static_cast<std::size_t>(j)]);
    kv.set("prior.hi" + std::to_string(j), prior_.hi[static_cast<std::size_t>(j)]);
  }
  flow.describe(kv, "flow");
  embed.describe(kv, "embed");
  theta_std.describe(kv, "tstd");
  panel_std.describe(kv, "pstd");
  kv.set("observed.T", observed.T);
  kv.set("observed.V", observed.V);
  os << "flowestim-posterior 1\n";
  os << kv.to_string();
  os << "=== observed ===\n";
  char buf[40];
  for (double v : observed.values.v) {
    std::snprintf(buf, sizeof(buf), "%a", v);
    os << buf << "\n";
  }
  os << "=== params ===\n";
  ps.write_text(os);
}

PosteriorEstimate PosteriorEstimate::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line.rfind("flowestim-posterior", 0) != 0) throw UsageError(path + " is not a posterior checkpoint");
  std::ostringstream head;
  while (std::getline(is, line)) {
    if (line == "=== observed ===") break;
    head << line << "\n";
  }
  KvFile kv = KvFile::parse(head.str());
  PosteriorEstimate post;
  post.round_ = static_cast<int>(kv.get_int("posterior.round"));
  {
    std::vector<std::string> names;
    std::vector<double> lo, hi;
    const std::int64_t d = kv.get_int("prior.dim");
    for (std::int64_t j = 0; j < d; ++j) {
      names.push_back(kv.get("prior.name" + std::to_string(j)));
      lo.push_back(kv.get_double("prior.lo" + std::to_string(j)));
      hi.push_back(kv.get_double("prior.hi" + std::to_string(j)));
    }
    post.prior_ = UniformBoxPrior::make(names, lo, hi);
  }
  post.observed = SeriesPanel::make(kv.get_int("observed.T"), kv.get_int("observed.V"));
  for (auto& v : post.observed.values.v) {
    std::getline(is, line);
    v = std::strtod(line.c_str(), nullptr);
  }
  std::getline(is, line);
  if (line != "=== params ===") throw UsageError(path + ": missing parameter block");
  post.ps = ParamStore::read_text(is);
  post.flow = NormalizingFlow::from_descriptor(post.ps, kv, "flow");
  post.embed = EmbeddingNet::from_descriptor(post.ps, kv, "embed");
  post.theta_std = AffineStandardizer::from_descriptor(kv, "tstd");
  post.panel_std = PanelStandardizer::from_descriptor(kv, "pstd");
  post.bind_observed(post.observed);
  return post;
}

// ---------------- SnpeRunner ----------------

SnpeRunner::SnpeRunner(SimulatorFn sim, UniformBoxPrior prior, SeriesPanel observed, SnpeConfig cfg, std::uint64_t seed)
    : sim_(std::move(sim)), cfg_(std::move(cfg)), seed_(seed) {
  post_.prior_ = std::move(prior);
  post_.observed = std::move(observed);
  if (cfg_.sims_per_round < cfg_.min_round_size)
    throw ContractViolation("run_snpe: sims_per_round below min_round_size");
  if (cfg_.proposal_override) {
    const auto& ov = *cfg_.proposal_override;
    for (std::size_t j = 0; j < ov.names.size(); ++j)
      if (ov.lo[j] < post_.prior_.lo[j] || ov.hi[j] > post_.prior_.hi[j])
        throw ContractViolation("proposal override must lie inside the prior box");
  }
}

Tensor SnpeRunner::standardized_thetas() const {
  Tensor t = Tensor::from({data_.size(), data_.theta_dim}, data_.thetas);
  return post_.theta_std.to_std(t);
}

Tensor SnpeRunner::standardized_panels() const {
  std::vector<double> flat = data_.panels;
  post_.panel_std.apply_flat(flat, data_.panel_V);
  return Tensor::from({data_.size(), data_.panel_T * data_.panel_V}, std::move(flat));
}

void SnpeRunner::build_estimator() {
  // standardizers from round-1 data only
  Tensor th = Tensor::from({data_.size(), data_.theta_dim}, data_.thetas);
  post_.theta_std = AffineStandardizer::fit(th);
  std::vector<SeriesPanel> panels;
  for (std::int64_t i = 0; i < data_.size(); ++i) {
    SeriesPanel p = SeriesPanel::make(data_.panel_T, data_.panel_V);
    std::copy_n(data_.panels.begin() + i * data_.panel_T * data_.panel_V, data_.panel_T * data_.panel_V,
                p.values.v.begin());
    panels.push_back(std::move(p));
  }
  post_.panel_std = PanelStandardizer::fit(panels);

  RngStream init = make_stream(seed_, "init");
  EmbedConfig ec;
  ec.kind = cfg_.arch.embed_kind;
  ec.T = data_.panel_T;
  ec.V = data_.panel_V;
  ec.out_dim = cfg_.arch.embed_out;
  ec.hidden = cfg_.arch.embed_hidden;
  ec.gru_hidden = cfg_.arch.gru_hidden;
  post_.embed = EmbeddingNet(post_.ps, "embed", ec, init);

  FlowConfig fc;
  fc.dim = data_.theta_dim;
  fc.ctx_dim = cfg_.arch.embed_out;
  fc.n_layers = cfg_.arch.flow_layers;
  fc.kind = cfg_.arch.flow_kind;
  fc.width = cfg_.arch.flow_width;
  fc.depth = cfg_.arch.flow_depth;
  fc.link = cfg_.arch.flow_link;
  fc.K = cfg_.arch.flow_K;
  post_.flow = NormalizingFlow::build(post_.ps, "flow", fc, init);
  estimator_built_ = true;
}

RoundReport SnpeRunner::run_round() {
  const auto t0 = std::chrono::steady_clock::now();
  const int round = next_round_++;
  const std::int64_t S = cfg_.sims_per_round;
  RoundReport rep;
  rep.round = round;
  rep.requested = S;

  // 1. draw parameters from the round proposal
  Tensor draws;
  if (round == 1) {
    RngStream rng = make_stream(seed_, "prior", static_cast<std::uint64_t>(round));
    draws = post_.prior_.sample(S, rng);
  } else if (cfg_.proposal_override) {
    RngStream rng = make_stream(seed_, "proposal", static_cast<std::uint64_t>(round));
    draws = cfg_.proposal_override->sample(S, rng);
  } else {
    RngStream rng = make_stream(seed_, "proposal", static_cast<std::uint64_t>(round));
    draws = post_.sample(S, rng);
  }

  // 2. simulate in parallel, index order fixed
  std::vector<std::vector<double>> thetas;
  std::vector<std::uint64_t> seeds;
  const std::int64_t base = data_.size();
  for (std::int64_t i = 0; i < S; ++i) {
    thetas.emplace_back(draws.v.begin() + i * post_.prior_.dim(), draws.v.begin() + (i + 1) * post_.prior_.dim());
    seeds.push_back(derive_seed(seed_, "shocks", static_cast<std::uint64_t>(base + i)));
  }
  auto panels = simulate_map(sim_, thetas, seeds, cfg_.threads);
  for (std::int64_t i = 0; i < S; ++i) {
    if (panels[static_cast<std::size_t>(i)]) {
      data_.append(thetas[static_cast<std::size_t>(i)], *panels[static_cast<std::size_t>(i)], round);
      ++rep.kept;
    } else {
      ++rep.failed;
    }
  }
  if (static_cast<double>(rep.failed) > cfg_.max_failure_frac * static_cast<double>(S))
    throw SimulationFailure("round " + std::to_string(round) + ": " + std::to_string(rep.failed) + " of " +
                            std::to_string(S) + " simulations failed, over the " +
                            std::to_string(cfg_.max_failure_frac) + " budget");

  if (round == 1) build_estimator();

  // 3. retrain on all accumulated data
  auto th_std = std::make_shared<Tensor>(standardized_thetas());
  auto pn_std = std::make_shared<Tensor>(standardized_panels());
  auto raw_th = std::make_shared<Tensor>(Tensor::from({data_.size(), data_.theta_dim}, data_.thetas));
  const std::int64_t D = data_.theta_dim;
  const std::int64_t PL = data_.panel_T * data_.panel_V;
  const std::int64_t M = std::min<std::int64_t>(cfg_.atoms, cfg_.train.batch);
  auto atoms_rng = std::make_shared<RngStream>(make_stream(seed_, "atoms", static_cast<std::uint64_t>(round)));
  NormalizingFlow* flow = &post_.flow;
  EmbeddingNet* embed = &post_.embed;
  ParamStore* ps = &post_.ps;
  const UniformBoxPrior* prior = &post_.prior_;

  BatchLossFn loss_fn;
  if (round == 1) {
    loss_fn = [=](Tape& t, const std::vector<std::int64_t>& items) -> Var {
      const std::int64_t B = static_cast<std::int64_t>(items.size());
      Tensor yb = Tensor::zeros({B, D});
      Tensor pb = Tensor::zeros({B, PL});
      for (std::int64_t i = 0; i < B; ++i) {
        const std::int64_t src = items[static_cast<std::size_t>(i)];
        std::copy_n(th_std->v.begin() + src * D, D, yb.v.begin() + i * D);
        std::copy_n(pn_std->v.begin() + src * PL, PL, pb.v.begin() + i * PL);
      }
      Var ctx = embed->forward(t, *ps, t.input(std::move(pb)));
      Var lp = flow->log_prob(t, *ps, t.input(std::move(yb)), ctx);
      return t.scale(t.mean(lp), -1.0);
    };
  } else {
    loss_fn = [=](Tape& t, const std::vector<std::int64_t>& items) -> Var {
      const std::int64_t B = static_cast<std::int64_t>(items.size());
      if (B < M) throw ContractViolation("atomic loss: batch smaller than atom count");
      // atom 0 is the true pairing; contrasts are drawn from the batch
      // without replacement
      std::vector<std::int64_t> atom_items(static_cast<std::size_t>(B * M));
      std::vector<std::int64_t> ctx_gather(static_cast<std::size_t>(B * M));
      for (std::int64_t i = 0; i < B; ++i) {
        atom_items[static_cast<std::size_t>(i * M)] = items[static_cast<std::size_t>(i)];
        std::vector<std::int64_t> pool;
        for (std::int64_t j = 0; j < B; ++j)
          if (j != i) pool.push_back(items[static_cast<std::size_t>(j)]);
        for (std::int64_t m = 1; m < M; ++m) {
          const std::size_t pick = atoms_rng->uniform_index(pool.size());
          atom_items[static_cast<std::size_t>(i * M + m)] = pool[pick];
          pool[pick] = pool.back();
          pool.pop_back();
        }
        for (std::int64_t m = 0; m < M; ++m) ctx_gather[static_cast<std::size_t>(i * M + m)] = i;
      }
      Tensor yb = Tensor::zeros({B * M, D});
      Tensor nlp = Tensor::zeros({B, M});
      for (std::int64_t r = 0; r < B * M; ++r) {
        const std::int64_t src = atom_items[static_cast<std::size_t>(r)];
        std::copy_n(th_std->v.begin() + src * D, D, yb.v.begin() + r * D);
        const double lp = prior->log_pdf(&raw_th->v[static_cast<std::size_t>(src * D)]);
        if (lp <= kLogZero / 2)
          throw NumericError("atomic loss: atom outside the prior support (proposal/prior mismatch)");
        nlp.v[static_cast<std::size_t>(r)] = -lp;
      }
      Tensor pb = Tensor::zeros({B, PL});
      for (std::int64_t i = 0; i < B; ++i) {
        const std::int64_t src = items[static_cast<std::size_t>(i)];
        std::copy_n(pn_std->v.begin() + src * PL, PL, pb.v.begin() + i * PL);
      }
      Var ctx = embed->forward(t, *ps, t.input(std::move(pb)));
      Var ctx_rows = t.gather_rows(ctx, ctx_gather);
      Var logf = flow->log_prob(t, *ps, t.input(std::move(yb)), ctx_rows);
      return atomic_loss_from_parts(t, logf, nlp, B, M);
    };
  }

  TrainConfig tc = cfg_.train;
  if (round > 1) tc.min_batch = std::max<std::int64_t>(tc.min_batch, M);
  RngStream train_rng = make_stream(seed_, "train", static_cast<std::uint64_t>(round));
  TrainResult tr = train_loop(post_.ps, data_.size(), loss_fn, tc, train_rng);
  rep.train_loss = tr.train_loss.empty() ? 0.0 : tr.train_loss.back();
  rep.val_loss = tr.best_val;
  rep.epochs = tr.epochs_run;

  // 4. rebind the posterior to the observed panel
  post_.bind_observed(post_.observed);
  post_.round_ = round;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  reports_.push_back(rep);
  return rep;
}

SnpeResult SnpeRunner::finish() {
  SnpeResult res;
  res.manifest.set("run.algorithm", std::string("snpe"));
  res.manifest.set("run.seed", static_cast<std::int64_t>(seed_));
  res.manifest.set("run.rounds", static_cast<std::int64_t>(reports_.size()));
  res.manifest.set("run.sims_per_round", cfg_.sims_per_round);
  res.manifest.set("run.atoms", static_cast<std::int64_t>(cfg_.atoms));
  res.manifest.set("run.dataset_size", data_.size());
  double total = 0.0;
  for (const auto& r : reports_) {
    const std::string p = "round" + std::to_string(r.round);
    res.manifest.set(p + ".requested", r.requested);
    res.manifest.set(p + ".kept", r.kept);
    res.manifest.set(p + ".failed", r.failed);
    res.manifest.set(p + ".train_loss", r.train_loss);
    res.manifest.set(p + ".val_loss", r.val_loss);
    res.manifest.set(p + ".epochs", static_cast<std::int64_t>(r.epochs));
    res.manifest.set(p + ".seconds", r.seconds);
    total += r.seconds;
  }
  res.manifest.set("run.total_seconds", total);
  res.rounds = reports_;
  res.data = std::move(data_);
  res.posterior = std::move(post_);
  return res;
}

SnpeResult run_snpe(const SimulatorFn& sim, const UniformBoxPrior& prior, const SeriesPanel& X, const SnpeConfig& cfg,
                    std::uint64_t seed) {
  if (cfg.rounds < 1) throw ContractViolation("run_snpe: rounds >= 1");
  SnpeRunner runner(sim, prior, X, cfg, seed);
  for (std::int64_t r = 0; r < cfg.rounds; ++r) runner.run_round();
  return runner.finish();
}

}  // namespace sbi
