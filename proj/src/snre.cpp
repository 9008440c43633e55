#include "sbi/snre.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sbi {

namespace {
void ensure_block(ParamStore& ps, const std::string& name, Tensor init) {
  if (ps.has(name)) {
    if (ps.value(name).shape != init.shape) throw ContractViolation("RatioClassifier: shape mismatch for " + name);
    return;
  }
  ps.add(name, std::move(init));
}
}  // namespace

RatioClassifier::RatioClassifier(ParamStore& ps, const std::string& prefix, std::int64_t in_dim, std::int64_t width,
                                 int depth, double slope, RngStream& init_rng)
    : in_dim_(in_dim), width_(width), depth_(depth), slope_(slope), prefix_(prefix) {
  std::int64_t prev = in_dim;
  for (int l = 0; l < depth; ++l) {
    w_names_.push_back(prefix + ".W" + std::to_string(l));
    b_names_.push_back(prefix + ".b" + std::to_string(l));
    ensure_block(ps, w_names_.back(), Tensor::randn({width, prev}, init_rng, std::sqrt(2.0 / static_cast<double>(prev))));
    ensure_block(ps, b_names_.back(), Tensor::zeros({width}));
    prev = width;
  }
  w_names_.push_back(prefix + ".Wout");
  b_names_.push_back(prefix + ".bout");
  ensure_block(ps, w_names_.back(), Tensor::zeros({1, prev}));
  ensure_block(ps, b_names_.back(), Tensor::zeros({1}));
}

Var RatioClassifier::forward(Tape& t, ParamStore& ps, Var features) const {
  if (t.val(features).cols() != in_dim_) throw DimensionError("RatioClassifier: feature width mismatch");
  Var h = features;
  for (std::size_t l = 0; l + 1 < w_names_.size(); ++l)
    h = t.leaky_relu(t.linear(h, t.param(ps, w_names_[l]), t.param(ps, b_names_[l])), slope_);
  Var out = t.linear(h, t.param(ps, w_names_.back()), t.param(ps, b_names_.back()));
  if (!t.val(out).all_finite()) throw NumericError("RatioClassifier: non-finite logit");
  return out;
}

void RatioClassifier::describe(KvFile& kv, const std::string& prefix) const {
  kv.set(prefix + ".param_prefix", prefix_);
  kv.set(prefix + ".in_dim", in_dim_);
  kv.set(prefix + ".width", width_);
  kv.set(prefix + ".depth", static_cast<std::int64_t>(depth_));
  kv.set(prefix + ".slope", slope_);
}

RatioClassifier RatioClassifier::from_descriptor(ParamStore& ps, const KvFile& kv, const std::string& prefix) {
  RngStream unused(0);
  return RatioClassifier(ps, kv.get_or(prefix + ".param_prefix", prefix), kv.get_int(prefix + ".in_dim"),
                         kv.get_int(prefix + ".width"), static_cast<int>(kv.get_int(prefix + ".depth")),
                         kv.get_double(prefix + ".slope"), unused);
}

Var contrastive_loss_from_logits(Tape& t, Var logits) {
  const Tensor& lv = t.val(logits);
  if (lv.cols() < 2) throw ContractViolation("contrastive loss: need K >= 2 columns");
  Var lse = t.logsumexp_rows(logits);
  Var true_col = t.slice_cols(logits, 0, 1);
  return t.mean(t.sub(lse, true_col));
}

double ratio_to_discriminator(double r) {
  if (r < 0.0) throw ContractViolation("ratio_to_discriminator: ratio must be nonnegative");
  return r / (1.0 + r);
}

// ---------------- RatioPosterior ----------------

void RatioPosterior::bind_observed(const SeriesPanel& X) {
  observed = X;
  std::vector<double> flat = X.values.v;
  panel_std.apply_flat(flat, X.V);
  Tensor row = Tensor::from({1, X.T * X.V}, std::move(flat));
  observed_ctx = embed.embed_plain(ps, row, X.T);
}

double RatioPosterior::logit(const std::vector<double>& theta) const {
  ParamStore& mps = const_cast<ParamStore&>(ps);
  Tensor raw = Tensor::from({1, static_cast<std::int64_t>(theta.size())}, theta);
  Tensor std_row = theta_std.to_std(raw);
  Tensor feat = Tensor::zeros({1, observed_ctx.cols() + std_row.cols()});
  std::copy_n(observed_ctx.v.begin(), observed_ctx.cols(), feat.v.begin());
  std::copy_n(std_row.v.begin(), std_row.cols(), feat.v.begin() + observed_ctx.cols());
  Tape t(false);
  return t.scalar(clf.forward(t, mps, t.input(std::move(feat))));
}

double RatioPosterior::log_unnorm(const std::vector<double>& theta) const {
  const double lp = prior_.log_pdf(theta);
  if (lp <= kLogZero / 2) return kLogZero;
  return logit(theta) + lp;
}

Tensor RatioPosterior::sample(std::int64_t n, const MhConfig& cfg, RngStream& rng) const {
  MhConfig mc = cfg;
  mc.steps = n;
  Chain ch = mh_box_target([this](const std::vector<double>& th) { return log_unnorm(th); }, prior_, mc, rng);
  return ch.draws;
}

void RatioPosterior::save(const std::string& path) const {
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
  clf.describe(kv, "clf");
  embed.describe(kv, "embed");
  theta_std.describe(kv, "tstd");
  panel_std.describe(kv, "pstd");
  kv.set("observed.T", observed.T);
  kv.set("observed.V", observed.V);
  os << "flowestim-ratio-posterior 1\n";
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

RatioPosterior RatioPosterior::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line.rfind("flowestim-ratio-posterior", 0) != 0) throw UsageError(path + " is not a ratio-posterior checkpoint");
  std::ostringstream head;
  while (std::getline(is, line)) {
    if (line == "=== observed ===") break;
    head << line << "\n";
  }
  KvFile kv = KvFile::parse(head.str());
  RatioPosterior post;
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
  post.clf = RatioClassifier::from_descriptor(post.ps, kv, "clf");
  post.embed = EmbeddingNet::from_descriptor(post.ps, kv, "embed");
  post.theta_std = AffineStandardizer::from_descriptor(kv, "tstd");
  post.panel_std = PanelStandardizer::from_descriptor(kv, "pstd");
  post.bind_observed(post.observed);
  return post;
}

// ---------------- runner ----------------

SnreResult run_snre(const SimulatorFn& sim, const UniformBoxPrior& prior, const SeriesPanel& X, const SnreConfig& cfg,
                    std::uint64_t seed) {
  if (cfg.rounds < 1) throw ContractViolation("run_snre: rounds >= 1");
  if (cfg.contrast_K < 2) throw ContractViolation("run_snre: contrast_K >= 2");
  if (cfg.sims_per_round < cfg.min_round_size) throw ContractViolation("run_snre: sims_per_round below min_round_size");

  SnreResult res;
  RatioPosterior& post = res.posterior;
  post.prior_ = prior;
  post.observed = X;
  RoundDataset& data = res.data;
  bool built = false;

  for (int round = 1; round <= cfg.rounds; ++round) {
    const auto t0 = std::chrono::steady_clock::now();
    RoundReport rep;
    rep.round = round;
    rep.requested = cfg.sims_per_round;
    const std::int64_t S = cfg.sims_per_round;

    Tensor draws;
    if (round == 1) {
      RngStream rng = make_stream(seed, "prior", static_cast<std::uint64_t>(round));
      draws = prior.sample(S, rng);
    } else {
      RngStream rng = make_stream(seed, "proposal", static_cast<std::uint64_t>(round));
      draws = post.sample(S, cfg.mh, rng);
    }

    std::vector<std::vector<double>> thetas;
    std::vector<std::uint64_t> seeds;
    const std::int64_t base = data.size();
    for (std::int64_t i = 0; i < S; ++i) {
      thetas.emplace_back(draws.v.begin() + i * prior.dim(), draws.v.begin() + (i + 1) * prior.dim());
      seeds.push_back(derive_seed(seed, "shocks", static_cast<std::uint64_t>(base + i)));
    }
    auto panels = simulate_map(sim, thetas, seeds, cfg.threads);
    for (std::int64_t i = 0; i < S; ++i) {
      if (panels[static_cast<std::size_t>(i)]) {
        data.append(thetas[static_cast<std::size_t>(i)], *panels[static_cast<std::size_t>(i)], round);
        ++rep.kept;
      } else {
        ++rep.failed;
      }
    }
    if (static_cast<double>(rep.failed) > cfg.max_failure_frac * static_cast<double>(S))
      throw SimulationFailure("snre round " + std::to_string(round) + ": failure budget exceeded");

    if (!built) {
      Tensor th = Tensor::from({data.size(), data.theta_dim}, data.thetas);
      post.theta_std = AffineStandardizer::fit(th);
      std::vector<SeriesPanel> ps_panels;
      for (std::int64_t i = 0; i < data.size(); ++i) {
        SeriesPanel p = SeriesPanel::make(data.panel_T, data.panel_V);
        std::copy_n(data.panels.begin() + i * data.panel_T * data.panel_V, data.panel_T * data.panel_V,
                    p.values.v.begin());
        ps_panels.push_back(std::move(p));
      }
      post.panel_std = PanelStandardizer::fit(ps_panels);
      RngStream init = make_stream(seed, "init");
      EmbedConfig ec;
      ec.kind = cfg.arch.embed_kind;
      ec.T = data.panel_T;
      ec.V = data.panel_V;
      ec.out_dim = cfg.arch.embed_out;
      ec.hidden = cfg.arch.embed_hidden;
      ec.gru_hidden = cfg.arch.gru_hidden;
      post.embed = EmbeddingNet(post.ps, "embed", ec, init);
      post.clf = RatioClassifier(post.ps, "clf", cfg.arch.embed_out + data.theta_dim, cfg.clf_width, cfg.clf_depth,
                                 0.01, init);
      built = true;
    }

    // training data caches
    auto th_std = std::make_shared<Tensor>([&] {
      Tensor t = Tensor::from({data.size(), data.theta_dim}, data.thetas);
      return post.theta_std.to_std(t);
    }());
    auto pn_std = std::make_shared<Tensor>([&] {
      std::vector<double> flat = data.panels;
      post.panel_std.apply_flat(flat, data.panel_V);
      return Tensor::from({data.size(), data.panel_T * data.panel_V}, std::move(flat));
    }());
    const std::int64_t D = data.theta_dim;
    const std::int64_t PL = data.panel_T * data.panel_V;
    const std::int64_t K = std::min<std::int64_t>(cfg.contrast_K, cfg.train.batch);
    auto contrast_rng = std::make_shared<RngStream>(make_stream(seed, "contrasts", static_cast<std::uint64_t>(round)));
    EmbeddingNet* embed = &post.embed;
    RatioClassifier* clf = &post.clf;
    ParamStore* store = &post.ps;
    const std::int64_t C = cfg.arch.embed_out;

    BatchLossFn loss_fn = [=](Tape& t, const std::vector<std::int64_t>& items) -> Var {
      const std::int64_t B = static_cast<std::int64_t>(items.size());
      if (B < K) throw ContractViolation("contrastive loss: batch smaller than K");
      std::vector<std::int64_t> atom_items(static_cast<std::size_t>(B * K));
      std::vector<std::int64_t> ctx_gather(static_cast<std::size_t>(B * K));
      for (std::int64_t i = 0; i < B; ++i) {
        atom_items[static_cast<std::size_t>(i * K)] = items[static_cast<std::size_t>(i)];
        std::vector<std::int64_t> pool;
        for (std::int64_t j = 0; j < B; ++j)
          if (j != i) pool.push_back(items[static_cast<std::size_t>(j)]);
        for (std::int64_t m = 1; m < K; ++m) {
          const std::size_t pick = contrast_rng->uniform_index(pool.size());
          atom_items[static_cast<std::size_t>(i * K + m)] = pool[pick];
          pool[pick] = pool.back();
          pool.pop_back();
        }
        for (std::int64_t m = 0; m < K; ++m) ctx_gather[static_cast<std::size_t>(i * K + m)] = i;
      }
      Tensor yb = Tensor::zeros({B * K, D});
      for (std::int64_t r = 0; r < B * K; ++r)
        std::copy_n(th_std->v.begin() + atom_items[static_cast<std::size_t>(r)] * D, D, yb.v.begin() + r * D);
      Tensor pb = Tensor::zeros({B, PL});
      for (std::int64_t i = 0; i < B; ++i)
        std::copy_n(pn_std->v.begin() + items[static_cast<std::size_t>(i)] * PL, PL, pb.v.begin() + i * PL);
      Var ctx = embed->forward(t, *store, t.input(std::move(pb)));
      Var feats = t.concat_cols({t.gather_rows(ctx, ctx_gather), t.input(std::move(yb))});
      Var logits = t.reshape(clf->forward(t, *store, feats), {B, K});
      return contrastive_loss_from_logits(t, logits);
    };
    (void)C;

    TrainConfig tc = cfg.train;
    tc.min_batch = std::max<std::int64_t>(tc.min_batch, K);
    RngStream train_rng = make_stream(seed, "train", static_cast<std::uint64_t>(round));
    TrainResult tr = train_loop(post.ps, data.size(), loss_fn, tc, train_rng);
    rep.train_loss = tr.train_loss.empty() ? 0.0 : tr.train_loss.back();
    rep.val_loss = tr.best_val;
    rep.epochs = tr.epochs_run;

    post.bind_observed(post.observed);
    post.round_ = round;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.rounds.push_back(rep);
  }

  res.manifest.set("run.algorithm", std::string("snre"));
  res.manifest.set("run.seed", static_cast<std::int64_t>(seed));
  res.manifest.set("run.rounds", static_cast<std::int64_t>(res.rounds.size()));
  res.manifest.set("run.sims_per_round", cfg.sims_per_round);
  res.manifest.set("run.contrast_K", static_cast<std::int64_t>(cfg.contrast_K));
  res.manifest.set("run.dataset_size", res.data.size());
  double total = 0.0;
  for (const auto& r : res.rounds) {
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
  return res;
}

}  // namespace sbi
