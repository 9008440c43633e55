#include "sbi/flow.hpp"

#include <algorithm>
#include <cmath>

namespace sbi {

namespace {
constexpr double kLn2Pi = 1.8378770664093454835606594728112;

std::vector<int> degrees_param_major(std::int64_t dim, int per_dim) {
  // layout: [p0 for all dims][p1 for all dims]...: column c has degree (c % dim) + 1
  std::vector<int> deg(static_cast<std::size_t>(dim * per_dim));
  for (std::size_t c = 0; c < deg.size(); ++c) deg[c] = static_cast<int>(c % static_cast<std::size_t>(dim)) + 1;
  return deg;
}

std::vector<int> degrees_coord_major(std::int64_t dim, int per_dim) {
  // layout: [all params of dim 0][all params of dim 1]...
  std::vector<int> deg(static_cast<std::size_t>(dim * per_dim));
  for (std::size_t c = 0; c < deg.size(); ++c) deg[c] = static_cast<int>(c / static_cast<std::size_t>(per_dim)) + 1;
  return deg;
}

void check_layer_finite(const Tensor& z, const Tensor& ld, const std::string& where) {
  if (!z.all_finite() || !ld.all_finite()) throw NumericError("non-finite output in " + where);
}

double lrelu_inv(double v, double slope) { return v >= 0.0 ? v : v / slope; }

Tensor replicate_ctx(const Tensor& ctx, std::int64_t rows) {
  if (ctx.size() == 0) return ctx;
  if (ctx.rows() == rows) return ctx;
  if (ctx.rows() != 1) throw DimensionError("context rows must be 1 or batch size");
  Tensor out = Tensor::zeros({rows, ctx.cols()});
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < ctx.cols(); ++c) out.at(r, c) = ctx.at(0, c);
  return out;
}

}  // namespace

// ---------------- AffineArLayer ----------------

AffineArLayer::AffineArLayer(ParamStore& ps, const std::string& prefix, AffineArConfig cfg, RngStream& init_rng)
    : cfg_(cfg) {
  MadeConfig mc;
  mc.dim = cfg_.dim;
  mc.ctx_dim = cfg_.ctx_dim;
  mc.width = cfg_.width;
  mc.depth = cfg_.depth;
  mc.hidden_slope = cfg_.hidden_slope;
  mc.out_degrees = degrees_param_major(cfg_.dim, 2);  // [shift | raw log-scale]
  cond_ = MadeNet(ps, prefix, mc, init_rng);
}

Bijector::Fwd AffineArLayer::forward(Tape& t, ParamStore& ps, Var y, Var ctx) const {
  const std::int64_t D = cfg_.dim;
  Var cond = cond_.forward(t, ps, y, ctx);
  Var shift = t.slice_cols(cond, 0, D);
  Var s = t.soft_clamp(t.slice_cols(cond, D, 2 * D), cfg_.scale_clamp);
  Var a = t.add(shift, t.mul(t.exp_op(s), y));
  Var logdet = t.rowsum(s);
  Var z = a;
  if (cfg_.link) {
    z = t.leaky_relu(a, cfg_.link_slope);
    // The link's log-derivative is piecewise constant in its argument, so it
    // enters the graph as a value-only term.
    const Tensor& av = t.val(a);
    Tensor ldl = Tensor::zeros({av.rows(), 1});
    const double ls = std::log(cfg_.link_slope);
    for (std::int64_t b = 0; b < av.rows(); ++b) {
      double acc = 0.0;
      for (std::int64_t d = 0; d < D; ++d)
        if (av.at(b, d) < 0.0) acc += ls;
      ldl.v[static_cast<std::size_t>(b)] = acc;
    }
    logdet = t.add(logdet, t.input(std::move(ldl)));
  }
  return {z, logdet};
}

Tensor AffineArLayer::inverse(const ParamStore& ps, const Tensor& z, const Tensor& ctx) const {
  ParamStore& mps = const_cast<ParamStore&>(ps);  // non-recording tape never mutates
  const std::int64_t B = z.rows(), D = cfg_.dim;
  if (z.cols() != D) throw DimensionError("AffineArLayer::inverse: dim mismatch");
  Tensor y = Tensor::zeros({B, D});
  for (std::int64_t d = 0; d < D; ++d) {
    Tape t(false);
    Var yv = t.input(y);
    Var cv = cfg_.ctx_dim > 0 ? t.input(ctx) : Var{};
    const Tensor& cond = t.val(cond_.forward(t, mps, yv, cv));
    for (std::int64_t b = 0; b < B; ++b) {
      const double shift = cond.at(b, d);
      const double sraw = cond.at(b, D + d);
      const double s = cfg_.scale_clamp * std::tanh(sraw / cfg_.scale_clamp);
      const double a = cfg_.link ? lrelu_inv(z.at(b, d), cfg_.link_slope) : z.at(b, d);
      y.at(b, d) = (a - shift) * std::exp(-s);
    }
  }
  if (!y.all_finite()) throw NumericError("AffineArLayer::inverse produced non-finite values");
  return y;
}

void AffineArLayer::describe(KvFile& kv, const std::string& prefix) const {
  kv.set(prefix + ".kind", std::string("affine"));
  kv.set(prefix + ".dim", static_cast<std::int64_t>(cfg_.dim));
  kv.set(prefix + ".ctx_dim", static_cast<std::int64_t>(cfg_.ctx_dim));
  kv.set(prefix + ".width", static_cast<std::int64_t>(cfg_.width));
  kv.set(prefix + ".depth", static_cast<std::int64_t>(cfg_.depth));
  kv.set(prefix + ".hidden_slope", cfg_.hidden_slope);
  kv.set(prefix + ".link", std::string(cfg_.link ? "true" : "false"));
  kv.set(prefix + ".link_slope", cfg_.link_slope);
  kv.set(prefix + ".scale_clamp", cfg_.scale_clamp);
}

// ---------------- SigmoidMixtureLayer ----------------

SigmoidMixtureLayer::SigmoidMixtureLayer(ParamStore& ps, const std::string& prefix, SigmoidMixtureConfig cfg,
                                         RngStream& init_rng)
    : cfg_(cfg) {
  if (cfg_.K < 1) throw ContractViolation("SigmoidMixtureLayer: K must be positive");
  MadeConfig mc;
  mc.dim = cfg_.dim;
  mc.ctx_dim = cfg_.ctx_dim;
  mc.width = cfg_.width;
  mc.depth = cfg_.depth;
  mc.hidden_slope = cfg_.hidden_slope;
  mc.out_degrees = degrees_coord_major(cfg_.dim, 3 * cfg_.K);  // per coord: [w logits | alpha raw | beta]
  const bool fresh = !ps.has(prefix + ".bout");
  cond_ = MadeNet(ps, prefix, mc, init_rng);
  if (fresh) {
    // Identical components would receive identical gradients forever; spread
    // the initial sigmoid centers and jitter the raw weights.
    Tensor& bout = ps.value(prefix + ".bout");
    const std::int64_t K = cfg_.K;
    for (std::int64_t d = 0; d < cfg_.dim; ++d) {
      const std::int64_t off = d * 3 * K;
      for (std::int64_t k = 0; k < K; ++k) {
        bout.v[static_cast<std::size_t>(off + k)] = 0.05 * init_rng.gaussian();
        bout.v[static_cast<std::size_t>(off + K + k)] = 0.05 * init_rng.gaussian();
        bout.v[static_cast<std::size_t>(off + 2 * K + k)] =
            (static_cast<double>(k) - 0.5 * static_cast<double>(K - 1)) * (4.0 / static_cast<double>(K)) +
            0.05 * init_rng.gaussian();
      }
    }
  }
}

Bijector::Fwd SigmoidMixtureLayer::forward(Tape& t, ParamStore& ps, Var y, Var ctx) const {
  const std::int64_t D = cfg_.dim;
  const std::int64_t K = cfg_.K;
  Var cond = cond_.forward(t, ps, y, ctx);
  std::vector<Var> zs;
  Var logdet;
  for (std::int64_t d = 0; d < D; ++d) {
    Var block = t.slice_cols(cond, d * 3 * K, (d + 1) * 3 * K);
    Var w = t.softmax_rows(t.slice_cols(block, 0, K));
    Var alpha = t.add_const(t.softplus(t.soft_clamp(t.slice_cols(block, K, 2 * K), 10.0)), 1e-6);
    Var beta = t.slice_cols(block, 2 * K, 3 * K);
    Var yk = t.repeat_col(t.slice_cols(y, d, d + 1), K);
    Var u = t.add(t.mul(alpha, yk), beta);
    Var su = t.sigmoid(u);
    Var sn = t.sigmoid(t.neg(u));
    // s_plus + s_minus = 1 exactly; both sums stay far from underflow where one
    // of them would not.
    Var s_plus = t.rowsum(t.mul(w, su));
    Var s_minus = t.rowsum(t.mul(w, sn));
    Var d_plus = t.rowsum(t.mul(t.mul(w, alpha), t.mul(su, sn)));
    Var zd = t.sub(t.log_op(s_plus), t.log_op(s_minus));
    Var ldd = t.sub(t.log_op(d_plus), t.add(t.log_op(s_plus), t.log_op(s_minus)));
    zs.push_back(zd);
    logdet = d == 0 ? ldd : t.add(logdet, ldd);
  }
  return {t.concat_cols(zs), logdet};
}

Tensor SigmoidMixtureLayer::inverse(const ParamStore& ps, const Tensor& z, const Tensor& ctx) const {
  ParamStore& mps = const_cast<ParamStore&>(ps);
  const std::int64_t B = z.rows(), D = cfg_.dim, K = cfg_.K;
  if (z.cols() != D) throw DimensionError("SigmoidMixtureLayer::inverse: dim mismatch");
  Tensor y = Tensor::zeros({B, D});
  std::vector<double> w(static_cast<std::size_t>(K)), al(static_cast<std::size_t>(K)), be(static_cast<std::size_t>(K));
  for (std::int64_t d = 0; d < D; ++d) {
    Tape t(false);
    Var yv = t.input(y);
    Var cv = cfg_.ctx_dim > 0 ? t.input(ctx) : Var{};
    const Tensor& cond = t.val(cond_.forward(t, mps, yv, cv));
    for (std::int64_t b = 0; b < B; ++b) {
      const std::int64_t off = d * 3 * K;
      double wmax = -1e308;
      for (std::int64_t k = 0; k < K; ++k) wmax = std::max(wmax, cond.at(b, off + k));
      double wsum = 0.0;
      for (std::int64_t k = 0; k < K; ++k) {
        w[static_cast<std::size_t>(k)] = std::exp(cond.at(b, off + k) - wmax);
        wsum += w[static_cast<std::size_t>(k)];
      }
      for (auto& x : w) x /= wsum;
      for (std::int64_t k = 0; k < K; ++k) {
        const double raw = cond.at(b, off + K + k);
        const double clamped = 10.0 * std::tanh(raw / 10.0);
        al[static_cast<std::size_t>(k)] = (clamped > 0 ? clamped + std::log1p(std::exp(-clamped)) : std::log1p(std::exp(clamped))) + 1e-6;
        be[static_cast<std::size_t>(k)] = cond.at(b, off + 2 * K + k);
      }
      auto g = [&](double yy) {
        double sp = 0.0, sm = 0.0;
        for (std::int64_t k = 0; k < K; ++k) {
          const double u = al[static_cast<std::size_t>(k)] * yy + be[static_cast<std::size_t>(k)];
          const double s = u >= 0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
          sp += w[static_cast<std::size_t>(k)] * s;
          sm += w[static_cast<std::size_t>(k)] * (1.0 - s);
        }
        return std::log(sp) - std::log(sm);
      };
      const double target = z.at(b, d);
      double lo = cfg_.bisect_lo, hi = cfg_.bisect_hi;
      if (g(lo) > target || g(hi) < target)
        throw NumericError("SigmoidMixtureLayer::inverse: bisection failed to bracket");
      for (int it = 0; it < cfg_.bisect_iters; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < target)
          lo = mid;
        else
          hi = mid;
      }
      y.at(b, d) = 0.5 * (lo + hi);
    }
  }
  return y;
}

void SigmoidMixtureLayer::describe(KvFile& kv, const std::string& prefix) const {
  kv.set(prefix + ".kind", std::string("sigmoid_mixture"));
  kv.set(prefix + ".dim", static_cast<std::int64_t>(cfg_.dim));
  kv.set(prefix + ".ctx_dim", static_cast<std::int64_t>(cfg_.ctx_dim));
  kv.set(prefix + ".width", static_cast<std::int64_t>(cfg_.width));
  kv.set(prefix + ".depth", static_cast<std::int64_t>(cfg_.depth));
  kv.set(prefix + ".hidden_slope", cfg_.hidden_slope);
  kv.set(prefix + ".K", static_cast<std::int64_t>(cfg_.K));
}

// ---------------- PermutationLayer ----------------

PermutationLayer::PermutationLayer(std::vector<std::int64_t> perm) : perm_(std::move(perm)) {
  inv_.assign(perm_.size(), 0);
  std::vector<bool> seen(perm_.size(), false);
  for (std::size_t j = 0; j < perm_.size(); ++j) {
    const std::int64_t p = perm_[j];
    if (p < 0 || p >= static_cast<std::int64_t>(perm_.size()) || seen[static_cast<std::size_t>(p)])
      throw ContractViolation("PermutationLayer: not a bijection on {1..dim}");
    seen[static_cast<std::size_t>(p)] = true;
    inv_[static_cast<std::size_t>(p)] = static_cast<std::int64_t>(j);
  }
}

Bijector::Fwd PermutationLayer::forward(Tape& t, ParamStore&, Var y, Var) const {
  Var z = t.permute_cols(y, perm_);
  Var ld = t.input(Tensor::zeros({t.val(y).rows(), 1}));
  return {z, ld};
}

Tensor PermutationLayer::inverse(const ParamStore&, const Tensor& z, const Tensor&) const {
  Tensor y = Tensor::zeros({z.rows(), z.cols()});
  for (std::int64_t b = 0; b < z.rows(); ++b)
    for (std::int64_t c = 0; c < z.cols(); ++c) y.at(b, perm_[static_cast<std::size_t>(c)]) = z.at(b, c);
  return y;
}

void PermutationLayer::describe(KvFile& kv, const std::string& prefix) const {
  kv.set(prefix + ".kind", std::string("permutation"));
  std::string p;
  for (std::size_t j = 0; j < perm_.size(); ++j) p += (j ? "," : "") + std::to_string(perm_[j]);
  kv.set(prefix + ".perm", p);
}

// ---------------- NormalizingFlow ----------------

NormalizingFlow NormalizingFlow::build(ParamStore& ps, const std::string& prefix, const FlowConfig& cfg,
                                       RngStream& init_rng) {
  if (cfg.dim < 1) throw ContractViolation("flow dim must be positive");
  NormalizingFlow f;
  f.cfg_ = cfg;
  f.prefix_ = prefix;
  std::vector<std::int64_t> reversal(static_cast<std::size_t>(cfg.dim));
  for (std::int64_t i = 0; i < cfg.dim; ++i) reversal[static_cast<std::size_t>(i)] = cfg.dim - 1 - i;
  int ar_count = 0;
  for (int i = 0; i < cfg.n_layers; ++i) {
    if (i % 2 == 1) {
      f.layers_.push_back(std::make_unique<PermutationLayer>(reversal));
      continue;
    }
    const std::string lp = prefix + ".L" + std::to_string(ar_count++);
    if (cfg.kind == ArKind::Affine) {
      AffineArConfig ac;
      ac.dim = cfg.dim;
      ac.ctx_dim = cfg.ctx_dim;
      ac.width = cfg.width;
      ac.depth = cfg.depth;
      ac.hidden_slope = cfg.hidden_slope;
      ac.link = cfg.link;
      ac.link_slope = cfg.link_slope;
      f.layers_.push_back(std::make_unique<AffineArLayer>(ps, lp, ac, init_rng));
    } else {
      SigmoidMixtureConfig sc;
      sc.dim = cfg.dim;
      sc.ctx_dim = cfg.ctx_dim;
      sc.width = cfg.width;
      sc.depth = cfg.depth;
      sc.hidden_slope = cfg.hidden_slope;
      sc.K = cfg.K;
      f.layers_.push_back(std::make_unique<SigmoidMixtureLayer>(ps, lp, sc, init_rng));
    }
  }
  return f;
}

NormalizingFlow NormalizingFlow::identity(ParamStore& ps, const std::string& prefix, std::int64_t dim,
                                          std::int64_t ctx_dim, int n_layers, RngStream& init_rng) {
  FlowConfig cfg;
  cfg.dim = dim;
  cfg.ctx_dim = ctx_dim;
  cfg.n_layers = n_layers;
  cfg.link = false;
  NormalizingFlow f = build(ps, prefix, cfg, init_rng);
  // Zero every conditioner block: shift 0, log-scale 0.
  for (const auto& name : ps.names())
    if (name.rfind(prefix + ".", 0) == 0) ps.value(name).fill(0.0);
  return f;
}

Var NormalizingFlow::log_prob(Tape& t, ParamStore& ps, Var y, Var ctx) const {
  if (t.val(y).cols() != cfg_.dim) throw DimensionError("flow log_prob: theta width != dim");
  if (cfg_.ctx_dim > 0 && (!ctx.valid() || t.val(ctx).cols() != cfg_.ctx_dim))
    throw DimensionError("flow log_prob: context width != ctx_dim");
  const std::int64_t B = t.val(y).rows();
  Var h = y;
  Var ld = t.input(Tensor::zeros({B, 1}));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Bijector::Fwd f = layers_[i]->forward(t, ps, h, ctx);
    check_layer_finite(t.val(f.z), t.val(f.logdet), "flow layer " + std::to_string(i));
    h = f.z;
    ld = t.add(ld, f.logdet);
  }
  Var base = t.add_const(t.scale(t.rowsum(t.mul(h, h)), -0.5), -0.5 * static_cast<double>(cfg_.dim) * kLn2Pi);
  return t.add(base, ld);
}

std::vector<double> NormalizingFlow::log_prob_batch(const ParamStore& ps, const Tensor& y, const Tensor& ctx) const {
  ParamStore& mps = const_cast<ParamStore&>(ps);
  const std::int64_t n = y.rows();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  const std::int64_t chunk = 4096;
  for (std::int64_t at = 0; at < n; at += chunk) {
    const std::int64_t m = std::min(chunk, n - at);
    Tensor yc = Tensor::zeros({m, y.cols()});
    std::copy_n(y.v.begin() + at * y.cols(), m * y.cols(), yc.v.begin());
    Tensor cc;
    if (cfg_.ctx_dim > 0) {
      if (ctx.rows() == 1) {
        cc = replicate_ctx(ctx, m);
      } else {
        cc = Tensor::zeros({m, ctx.cols()});
        std::copy_n(ctx.v.begin() + at * ctx.cols(), m * ctx.cols(), cc.v.begin());
      }
    }
    Tape t(false);
    Var lp = log_prob(t, mps, t.input(std::move(yc)), cfg_.ctx_dim > 0 ? t.input(std::move(cc)) : Var{});
    const Tensor& lv = t.val(lp);
    out.insert(out.end(), lv.v.begin(), lv.v.end());
  }
  return out;
}

double NormalizingFlow::log_prob_one(const ParamStore& ps, const std::vector<double>& y,
                                     const std::vector<double>& ctx) const {
  Tensor yt = Tensor::from({1, static_cast<std::int64_t>(y.size())}, y);
  Tensor ct = ctx.empty() ? Tensor{} : Tensor::from({1, static_cast<std::int64_t>(ctx.size())}, ctx);
  return log_prob_batch(ps, yt, ct)[0];
}

Tensor NormalizingFlow::sample(const ParamStore& ps, std::int64_t n, const Tensor& ctx_row, RngStream& rng) const {
  if (n < 1) throw ContractViolation("flow sample: n must be >= 1");
  Tensor out = Tensor::zeros({n, cfg_.dim});
  const std::int64_t chunk = 4096;
  for (std::int64_t at = 0; at < n; at += chunk) {
    const std::int64_t m = std::min(chunk, n - at);
    Tensor z = Tensor::zeros({m, cfg_.dim});
    for (auto& x : z.v) x = rng.gaussian();
    Tensor ctx = cfg_.ctx_dim > 0 ? replicate_ctx(ctx_row, m) : Tensor{};
    Tensor cur = std::move(z);
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->inverse(ps, cur, ctx);
    std::copy_n(cur.v.begin(), m * cfg_.dim, out.v.begin() + at * cfg_.dim);
  }
  return out;
}

void NormalizingFlow::describe(KvFile& kv, const std::string& prefix) const {
  kv.set(prefix + ".param_prefix", prefix_);
  kv.set(prefix + ".dim", static_cast<std::int64_t>(cfg_.dim));
  kv.set(prefix + ".ctx_dim", static_cast<std::int64_t>(cfg_.ctx_dim));
  kv.set(prefix + ".n_layers", static_cast<std::int64_t>(cfg_.n_layers));
  kv.set(prefix + ".kind", std::string(cfg_.kind == ArKind::Affine ? "affine" : "sigmoid_mixture"));
  kv.set(prefix + ".width", static_cast<std::int64_t>(cfg_.width));
  kv.set(prefix + ".depth", static_cast<std::int64_t>(cfg_.depth));
  kv.set(prefix + ".hidden_slope", cfg_.hidden_slope);
  kv.set(prefix + ".link", std::string(cfg_.link ? "true" : "false"));
  kv.set(prefix + ".link_slope", cfg_.link_slope);
  kv.set(prefix + ".K", static_cast<std::int64_t>(cfg_.K));
}

NormalizingFlow NormalizingFlow::from_descriptor(ParamStore& ps, const KvFile& kv, const std::string& prefix) {
  FlowConfig cfg;
  cfg.dim = kv.get_int(prefix + ".dim");
  cfg.ctx_dim = kv.get_int(prefix + ".ctx_dim");
  cfg.n_layers = static_cast<int>(kv.get_int(prefix + ".n_layers"));
  cfg.kind = kv.get(prefix + ".kind") == "affine" ? ArKind::Affine : ArKind::SigmoidMixture;
  cfg.width = kv.get_int(prefix + ".width");
  cfg.depth = static_cast<int>(kv.get_int(prefix + ".depth"));
  cfg.hidden_slope = kv.get_double(prefix + ".hidden_slope");
  cfg.link = kv.get_bool_or(prefix + ".link", true);
  cfg.link_slope = kv.get_double(prefix + ".link_slope");
  cfg.K = static_cast<int>(kv.get_int(prefix + ".K"));
  RngStream unused(0);
  return build(ps, kv.get_or(prefix + ".param_prefix", prefix), cfg, unused);
}

// ---------------- AffineStandardizer ----------------

AffineStandardizer AffineStandardizer::fit(const Tensor& rows) {
  const std::int64_t n = rows.rows(), d = rows.cols();
  AffineStandardizer s;
  s.mean.assign(static_cast<std::size_t>(d), 0.0);
  s.sd.assign(static_cast<std::size_t>(d), 1.0);
  for (std::int64_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::int64_t i = 0; i < n; ++i) m += rows.at(i, j);
    m /= static_cast<double>(n);
    double v = 0.0;
    for (std::int64_t i = 0; i < n; ++i) v += (rows.at(i, j) - m) * (rows.at(i, j) - m);
    v = n > 1 ? v / static_cast<double>(n - 1) : 0.0;
    s.mean[static_cast<std::size_t>(j)] = m;
    s.sd[static_cast<std::size_t>(j)] = std::max(std::sqrt(v), 1e-8);
  }
  return s;
}

AffineStandardizer AffineStandardizer::identity(std::int64_t d) {
  AffineStandardizer s;
  s.mean.assign(static_cast<std::size_t>(d), 0.0);
  s.sd.assign(static_cast<std::size_t>(d), 1.0);
  return s;
}

Tensor AffineStandardizer::to_std(const Tensor& raw) const {
  Tensor out = raw;
  const std::int64_t d = static_cast<std::int64_t>(mean.size());
  if (raw.cols() != d) throw DimensionError("standardizer: width mismatch");
  for (std::int64_t i = 0; i < raw.rows(); ++i)
    for (std::int64_t j = 0; j < d; ++j)
      out.at(i, j) = (raw.at(i, j) - mean[static_cast<std::size_t>(j)]) / sd[static_cast<std::size_t>(j)];
  return out;
}

Tensor AffineStandardizer::to_raw(const Tensor& std_rows) const {
  Tensor out = std_rows;
  const std::int64_t d = static_cast<std::int64_t>(mean.size());
  if (std_rows.cols() != d) throw DimensionError("standardizer: width mismatch");
  for (std::int64_t i = 0; i < std_rows.rows(); ++i)
    for (std::int64_t j = 0; j < d; ++j)
      out.at(i, j) = std_rows.at(i, j) * sd[static_cast<std::size_t>(j)] + mean[static_cast<std::size_t>(j)];
  return out;
}

double AffineStandardizer::log_det() const {
  double s = 0.0;
  for (double x : sd) s += std::log(x);
  return s;
}

void AffineStandardizer::describe(KvFile& kv, const std::string& prefix) const {
  kv.set(prefix + ".dim", static_cast<std::int64_t>(mean.size()));
  for (std::size_t j = 0; j < mean.size(); ++j) {
    kv.set(prefix + ".mean" + std::to_string(j), mean[j]);
    kv.set(prefix + ".sd" + std::to_string(j), sd[j]);
  }
}

AffineStandardizer AffineStandardizer::from_descriptor(const KvFile& kv, const std::string& prefix) {
  AffineStandardizer s;
  const std::int64_t d = kv.get_int(prefix + ".dim");
  for (std::int64_t j = 0; j < d; ++j) {
    s.mean.push_back(kv.get_double(prefix + ".mean" + std::to_string(j)));
    s.sd.push_back(kv.get_double(prefix + ".sd" + std::to_string(j)));
  }
  return s;
}

}  // namespace sbi
