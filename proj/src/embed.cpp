#include "sbi/embed.hpp"

#include <cmath>

namespace sbi {

SeriesPanel SeriesPanel::make(std::int64_t T, std::int64_t V) {
  SeriesPanel p;
  p.T = T;
  p.V = V;
  p.values = Tensor::zeros({T, V});
  return p;
}

PanelStandardizer PanelStandardizer::fit(const std::vector<SeriesPanel>& panels) {
  if (panels.empty()) throw ContractViolation("PanelStandardizer: no panels");
  const std::int64_t V = panels[0].V;
  PanelStandardizer s;
  s.mean.assign(static_cast<std::size_t>(V), 0.0);
  s.sd.assign(static_cast<std::size_t>(V), 1.0);
  std::vector<double> count(static_cast<std::size_t>(V), 0.0);
  for (const auto& p : panels)
    for (std::int64_t t = 0; t < p.T; ++t)
      for (std::int64_t v = 0; v < V; ++v) {
        s.mean[static_cast<std::size_t>(v)] += p.values.at(t, v);
        count[static_cast<std::size_t>(v)] += 1.0;
      }
  for (std::int64_t v = 0; v < V; ++v) s.mean[static_cast<std::size_t>(v)] /= count[static_cast<std::size_t>(v)];
  std::vector<double> acc(static_cast<std::size_t>(V), 0.0);
  for (const auto& p : panels)
    for (std::int64_t t = 0; t < p.T; ++t)
      for (std::int64_t v = 0; v < V; ++v) {
        const double d = p.values.at(t, v) - s.mean[static_cast<std::size_t>(v)];
        acc[static_cast<std::size_t>(v)] += d * d;
      }
  for (std::int64_t v = 0; v < V; ++v)
    s.sd[static_cast<std::size_t>(v)] = std::max(std::sqrt(acc[static_cast<std::size_t>(v)] / std::max(count[static_cast<std::size_t>(v)] - 1.0, 1.0)), 1e-8);
  return s;
}

PanelStandardizer PanelStandardizer::identity(std::int64_t V) {
  PanelStandardizer s;
  s.mean.assign(static_cast<std::size_t>(V), 0.0);
  s.sd.assign(static_cast<std::size_t>(V), 1.0);
  return s;
}

void PanelStandardizer::apply_flat(std::vector<double>& flat, std::int64_t V) const {
  if (static_cast<std::int64_t>(mean.size()) != V) throw DimensionError("PanelStandardizer: variable count mismatch");
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const std::size_t v = i % static_cast<std::size_t>(V);
    flat[i] = (flat[i] - mean[v]) / sd[v];
  }
}

void PanelStandardizer::describe(KvFile& kv, const std::string& prefix) const {
  kv.set(prefix + ".vars", static_cast<std::int64_t>(mean.size()));
  for (std::size_t v = 0; v < mean.size(); ++v) {
    kv.set(prefix + ".mean" + std::to_string(v), mean[v]);
    kv.set(prefix + ".sd" + std::to_string(v), sd[v]);
  }
}

PanelStandardizer PanelStandardizer::from_descriptor(const KvFile& kv, const std::string& prefix) {
  PanelStandardizer s;
  const std::int64_t V = kv.get_int(prefix + ".vars");
  for (std::int64_t v = 0; v < V; ++v) {
    s.mean.push_back(kv.get_double(prefix + ".mean" + std::to_string(v)));
    s.sd.push_back(kv.get_double(prefix + ".sd" + std::to_string(v)));
  }
  return s;
}

namespace {
void ensure_block(ParamStore& ps, const std::string& name, Tensor init) {
  if (ps.has(name)) {
    if (ps.value(name).shape != init.shape) throw ContractViolation("EmbeddingNet: shape mismatch for " + name);
    return;
  }
  ps.add(name, std::move(init));
}
}  // namespace

EmbeddingNet::EmbeddingNet(ParamStore& ps, const std::string& prefix, EmbedConfig cfg, RngStream& init_rng)
    : cfg_(std::move(cfg)), prefix_(prefix) {
  if (cfg_.V < 1) throw ContractViolation("EmbeddingNet: V must be positive");
  if (cfg_.kind == EmbedKind::Dense) {
    if (cfg_.T < 1) throw ContractViolation("EmbeddingNet: dense head needs fixed T");
    std::int64_t prev = cfg_.T * cfg_.V;
    for (std::size_t l = 0; l < cfg_.hidden.size(); ++l) {
      const std::int64_t w = cfg_.hidden[l];
      w_names_.push_back(prefix + ".W" + std::to_string(l));
      b_names_.push_back(prefix + ".b" + std::to_string(l));
      ensure_block(ps, w_names_.back(), Tensor::randn({w, prev}, init_rng, std::sqrt(2.0 / static_cast<double>(prev))));
      ensure_block(ps, b_names_.back(), Tensor::zeros({w}));
      prev = w;
    }
    w_names_.push_back(prefix + ".Wout");
    b_names_.push_back(prefix + ".bout");
    ensure_block(ps, w_names_.back(), Tensor::randn({cfg_.out_dim, prev}, init_rng, std::sqrt(1.0 / static_cast<double>(prev))));
    ensure_block(ps, b_names_.back(), Tensor::zeros({cfg_.out_dim}));
  } else {
    const std::int64_t H = cfg_.gru_hidden;
    const std::int64_t in = cfg_.V + H;
    const double sd = std::sqrt(1.0 / static_cast<double>(in));
    for (const char* gate : {"r", "z", "n"}) {
      w_names_.push_back(prefix + ".W" + gate);
      b_names_.push_back(prefix + ".b" + gate);
      ensure_block(ps, w_names_.back(), Tensor::randn({H, in}, init_rng, sd));
      ensure_block(ps, b_names_.back(), Tensor::zeros({H}));
    }
    w_names_.push_back(prefix + ".Wout");
    b_names_.push_back(prefix + ".bout");
    ensure_block(ps, w_names_.back(), Tensor::randn({cfg_.out_dim, H}, init_rng, std::sqrt(1.0 / static_cast<double>(H))));
    ensure_block(ps, b_names_.back(), Tensor::zeros({cfg_.out_dim}));
  }
}

Var EmbeddingNet::forward(Tape& t, ParamStore& ps, Var flat_panels) const { return forward_with_T(t, ps, flat_panels, cfg_.T); }

Var EmbeddingNet::forward_with_T(Tape& t, ParamStore& ps, Var flat_panels, std::int64_t T) const {
  const Tensor& x = t.val(flat_panels);
  if (cfg_.kind == EmbedKind::Dense) {
    if (x.cols() != cfg_.T * cfg_.V)
      throw DimensionError("dense embedding: panel length " + std::to_string(x.cols()) + " != configured " +
                           std::to_string(cfg_.T * cfg_.V));
    Var h = flat_panels;
    for (std::size_t l = 0; l + 1 < w_names_.size(); ++l)
      h = t.leaky_relu(t.linear(h, t.param(ps, w_names_[l]), t.param(ps, b_names_[l])), cfg_.slope);
    return t.linear(h, t.param(ps, w_names_.back()), t.param(ps, b_names_.back()));
  }
  // Recurrent head: scan a gated cell over time; any T >= 1.
  if (T < 1 || x.cols() != T * cfg_.V) throw DimensionError("recurrent embedding: panel length does not match T*V");
  const std::int64_t B = x.rows(), H = cfg_.gru_hidden;
  Var Wr = t.param(ps, w_names_[0]), Wz = t.param(ps, w_names_[1]), Wn = t.param(ps, w_names_[2]);
  Var br = t.param(ps, b_names_[0]), bz = t.param(ps, b_names_[1]), bn = t.param(ps, b_names_[2]);
  Var h = t.input(Tensor::zeros({B, H}));
  Var one = t.input(Tensor::full({B, H}, 1.0));
  for (std::int64_t step = 0; step < T; ++step) {
    Var xt = t.slice_cols(flat_panels, step * cfg_.V, (step + 1) * cfg_.V);
    Var cat = t.concat_cols({xt, h});
    Var r = t.sigmoid(t.linear(cat, Wr, br));
    Var zg = t.sigmoid(t.linear(cat, Wz, bz));
    Var cat2 = t.concat_cols({xt, t.mul(r, h)});
    Var n = t.tanh_op(t.linear(cat2, Wn, bn));
    h = t.add(t.mul(t.sub(one, zg), h), t.mul(zg, n));
  }
  return t.linear(h, t.param(ps, w_names_.back()), t.param(ps, b_names_.back()));
}

Tensor EmbeddingNet::embed_plain(const ParamStore& ps, const Tensor& flat_panels, std::int64_t T) const {
  ParamStore& mps = const_cast<ParamStore&>(ps);
  Tape t(false);
  Var out = forward_with_T(t, mps, t.input(flat_panels), T < 0 ? cfg_.T : T);
  return t.val(out);
}

void EmbeddingNet::describe(KvFile& kv, const std::string& prefix) const {
  kv.set(prefix + ".kind", std::string(cfg_.kind == EmbedKind::Dense ? "dense" : "recurrent"));
  kv.set(prefix + ".T", cfg_.T);
  kv.set(prefix + ".V", cfg_.V);
  kv.set(prefix + ".out_dim", cfg_.out_dim);
  kv.set(prefix + ".gru_hidden", cfg_.gru_hidden);
  kv.set(prefix + ".slope", cfg_.slope);
  std::string hid;
  for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) hid += (i ? "," : "") + std::to_string(cfg_.hidden[i]);
  kv.set(prefix + ".hidden", hid);
}

EmbeddingNet EmbeddingNet::from_descriptor(ParamStore& ps, const KvFile& kv, const std::string& prefix) {
  EmbedConfig cfg;
  cfg.kind = kv.get(prefix + ".kind") == "dense" ? EmbedKind::Dense : EmbedKind::Recurrent;
  cfg.T = kv.get_int(prefix + ".T");
  cfg.V = kv.get_int(prefix + ".V");
  cfg.out_dim = kv.get_int(prefix + ".out_dim");
  cfg.gru_hidden = kv.get_int(prefix + ".gru_hidden");
  cfg.slope = kv.get_double(prefix + ".slope");
  cfg.hidden.clear();
  std::string hid = kv.get(prefix + ".hidden");
  std::size_t pos = 0;
  while (pos < hid.size()) {
    std::size_t comma = hid.find(',', pos);
    if (comma == std::string::npos) comma = hid.size();
    if (comma > pos) cfg.hidden.push_back(std::strtoll(hid.substr(pos, comma - pos).c_str(), nullptr, 10));
    pos = comma + 1;
  }
  RngStream unused(0);
  return EmbeddingNet(ps, prefix, cfg, unused);
}

}  // namespace sbi
