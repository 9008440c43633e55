#include "sbi/made.hpp"

#include <cmath>

namespace sbi {

MadeNet::MadeNet(ParamStore& ps, std::string prefix, MadeConfig cfg, RngStream& init_rng)
    : cfg_(std::move(cfg)), prefix_(std::move(prefix)) {
  const std::int64_t D = cfg_.dim;
  const std::int64_t in_dim = D + cfg_.ctx_dim;
  const std::int64_t out_dim = static_cast<std::int64_t>(cfg_.out_degrees.size());
  if (D < 1 || out_dim < 1) throw ContractViolation("MadeNet: empty config");

  // Input degrees: y_d has degree d+1, context columns degree 0.
  std::vector<int> in_deg(static_cast<std::size_t>(in_dim), 0);
  for (std::int64_t d = 0; d < D; ++d) in_deg[static_cast<std::size_t>(d)] = static_cast<int>(d) + 1;

  // Hidden degrees cycle over [lo, D-1]. With a context attached lo = 0, so
  // some hidden units carry context only and even coordinate 1 can condition
  // on it. Degree-0 units see no y columns at all.
  std::vector<int> hid_deg(static_cast<std::size_t>(cfg_.width), 0);
  const int lo = cfg_.ctx_dim > 0 ? 0 : 1;
  const int span = std::max(static_cast<int>(D) - lo, 1);
  for (std::int64_t k = 0; k < cfg_.width; ++k)
    hid_deg[static_cast<std::size_t>(k)] = std::min(lo + static_cast<int>(k % span), static_cast<int>(D) - 1);

  std::vector<int> prev_deg = in_deg;
  std::int64_t prev_dim = in_dim;
  for (int l = 0; l < cfg_.depth; ++l) {
    auto mask = std::make_shared<Tensor>(Tensor::zeros({cfg_.width, prev_dim}));
    for (std::int64_t r = 0; r < cfg_.width; ++r)
      for (std::int64_t c = 0; c < prev_dim; ++c)
        if (hid_deg[static_cast<std::size_t>(r)] >= prev_deg[static_cast<std::size_t>(c)]) mask->at(r, c) = 1.0;
    masks_.push_back(std::move(mask));
    const double sd = std::sqrt(2.0 / static_cast<double>(prev_dim));
    w_names_.push_back(prefix_ + ".W" + std::to_string(l));
    b_names_.push_back(prefix_ + ".b" + std::to_string(l));
    ensure_block(ps, w_names_.back(), Tensor::randn({cfg_.width, prev_dim}, init_rng, sd));
    ensure_block(ps, b_names_.back(), Tensor::zeros({cfg_.width}));
    prev_deg = hid_deg;
    prev_dim = cfg_.width;
  }

  // Output connects strictly below its degree; zero-initialized so a fresh
  // layer starts at its neutral pseudo-parameters.
  auto mask = std::make_shared<Tensor>(Tensor::zeros({out_dim, prev_dim}));
  for (std::int64_t r = 0; r < out_dim; ++r)
    for (std::int64_t c = 0; c < prev_dim; ++c)
      if (cfg_.out_degrees[static_cast<std::size_t>(r)] > prev_deg[static_cast<std::size_t>(c)]) mask->at(r, c) = 1.0;
  masks_.push_back(std::move(mask));
  w_names_.push_back(prefix_ + ".Wout");
  b_names_.push_back(prefix_ + ".bout");
  ensure_block(ps, w_names_.back(), Tensor::zeros({out_dim, prev_dim}));
  ensure_block(ps, b_names_.back(), Tensor::zeros({out_dim}));
}

void MadeNet::ensure_block(ParamStore& ps, const std::string& name, Tensor init) {
  // Checkpoint loads rebuild the architecture over an existing store; the
  // block must then match the descriptor's shape.
  if (ps.has(name)) {
    if (ps.value(name).shape != init.shape)
      throw ContractViolation("MadeNet: block " + name + " has shape " + ps.value(name).shape_str() +
                              ", expected " + init.shape_str());
    return;
  }
  ps.add(name, std::move(init));
}

Var MadeNet::forward(Tape& t, ParamStore& ps, Var y, Var ctx) const {
  if (t.val(y).cols() != cfg_.dim) throw DimensionError("MadeNet: y has wrong width");
  Var h = y;
  if (cfg_.ctx_dim > 0) {
    if (!ctx.valid() || t.val(ctx).cols() != cfg_.ctx_dim) throw DimensionError("MadeNet: ctx has wrong width");
    h = t.concat_cols({y, ctx});
  }
  const std::size_t L = w_names_.size();
  for (std::size_t l = 0; l < L; ++l) {
    h = t.linear(h, t.param(ps, w_names_[l]), t.param(ps, b_names_[l]), masks_[l]);
    if (l + 1 < L) h = t.leaky_relu(h, cfg_.hidden_slope);
  }
  return h;
}

}  // namespace sbi
