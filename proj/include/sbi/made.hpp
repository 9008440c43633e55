#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sbi/tape.hpp"

namespace sbi {

// Masked feed-forward conditioner shared by all coordinates of one
// autoregressive layer. Output column c carries pseudo-parameters for the
// coordinate out_degrees[c]-1 and depends only on y-coordinates with a
// strictly smaller degree, plus every context column (degree 0). The masks
// hold exact zeros, so the autoregressive property is exact, not approximate.
struct MadeConfig {
  std::int64_t dim = 0;      // autoregressive input coordinates
  std::int64_t ctx_dim = 0;  // unmasked conditioning inputs
  std::int64_t width = 50;
  int depth = 2;  // hidden layers
  double hidden_slope = 0.01;
  std::vector<int> out_degrees;  // 1-based degree per output column
};

class MadeNet {
 public:
  MadeNet() = default;
  MadeNet(ParamStore& ps, std::string prefix, MadeConfig cfg, RngStream& init_rng);

  // y: [B,dim], ctx: [B,ctx_dim] or invalid Var when ctx_dim == 0.
  Var forward(Tape& t, ParamStore& ps, Var y, Var ctx) const;

  const MadeConfig& config() const { return cfg_; }

 private:
  static void ensure_block(ParamStore& ps, const std::string& name, Tensor init);

  MadeConfig cfg_;
  std::string prefix_;
  std::vector<std::string> w_names_, b_names_;
  std::vector<std::shared_ptr<const Tensor>> masks_;
};

}  // namespace sbi
