#pragma once

#include <string>
#include <vector>

#include "sbi/kvfile.hpp"
#include "sbi/tape.hpp"

namespace sbi {

// A fixed-(T,V) time-series panel; rows are time steps.
struct SeriesPanel {
  std::int64_t T = 0;
  std::int64_t V = 0;
  Tensor values;  // T x V

  static SeriesPanel make(std::int64_t T, std::int64_t V);
  std::vector<double> flat() const { return values.v; }  // row-major, time-major
};

// Per-variable affine rescaling of panels, fit on round-1 simulations and then
// applied to both simulated and observed data.
struct PanelStandardizer {
  std::vector<double> mean, sd;  // per variable

  static PanelStandardizer fit(const std::vector<SeriesPanel>& panels);
  static PanelStandardizer identity(std::int64_t V);
  void apply_flat(std::vector<double>& flat, std::int64_t V) const;
  void describe(KvFile& kv, const std::string& prefix) const;
  static PanelStandardizer from_descriptor(const KvFile& kv, const std::string& prefix);
};

enum class EmbedKind { Dense, Recurrent };

struct EmbedConfig {
  EmbedKind kind = EmbedKind::Dense;
  std::int64_t T = 0;
  std::int64_t V = 0;
  std::int64_t out_dim = 32;
  std::vector<std::int64_t> hidden = {64, 64};  // dense trunk
  std::int64_t gru_hidden = 64;
  double slope = 0.01;
};

// Compresses a panel into the fixed-length context vector the flow or
// classifier conditions on. Trained jointly with its consumer: gradients flow
// through the context.
class EmbeddingNet {
 public:
  EmbeddingNet() = default;
  EmbeddingNet(ParamStore& ps, const std::string& prefix, EmbedConfig cfg, RngStream& init_rng);

  // flat_panels: [B, T*V] standardized panels, time-major rows.
  // The dense head requires T to match the configured panel length; the
  // recurrent head accepts any T >= 1 (width inferred from V).
  Var forward(Tape& t, ParamStore& ps, Var flat_panels) const;
  Var forward_with_T(Tape& t, ParamStore& ps, Var flat_panels, std::int64_t T) const;

  Tensor embed_plain(const ParamStore& ps, const Tensor& flat_panels, std::int64_t T = -1) const;

  std::int64_t out_dim() const { return cfg_.out_dim; }
  const EmbedConfig& config() const { return cfg_; }

  void describe(KvFile& kv, const std::string& prefix) const;
  static EmbeddingNet from_descriptor(ParamStore& ps, const KvFile& kv, const std::string& prefix);

 private:
  EmbedConfig cfg_;
  std::string prefix_;
  std::vector<std::string> w_names_, b_names_;  // dense trunk or GRU gate blocks
};

}  // namespace sbi
