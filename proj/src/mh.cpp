#include "sbi/mh.hpp"

#include <cmath>

#include "sbi/csvio.hpp"

namespace sbi {

std::vector<double> Chain::column(std::int64_t j) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(draws.rows()));
  for (std::int64_t i = 0; i < draws.rows(); ++i) out.push_back(draws.at(i, j));
  return out;
}

Chain mh_sample(const LogTarget& log_target, const std::vector<double>& init, std::int64_t steps,
                const std::vector<double>& step_scales, RngStream& rng) {
  const std::int64_t dim = static_cast<std::int64_t>(init.size());
  if (static_cast<std::int64_t>(step_scales.size()) != dim) throw ContractViolation("mh_sample: scale size mismatch");
  std::vector<double> cur = init;
  double cur_ld = log_target(cur);
  if (!std::isfinite(cur_ld) || cur_ld <= kLogZero / 2)
    throw ContractViolation("mh_sample: log target not finite at the initial point");
  Chain chain;
  chain.draws = Tensor::zeros({steps, dim});
  chain.log_density.reserve(static_cast<std::size_t>(steps));
  std::vector<double> prop(static_cast<std::size_t>(dim));
  for (std::int64_t s = 0; s < steps; ++s) {
    for (std::int64_t j = 0; j < dim; ++j)
      prop[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j)] + step_scales[static_cast<std::size_t>(j)] * rng.gaussian();
    const double prop_ld = log_target(prop);
    const double u = rng.uniform();
    if (std::log(std::max(u, 1e-300)) < prop_ld - cur_ld) {
      cur = prop;
      cur_ld = prop_ld;
      ++chain.accepted;
    }
    for (std::int64_t j = 0; j < dim; ++j) chain.draws.at(s, j) = cur[static_cast<std::size_t>(j)];
    chain.log_density.push_back(cur_ld);
  }
  return chain;
}

Chain mh_sample(const LogTarget& log_target, const std::vector<double>& init, std::int64_t steps, double step_scale,
                RngStream& rng) {
  return mh_sample(log_target, init, steps, std::vector<double>(init.size(), step_scale), rng);
}

namespace {

// Burn-in with block-wise scale adaptation toward the target acceptance, then
// a fixed-scale sampling phase.
Chain adaptive_mh(const LogTarget& log_target, const std::vector<double>& init, const UniformBoxPrior& prior,
                  const MhConfig& cfg, RngStream& rng) {
  const std::int64_t dim = prior.dim();
  std::vector<double> scales(static_cast<std::size_t>(dim));
  for (std::int64_t j = 0; j < dim; ++j)
    scales[static_cast<std::size_t>(j)] = prior.width(static_cast<std::size_t>(j)) * cfg.step_scale;

  std::vector<double> cur = init;
  double cur_ld = log_target(cur);
  if (cur_ld <= kLogZero / 2) throw ContractViolation("mh: zero density at the initial point");

  Chain chain;
  chain.step_scale_history = scales;
  std::vector<double> prop(static_cast<std::size_t>(dim));
  std::int64_t window_accepts = 0;
  for (std::int64_t s = 0; s < cfg.burn_in; ++s) {
    for (std::int64_t j = 0; j < dim; ++j)
      prop[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j)] + scales[static_cast<std::size_t>(j)] * rng.gaussian();
    const double prop_ld = log_target(prop);
    if (std::log(std::max(rng.uniform(), 1e-300)) < prop_ld - cur_ld) {
      cur = prop;
      cur_ld = prop_ld;
      ++window_accepts;
    }
    if ((s + 1) % cfg.adapt_interval == 0) {
      const double rate = static_cast<double>(window_accepts) / static_cast<double>(cfg.adapt_interval);
      const double factor = std::clamp(std::exp(1.5 * (rate - cfg.target_accept)), 0.5, 2.0);
      for (auto& sc : scales) sc *= factor;
      for (double sc : scales) chain.step_scale_history.push_back(sc);
      window_accepts = 0;
    }
  }

  Chain sampled = mh_sample(log_target, cur, cfg.steps, scales, rng);
  sampled.step_scale_history = std::move(chain.step_scale_history);
  if (sampled.acceptance_rate() < cfg.min_accept)
    throw NumericError("mh: acceptance rate " + std::to_string(sampled.acceptance_rate()) +
                       " collapsed below " + std::to_string(cfg.min_accept) + " after adaptation");
  return sampled;
}

}  // namespace

Chain mh_posterior(const SsmBuilder& builder, const UniformBoxPrior& prior, const SeriesPanel& panel,
                   const MhConfig& cfg, RngStream& rng) {
  LogTarget target = [&](const std::vector<double>& theta) -> double {
    const double lp = prior.log_pdf(theta);
    if (lp <= kLogZero / 2) return kLogZero;
    try {
      return lp + kalman_loglik(builder(theta), panel);
    } catch (const SimulationFailure&) {
      return kLogZero;
    } catch (const NumericError&) {
      return kLogZero;
    }
  };
  return adaptive_mh(target, prior.center(), prior, cfg, rng);
}

Chain mh_box_target(const LogTarget& log_target, const UniformBoxPrior& prior, const MhConfig& cfg, RngStream& rng) {
  LogTarget target = [&](const std::vector<double>& theta) -> double {
    if (!prior.inside(theta)) return kLogZero;
    return log_target(theta);
  };
  // start from the box center; fall back to prior draws if the density sits elsewhere
  std::vector<double> init = prior.center();
  if (target(init) <= kLogZero / 2) {
    for (int tries = 0; tries < 1000; ++tries) {
      Tensor draw = prior.sample(1, rng);
      init.assign(draw.v.begin(), draw.v.end());
      if (target(init) > kLogZero / 2) break;
    }
  }
  return adaptive_mh(target, init, prior, cfg, rng);
}

void export_chain(const Chain& chain, const std::vector<std::string>& names, const std::string& csv_path,
                  const std::string& manifest_path, KvFile extra) {
  CsvTable table;
  table.header = names;
  table.rows.reserve(static_cast<std::size_t>(chain.length()));
  for (std::int64_t i = 0; i < chain.length(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(chain.draws.cols()));
    for (std::int64_t j = 0; j < chain.draws.cols(); ++j) row[static_cast<std::size_t>(j)] = chain.draws.at(i, j);
    table.rows.push_back(std::move(row));
  }
  write_csv(csv_path, table);
  extra.set("chain.length", chain.length());
  extra.set("chain.acceptance_rate", chain.acceptance_rate());
  const std::size_t d = names.size();
  for (std::size_t j = 0; j < d && chain.step_scale_history.size() >= d; ++j)
    extra.set("chain.final_scale_" + names[j], chain.step_scale_history[chain.step_scale_history.size() - d + j]);
  extra.save(manifest_path);
}

}  // namespace sbi
