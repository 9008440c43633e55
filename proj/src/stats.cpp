#include "sbi/stats.hpp"

#include <algorithm>
#include <cmath>

#include "sbi/common.hpp"

namespace sbi {

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sd_of(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double quantile_of(std::vector<double> x, double q) {
  if (x.empty()) throw ContractViolation("quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * x[lo] + w * x[hi];
}

double lag1_autocorr(const std::vector<double>& x) {
  const double m = mean_of(x);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t + 1 < x.size(); ++t) num += (x[t] - m) * (x[t + 1] - m);
  for (double v : x) den += (v - m) * (v - m);
  return num / den;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] <= b[ib])
      ++ia;
    else
      ++ib;
    d = std::max(d, std::fabs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  return d;
}

double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    d = std::max(d, std::fabs(F - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - F));
  }
  return d;
}

double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::fabs(term) < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * p, 0.0, 1.0);
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integral of |F_a - F_b| over a merged grid of quantile levels.
  const std::size_t na = a.size(), nb = b.size();
  std::size_t ia = 0, ib = 0;
  double w = 0.0;
  double prev = std::min(a[0], b[0]);
  while (ia < na || ib < nb) {
    const double xa = ia < na ? a[ia] : 1e308;
    const double xb = ib < nb ? b[ib] : 1e308;
    const double x = std::min(xa, xb);
    const double fa = static_cast<double>(ia) / static_cast<double>(na);
    const double fb = static_cast<double>(ib) / static_cast<double>(nb);
    w += std::fabs(fa - fb) * (x - prev);
    prev = x;
    if (xa <= xb)
      ++ia;
    else
      ++ib;
  }
  return w;
}

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw ContractViolation("gelman_rubin needs at least 2 chains");
  const double n = static_cast<double>(chains[0].size());
  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = mean_of(chains[j]);
    const double s = sd_of(chains[j]);
    vars[j] = s * s;
  }
  const double grand = mean_of(means);
  double B = 0.0;
  for (double mu : means) B += (mu - grand) * (mu - grand);
  B *= n / static_cast<double>(m - 1);
  const double W = mean_of(vars);
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

namespace {
// Regularized lower incomplete gamma P(a,x) by series / continued fraction.
double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw ContractViolation("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // Lentz continued fraction for Q(a,x)
  double b = x + 1.0 - a;
  double c = 1e308;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  const double q = std::exp(-x + a * std::log(x) - gln) * h;
  return 1.0 - q;
}
}  // namespace

double chi2_p_value(double stat, double dof) {
  if (stat <= 0.0) return 1.0;
  return 1.0 - gamma_p(dof / 2.0, stat / 2.0);
}

Histogram histogram(const std::vector<double>& x, double lo, double hi, int bins) {
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  h.counts.assign(static_cast<std::size_t>(bins), 0.0);
  for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  for (double v : x) {
    if (v < lo || v > hi) continue;
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    h.counts[static_cast<std::size_t>(b)] += 1.0;
  }
  return h;
}

}  // namespace sbi
