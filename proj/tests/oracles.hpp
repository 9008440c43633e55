#pragma once

// Test-side oracles, independent of the library implementation paths they
// check: finite-difference Jacobians, brute-force determinants, quadrature,
// kernel density estimates and grid-posterior references.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

using VecFn = std::function<std::vector<double>(const std::vector<double>&)>;

// Central-difference Jacobian J[i][j] = d f_i / d x_j.
inline std::vector<std::vector<double>> fd_jacobian(const VecFn& f, std::vector<double> x, double eps) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> J;
  const std::size_t m = f(x).size();
  J.assign(m, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const double keep = x[j];
    x[j] = keep + eps;
    auto fp = f(x);
    x[j] = keep - eps;
    auto fm = f(x);
    x[j] = keep;
    for (std::size_t i = 0; i < m; ++i) J[i][j] = (fp[i] - fm[i]) / (2.0 * eps);
  }
  return J;
}

// log|det A| by Gaussian elimination with partial pivoting.
inline double log_abs_det(std::vector<std::vector<double>> A) {
  const std::size_t n = A.size();
  double acc = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(A[r][c]) > std::fabs(A[p][c])) p = r;
    if (A[p][c] == 0.0) return -1e308;
    if (p != c) std::swap(A[p], A[c]);
    acc += std::log(std::fabs(A[c][c]));
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
    }
  }
  return acc;
}

// Composite Simpson rule over [lo,hi]; npts must be odd.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int npts) {
  if (npts % 2 == 0) ++npts;
  const double h = (hi - lo) / (npts - 1);
  double s = f(lo) + f(hi);
  for (int i = 1; i < npts - 1; ++i) s += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Gaussian product-kernel KDE log-density in d dimensions, Scott bandwidth.
struct Kde {
  std::vector<std::vector<double>> pts;  // n x d
  std::vector<double> h;                 // per-dim bandwidth

  static Kde fit(const std::vector<std::vector<double>>& pts) {
    Kde k;
    k.pts = pts;
    const std::size_t n = pts.size(), d = pts[0].size();
    k.h.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
      double m = 0.0, v = 0.0;
      for (const auto& p : pts) m += p[j];
      m /= static_cast<double>(n);
      for (const auto& p : pts) v += (p[j] - m) * (p[j] - m);
      v /= static_cast<double>(n - 1);
      k.h[j] = std::sqrt(v) * std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
    }
    return k;
  }

  double log_pdf(const std::vector<double>& x) const {
    const std::size_t n = pts.size(), d = x.size();
    double lc = 0.0;
    for (std::size_t j = 0; j < d; ++j) lc -= std::log(h[j]) + 0.5 * std::log(2.0 * M_PI);
    double mx = -1e308;
    std::vector<double> ex(n);
    for (std::size_t i = 0; i < n; ++i) {
      double q = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double z = (x[j] - pts[i][j]) / h[j];
        q += z * z;
      }
      ex[i] = -0.5 * q;
      mx = std::max(mx, ex[i]);
    }
    double s = 0.0;
    for (double e : ex) s += std::exp(e - mx);
    return lc + mx + std::log(s) - std::log(static_cast<double>(n));
  }
};

// Posterior of a scalar location parameter with iid N(theta,sigma^2) data and
// a uniform box prior, tabulated on a fine grid.
struct GridPosterior {
  std::vector<double> grid, pdf, cdf;
  double mean = 0.0, sd = 0.0;

  static GridPosterior gaussian_mean(const std::vector<double>& obs, double sigma, double lo, double hi,
                                     int npts = 4001) {
    GridPosterior g;
    g.grid.resize(npts);
    g.pdf.resize(npts);
    const double step = (hi - lo) / (npts - 1);
    double mx = -1e308;
    for (int i = 0; i < npts; ++i) {
      const double th = lo + i * step;
      g.grid[i] = th;
      double ll = 0.0;
      for (double x : obs) ll += -0.5 * (x - th) * (x - th) / (sigma * sigma);
      g.pdf[i] = ll;
      mx = std::max(mx, ll);
    }
    double z = 0.0;
    for (int i = 0; i < npts; ++i) {
      g.pdf[i] = std::exp(g.pdf[i] - mx);
      z += g.pdf[i] * step;
    }
    for (auto& p : g.pdf) p /= z;
    g.cdf.resize(npts);
    double acc = 0.0;
    for (int i = 0; i < npts; ++i) {
      acc += g.pdf[i] * step;
      g.cdf[i] = std::min(acc, 1.0);
    }
    for (int i = 0; i < npts; ++i) g.mean += g.grid[i] * g.pdf[i] * step;
    for (int i = 0; i < npts; ++i) g.sd += (g.grid[i] - g.mean) * (g.grid[i] - g.mean) * g.pdf[i] * step;
    g.sd = std::sqrt(g.sd);
    return g;
  }

  double cdf_at(double x) const {
    if (x <= grid.front()) return 0.0;
    if (x >= grid.back()) return 1.0;
    const double step = grid[1] - grid[0];
    const std::size_t i = static_cast<std::size_t>((x - grid.front()) / step);
    const std::size_t j = std::min(i + 1, grid.size() - 1);
    const double w = (x - grid[i]) / step;
    return (1.0 - w) * cdf[i] + w * cdf[j];
  }
};

// log N(y; mean, cov) by dense Cholesky; the brute-force reference for the
// Kalman recursion.
inline double dense_gaussian_loglik(const std::vector<double>& y, const std::vector<double>& mean,
                                    std::vector<std::vector<double>> cov) {
  const std::size_t n = y.size();
  // in-place lower Cholesky
  for (std::size_t j = 0; j < n; ++j) {
    double d = cov[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= cov[j][k] * cov[j][k];
    if (!(d > 0.0)) throw std::runtime_error("dense oracle: covariance not PD");
    cov[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = cov[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= cov[i][k] * cov[j][k];
      cov[i][j] = s / cov[j][j];
    }
  }
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = y[i] - mean[i];
  for (std::size_t i = 0; i < n; ++i) {
    double s = e[i];
    for (std::size_t k = 0; k < i; ++k) s -= cov[i][k] * e[k];
    e[i] = s / cov[i][i];
  }
  double quad = 0.0, logdet = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    quad += e[i] * e[i];
    logdet += 2.0 * std::log(cov[i][i]);
  }
  const double ln2pi = 1.8378770664093454835606594728112;
  return -0.5 * (static_cast<double>(n) * ln2pi + logdet + quad);
}

// Dense observation moments of a scalar-state linear-Gaussian SSM:
//   x1 ~ N(m0, s0), x_t = a x_{t-1} + w, y_t = c x_t + v.
struct ScalarSsmJoint {
  std::vector<double> mean;
  std::vector<std::vector<double>> cov;

  static ScalarSsmJoint build(double a, double c, double q, double r, double m0, double s0, std::size_t T) {
    ScalarSsmJoint out;
    std::vector<double> xm(T), P(T);
    xm[0] = m0;
    P[0] = s0;
    for (std::size_t t = 1; t < T; ++t) {
      xm[t] = a * xm[t - 1];
      P[t] = a * a * P[t - 1] + q;
    }
    out.mean.resize(T);
    out.cov.assign(T, std::vector<double>(T, 0.0));
    for (std::size_t t = 0; t < T; ++t) out.mean[t] = c * xm[t];
    for (std::size_t s = 0; s < T; ++s)
      for (std::size_t t = s; t < T; ++t) {
        double cx = P[s];  // cov(x_t, x_s) = a^(t-s) P_s
        for (std::size_t k = s; k < t; ++k) cx *= a;
        double cy = c * c * cx;
        if (t == s) cy += r;
        out.cov[t][s] = out.cov[s][t] = cy;
      }
    return out;
  }
};

}  // namespace oracle
